//! Evasion-rate and timing sweeps over `(algorithm, upsilon, k)` grids.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::{run_attack, Algorithm, AttackOutcome, AttackSpec};
use crate::error::{Error, Result};
use crate::nn::{Classifier, Dataset, NUM_CLASSES};

/// How batch runs pick the attack target for a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetingRule {
    /// `(label + 1) mod 10`
    #[default]
    NextClass,
}

impl TargetingRule {
    pub fn target_for(self, label: usize) -> usize {
        match self {
            TargetingRule::NextClass => (label + 1) % NUM_CLASSES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub upsilons: Vec<f32>,
    pub k_percents: Vec<f32>,
    pub sample_count: usize,
    pub targeting_rule: TargetingRule,
    pub rng_seed: u64,
    pub algorithms: Vec<Algorithm>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            upsilons: vec![10.0, 15.0, 20.0, 25.0],
            k_percents: vec![10.0, 15.0, 20.0, 30.0],
            sample_count: 200,
            targeting_rule: TargetingRule::NextClass,
            rng_seed: 0,
            algorithms: vec![Algorithm::Jsma, Algorithm::Fjsma],
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let in_range = |v: &f32| *v > 0.0 && *v <= 100.0;
        if let Some(bad) = self.upsilons.iter().find(|v| !in_range(v)) {
            return Err(Error::Argument(format!("upsilon {bad} is outside (0, 100]")));
        }
        if let Some(bad) = self.k_percents.iter().find(|v| !in_range(v)) {
            return Err(Error::Argument(format!("k percent {bad} is outside (0, 100]")));
        }
        if self.sample_count == 0 {
            return Err(Error::Argument("sample_count must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Argument("no algorithms selected".into()));
        }
        if self.upsilons.is_empty() {
            return Err(Error::Argument("no upsilon values given".into()));
        }
        if self.algorithms.contains(&Algorithm::Fjsma) && self.k_percents.is_empty() {
            return Err(Error::Argument("fjsma needs at least one k percent".into()));
        }
        Ok(())
    }

    /// Grid cells in report order: algorithms as configured, FJSMA expanded
    /// over `k_percents`, each over all upsilons.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &algorithm in &self.algorithms {
            let ks: Vec<Option<f32>> = match algorithm {
                Algorithm::Fjsma => self.k_percents.iter().copied().map(Some).collect(),
                _ => vec![None],
            };
            for k_percent in ks {
                for &upsilon in &self.upsilons {
                    cells.push(Cell {
                        algorithm,
                        upsilon,
                        k_percent,
                    });
                }
            }
        }
        cells
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub algorithm: Algorithm,
    pub upsilon: f32,
    pub k_percent: Option<f32>,
}

impl Cell {
    /// FGSM cells reuse upsilon as `epsilon = upsilon / 100`.
    pub fn spec(&self, target: usize) -> AttackSpec {
        match self.algorithm {
            Algorithm::Fgsm => AttackSpec::fgsm(self.upsilon / 100.0, Some(target)),
            Algorithm::Jsma => AttackSpec::jsma(target, self.upsilon),
            Algorithm::Fjsma => AttackSpec::fjsma(target, self.upsilon, self.k_percent.unwrap_or(100.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: Algorithm,
    pub upsilon: f32,
    pub k_percent: Option<f32>,
    pub evasion_rate: f64,
    pub mean_seconds: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Per-sample errors recorded as failures.
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl BenchReport {
    pub fn row(&self, algorithm: Algorithm, upsilon: f32, k_percent: Option<f32>) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.upsilon == upsilon && r.k_percent == k_percent)
    }
}

pub fn evasion_rate(outcomes: &[AttackOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Argument("evasion rate of an empty outcome list".into()));
    }
    let hits = outcomes.iter().filter(|o| o.success).count();
    Ok(hits as f64 / outcomes.len() as f64)
}

/// Test-split indices of the first `count` correctly classified images in an
/// order shuffled by `rng_seed`.
pub fn select_bench_seeds<C: Classifier + ?Sized>(
    model: &C,
    test: &Dataset,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..test.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let mut picked = Vec::with_capacity(count);
    for i in order {
        if picked.len() == count {
            break;
        }
        if model.forward(&test.images[i])?.argmax() == usize::from(test.labels[i]) {
            picked.push(i);
        }
    }
    if picked.len() < count {
        return Err(Error::Data(format!(
            "only {} correctly classified images available, {count} requested",
            picked.len()
        )));
    }
    Ok(picked)
}

pub fn run_sweep<C: Classifier + ?Sized>(model: &C, test: &Dataset, cfg: &SweepConfig) -> Result<BenchReport> {
    run_sweep_with(model, test, cfg, |_, _, _| {})
}

/// Runs the sweep, calling `observe(cell, seed_index, outcome)` after every
/// successful attack call. Attack errors are counted as failures and recorded
/// in `diagnostics`.
pub fn run_sweep_with<C, F>(model: &C, test: &Dataset, cfg: &SweepConfig, mut observe: F) -> Result<BenchReport>
where
    C: Classifier + ?Sized,
    F: FnMut(&Cell, usize, &AttackOutcome),
{
    cfg.validate()?;
    if test.is_empty() {
        return Err(Error::Argument("benchmark dataset is empty".into()));
    }
    let seeds = select_bench_seeds(model, test, cfg.sample_count, cfg.rng_seed)?;
    let mut report = BenchReport::default();
    for cell in cfg.cells() {
        let mut successes = 0usize;
        let mut seconds = 0.0f64;
        for &i in &seeds {
            let target = cfg.targeting_rule.target_for(usize::from(test.labels[i]));
            match run_attack(model, &test.images[i], &cell.spec(target)) {
                Ok(outcome) => {
                    seconds += outcome.elapsed_seconds;
                    successes += usize::from(outcome.success);
                    observe(&cell, i, &outcome);
                }
                Err(e) => report.diagnostics.push(format!(
                    "{} upsilon={} k={:?} seed {i}: {e}",
                    cell.algorithm.name(),
                    cell.upsilon,
                    cell.k_percent
                )),
            }
        }
        report.rows.push(BenchRow {
            algorithm: cell.algorithm,
            upsilon: cell.upsilon,
            k_percent: cell.k_percent,
            evasion_rate: successes as f64 / seeds.len() as f64,
            mean_seconds: seconds / seeds.len() as f64,
            sample_count: seeds.len(),
        });
    }
    Ok(report)
}

fn row_label(algorithm: Algorithm, k_percent: Option<f32>, metric: &str) -> String {
    match k_percent {
        Some(k) => format!("{} {metric} [k = {k}%]", algorithm.label()),
        None => format!("{} {metric}", algorithm.label()),
    }
}

/// Fixed-width table with one column per upsilon: evasion-rate rows first,
/// then mean-time rows, one per (algorithm, k).
pub fn format_table(report: &BenchReport) -> String {
    let mut upsilons: Vec<f32> = Vec::new();
    let mut series: Vec<(Algorithm, Option<f32>)> = Vec::new();
    for r in &report.rows {
        if !upsilons.contains(&r.upsilon) {
            upsilons.push(r.upsilon);
        }
        if !series.contains(&(r.algorithm, r.k_percent)) {
            series.push((r.algorithm, r.k_percent));
        }
    }
    let mut lines: Vec<(String, Vec<String>)> = Vec::new();
    for (metric, time) in [("Evasion Rate", false), ("Time", true)] {
        for &(alg, k) in &series {
            let mut label = row_label(alg, k, metric);
            if time {
                label.push_str(" (s)");
            }
            let cells = upsilons
                .iter()
                .map(|&u| match report.row(alg, u, k) {
                    Some(r) if time => format!("{:.3}", r.mean_seconds),
                    Some(r) => format!("{:.3}", r.evasion_rate),
                    None => "-".to_string(),
                })
                .collect();
            lines.push((label, cells));
        }
    }
    let header: Vec<String> = upsilons.iter().map(|u| format!("{u}%")).collect();
    let label_w = lines.iter().map(|l| l.0.len()).max().unwrap_or(0).max(1);
    let cell_w = header
        .iter()
        .chain(lines.iter().flat_map(|l| l.1.iter()))
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max(5);

    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "Υ");
    for h in &header {
        let _ = write!(out, " | {h:>cell_w$}");
    }
    out.push('\n');
    out.push_str(&"-".repeat(label_w));
    for _ in &header {
        let _ = write!(out, "-+-{}", "-".repeat(cell_w));
    }
    out.push('\n');
    for (label, cells) in &lines {
        let _ = write!(out, "{label:<label_w$}");
        for c in cells {
            let _ = write!(out, " | {c:>cell_w$}");
        }
        out.push('\n');
    }
    out
}

pub const CSV_HEADER: [&str; 6] = [
    "algorithm",
    "upsilon",
    "k_percent",
    "evasion_rate",
    "mean_seconds",
    "sample_count",
];

pub fn write_csv_to<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(report: &BenchReport, path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(report, File::create(path)?)
}

pub fn read_csv_from<R: Read>(input: R) -> Result<BenchReport> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::format(
            "csv header",
            Some(0),
            format!("unexpected header {header:?}"),
        ));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<BenchRow>, _>>()?;
    Ok(BenchReport {
        rows,
        diagnostics: Vec::new(),
    })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<BenchReport> {
    read_csv_from(File::open(path)?)
}
