//! Evasion attacks: FGSM, exhaustive-pair JSMA and the apriori FJSMA variant.
//!
//! Every attack is a pure function of `(model, seed image, spec)` apart from
//! the measured wall-clock time, so attacks can run concurrently against a
//! shared model.

mod fgsm;
mod jsma;
mod saliency;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::error::{Error, Result};
use crate::nn::{ClassProbs, Classifier, Image, NUM_CLASSES};

pub use fgsm::fgsm;
pub use jsma::{fjsma_attack, jsma_attack};
pub use saliency::{select_pair_apriori, select_pair_exhaustive, select_top_k, PairSearch, PairSelection, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fgsm,
    Jsma,
    Fjsma,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fgsm => "fgsm",
            Algorithm::Jsma => "jsma",
            Algorithm::Fjsma => "fjsma",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Fgsm => "FGSM",
            Algorithm::Jsma => "JSMA",
            Algorithm::Fjsma => "FJSMA",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fgsm" => Ok(Algorithm::Fgsm),
            "jsma" => Ok(Algorithm::Jsma),
            "fjsma" => Ok(Algorithm::Fjsma),
            other => Err(Error::Argument(format!(
                "unknown attack `{other}` (expected fgsm, jsma or fjsma)"
            ))),
        }
    }
}

/// Which way saliency attacks push the selected features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Drive features to 0; admissible pairs have `alpha < 0`, `beta > 0`.
    #[default]
    Decrease,
    /// Drive features to 1; admissible pairs have `alpha > 0`, `beta < 0`.
    Increase,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decrease" => Ok(Direction::Decrease),
            "increase" => Ok(Direction::Increase),
            other => Err(Error::Argument(format!("unknown direction `{other}`"))),
        }
    }
}

/// Whether saliency is computed from class probabilities or from logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaliencySource {
    #[default]
    Probabilities,
    Logits,
}

/// Parameters of one attack run.
///
/// `strength` is the L-infinity step `epsilon` in `[0, 1]` for FGSM, and the
/// L0 budget `upsilon` (percent of all features, in `(0, 100]`) for JSMA and
/// FJSMA. `k_percent` is FJSMA's apriori cut as a percent of the feature count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub algorithm: Algorithm,
    pub target: Option<usize>,
    pub strength: f32,
    pub k_percent: Option<f32>,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub saliency: SaliencySource,
}

impl AttackSpec {
    pub fn fgsm(epsilon: f32, target: Option<usize>) -> Self {
        AttackSpec {
            algorithm: Algorithm::Fgsm,
            target,
            strength: epsilon,
            k_percent: None,
            direction: Direction::default(),
            saliency: SaliencySource::default(),
        }
    }

    pub fn jsma(target: usize, upsilon: f32) -> Self {
        AttackSpec {
            algorithm: Algorithm::Jsma,
            target: Some(target),
            strength: upsilon,
            k_percent: None,
            direction: Direction::default(),
            saliency: SaliencySource::default(),
        }
    }

    pub fn fjsma(target: usize, upsilon: f32, k_percent: f32) -> Self {
        AttackSpec {
            algorithm: Algorithm::Fjsma,
            k_percent: Some(k_percent),
            ..AttackSpec::jsma(target, upsilon)
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.target {
            if t >= NUM_CLASSES {
                return Err(Error::Argument(format!("target {t} is outside 0..{NUM_CLASSES}")));
            }
        }
        match self.algorithm {
            Algorithm::Fgsm => {
                if !(0.0..=1.0).contains(&self.strength) {
                    return Err(Error::Argument(format!(
                        "fgsm strength (epsilon) must lie in [0, 1], got {}",
                        self.strength
                    )));
                }
                if self.k_percent.is_some() {
                    return Err(Error::Argument("k_percent only applies to fjsma".into()));
                }
            }
            Algorithm::Jsma | Algorithm::Fjsma => {
                if self.target.is_none() {
                    return Err(Error::Argument(format!(
                        "{} is a targeted attack; target is required",
                        self.algorithm.name()
                    )));
                }
                if !(self.strength > 0.0 && self.strength <= 100.0) {
                    return Err(Error::Argument(format!(
                        "{} strength (upsilon) must lie in (0, 100], got {}",
                        self.algorithm.name(),
                        self.strength
                    )));
                }
                match (self.algorithm, self.k_percent) {
                    (Algorithm::Fjsma, Some(k)) if k > 0.0 && k <= 100.0 => {}
                    (Algorithm::Fjsma, Some(k)) => {
                        return Err(Error::Argument(format!("k_percent must lie in (0, 100], got {k}")))
                    }
                    (Algorithm::Fjsma, None) => return Err(Error::Argument("fjsma requires k_percent".into())),
                    (_, Some(_)) => return Err(Error::Argument("k_percent only applies to fjsma".into())),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Maximum number of changed features: `floor(M * upsilon / 100)`.
    pub fn feature_budget(&self, features: usize) -> usize {
        (features as f64 * f64::from(self.strength) / 100.0).floor() as usize
    }

    /// FJSMA's apriori cut in features: `ceil(M * k_percent / 100)`.
    pub fn apriori_k(&self, features: usize) -> Option<usize> {
        self.k_percent
            .map(|k| (features as f64 * f64::from(k) / 100.0).ceil() as usize)
    }
}

/// Bookkeeping for one saliency iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IterationStats {
    /// Search-space size before the selection.
    pub gamma_len: usize,
    /// Effective apriori cut (`min(k, |gamma|)`) for FJSMA.
    pub k: Option<usize>,
    pub pairs_evaluated: u64,
    pub pair: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackOutcome {
    pub algorithm: Algorithm,
    pub target: Option<usize>,
    pub adversarial: Image,
    pub original_probs: ClassProbs,
    pub adversarial_probs: ClassProbs,
    /// Arg-max class of the seed image.
    pub original_class: usize,
    /// Arg-max class of the adversarial image.
    pub predicted: usize,
    pub success: bool,
    pub l0: usize,
    pub l2: f64,
    pub linf: f64,
    pub iterations: usize,
    pub elapsed_seconds: f64,
    /// One entry per saliency iteration (empty for FGSM).
    pub trace: Vec<IterationStats>,
}

impl AttackOutcome {
    /// Equality ignoring the measured time.
    pub fn same_result(&self, other: &AttackOutcome) -> bool {
        AttackOutcome {
            elapsed_seconds: 0.0,
            ..self.clone()
        } == AttackOutcome {
            elapsed_seconds: 0.0,
            ..other.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distances {
    pub l0: usize,
    pub l2: f64,
    pub linf: f64,
}

pub fn distances(x: &[f32], y: &[f32]) -> Result<Distances> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "cannot compare vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let mut d = Distances {
        l0: 0,
        l2: 0.0,
        linf: 0.0,
    };
    for (&a, &b) in x.iter().zip(y) {
        if a != b {
            d.l0 += 1;
            let diff = (f64::from(a) - f64::from(b)).abs();
            d.l2 += diff * diff;
            d.linf = d.linf.max(diff);
        }
    }
    d.l2 = d.l2.sqrt();
    Ok(d)
}

/// Success criterion: targeted attacks must hit the target, untargeted ones
/// must leave the original class.
pub(crate) fn is_success(target: Option<usize>, original_class: usize, predicted: usize) -> bool {
    match target {
        Some(t) => predicted == t,
        None => predicted != original_class,
    }
}

/// Assembles an outcome once the adversarial image is final.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish<C: Classifier + ?Sized>(
    model: &C,
    x: &Image,
    spec: &AttackSpec,
    original_probs: ClassProbs,
    adversarial: Image,
    adversarial_probs: Option<ClassProbs>,
    iterations: usize,
    trace: Vec<IterationStats>,
) -> Result<AttackOutcome> {
    let adversarial_probs = match adversarial_probs {
        Some(p) => p,
        None => model.forward(&adversarial)?,
    };
    let original_class = original_probs.argmax();
    let predicted = adversarial_probs.argmax();
    let d = distances(x.pixels(), adversarial.pixels())?;
    Ok(AttackOutcome {
        algorithm: spec.algorithm,
        target: spec.target,
        adversarial,
        original_probs,
        adversarial_probs,
        original_class,
        predicted,
        success: is_success(spec.target, original_class, predicted),
        l0: d.l0,
        l2: d.l2,
        linf: d.linf,
        iterations,
        elapsed_seconds: 0.0,
        trace,
    })
}

/// Validates `spec`, runs the matching attack and records its wall-clock time.
pub fn run_attack<C: Classifier + ?Sized>(model: &C, x: &Image, spec: &AttackSpec) -> Result<AttackOutcome> {
    spec.validate()?;
    let start = Instant::now();
    let mut outcome = match spec.algorithm {
        Algorithm::Fgsm => fgsm(model, x, spec),
        Algorithm::Jsma => jsma_attack(model, x, spec),
        Algorithm::Fjsma => fjsma_attack(model, x, spec),
    }?;
    outcome.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(outcome)
}
