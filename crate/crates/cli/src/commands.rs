use std::io;
use std::process::ExitCode;

use advplay_core::bench::{format_table, run_sweep_with, write_csv, SweepConfig, TargetingRule};
use advplay_core::mnist::{load_split, select_seeds};
use advplay_core::nn::{evaluate, load_model, save_model, train_with_progress, Architecture, Split, TrainConfig};
use advplay_core::{run_attack, AttackSpec, SaliencySource};
use advplay_service::{default_workers, router, AppState};
use serde_json::json;

use crate::render::side_by_side;
use crate::{AttackArgs, BenchArgs, ServeArgs, TrainArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] advplay_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("download failed: {0}")]
    Download(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(advplay_core::Error::Training(_)) => ExitCode::from(3),
            _ => ExitCode::from(2),
        }
    }
}

pub type CliResult = Result<ExitCode, CliError>;

pub fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values always serialize")
    );
}

pub fn train(a: TrainArgs) -> CliResult {
    let mut train_set = load_split(&a.data.data, Split::Train)?;
    let test_set = load_split(&a.data.data, Split::Test)?;
    if let Some(n) = a.limit {
        train_set = train_set.take(n);
    }
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        rng_seed: a.seed,
        architecture: if a.mlp { Architecture::Mlp } else { Architecture::Cnn },
    };
    let mut history = Vec::new();
    let net = train_with_progress(&train_set, &cfg, |s| {
        eprintln!(
            "epoch {}/{}: loss {:.4}, train accuracy {:.4}",
            s.epoch, cfg.epochs, s.mean_loss, s.train_accuracy
        );
        history.push(s);
    })?;
    save_model(&net, &a.out)?;
    let accuracy = evaluate(&net, &test_set)?;
    if a.json {
        print_json(&json!({
            "model": a.out,
            "architecture": cfg.architecture,
            "epochs": history,
            "test_accuracy": accuracy,
        }));
    } else {
        println!("test accuracy {accuracy:.4}");
        println!("wrote {}", a.out.display());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn attack(a: AttackArgs) -> CliResult {
    let spec = AttackSpec {
        algorithm: a.algorithm,
        target: a.target,
        strength: a.strength,
        k_percent: a.k_percent,
        direction: a.direction,
        saliency: SaliencySource::Probabilities,
    };
    spec.validate()?;
    let net = load_model(&a.model)?;
    let test = load_split(&a.data.data, Split::Test)?;
    let image = test.images.get(a.seed_index).ok_or_else(|| {
        CliError::Usage(format!(
            "--seed-index {} is out of range (test split has {} images)",
            a.seed_index,
            test.len()
        ))
    })?;
    let label = test.labels[a.seed_index];
    let outcome = run_attack(&net, image, &spec)?;

    if a.json {
        let mut value = serde_json::to_value(&outcome).expect("outcomes serialize");
        value["seed_index"] = json!(a.seed_index);
        value["label"] = json!(label);
        print_json(&value);
    } else {
        let p = |probs: &advplay_core::ClassProbs, c: usize| probs.0[c];
        println!("algorithm   {}", outcome.algorithm.name());
        println!("seed        #{} (label {label})", a.seed_index);
        match outcome.target {
            Some(t) => println!("target      {t}"),
            None => println!("target      any class but {}", outcome.original_class),
        }
        println!(
            "original    {} (p={:.4})",
            outcome.original_class,
            p(&outcome.original_probs, outcome.original_class)
        );
        println!(
            "predicted   {} (p={:.4})",
            outcome.predicted,
            p(&outcome.adversarial_probs, outcome.predicted)
        );
        println!("success     {}", if outcome.success { "yes" } else { "no" });
        println!("l0          {}", outcome.l0);
        println!("l2          {:.4}", outcome.l2);
        println!("linf        {:.4}", outcome.linf);
        println!("iterations  {}", outcome.iterations);
        println!("elapsed     {:.3} s", outcome.elapsed_seconds);
        println!();
        print!(
            "{}",
            side_by_side(
                image.pixels(),
                outcome.adversarial.pixels(),
                ("original", "adversarial")
            )
        );
    }
    Ok(if outcome.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn bench(a: BenchArgs) -> CliResult {
    let cfg = SweepConfig {
        upsilons: a.upsilons,
        k_percents: a.ks,
        sample_count: a.samples,
        targeting_rule: TargetingRule::NextClass,
        rng_seed: a.seed,
        algorithms: a.algorithms,
    };
    cfg.validate()?;
    let net = load_model(&a.model)?;
    let test = load_split(&a.data.data, Split::Test)?;
    let mut current = None;
    let report = run_sweep_with(&net, &test, &cfg, |cell, _, _| {
        let key = (cell.algorithm, cell.upsilon.to_bits(), cell.k_percent.map(f32::to_bits));
        if current != Some(key) {
            current = Some(key);
            match cell.k_percent {
                Some(k) => eprintln!("running {} upsilon={}% k={k}%", cell.algorithm.name(), cell.upsilon),
                None => eprintln!("running {} upsilon={}%", cell.algorithm.name(), cell.upsilon),
            }
        }
    })?;
    for d in &report.diagnostics {
        eprintln!("warning: {d}");
    }
    if let Some(path) = &a.csv {
        write_csv(&report, path)?;
        eprintln!("wrote {}", path.display());
    }
    if a.json {
        print_json(&serde_json::to_value(&report).expect("reports serialize"));
    } else {
        print!("{}", format_table(&report));
    }
    Ok(ExitCode::SUCCESS)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    {
        let mut term = match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(s) => s,
            Err(_) => return ctrl_c.await,
        };
        tokio::select! {
            _ = ctrl_c => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    ctrl_c.await;
}

pub fn serve(a: ServeArgs) -> CliResult {
    if let Some(dir) = &a.static_dir {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!(
                "--static {} is not a directory",
                dir.display()
            )));
        }
    }
    let net = load_model(&a.model)?;
    let test = load_split(&a.data.data, Split::Test)?;
    let accuracy = evaluate(&net, &test)?;
    let seeds = select_seeds(&test, a.seeds_per_class, 0, Some(&net))?;
    let workers = a.workers.unwrap_or_else(default_workers);
    let state = AppState::new(net, &seeds, accuracy, workers)?;
    let app = router(state, a.static_dir.as_deref());

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let addr = format!("{}:{}", a.host, a.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|source| CliError::Bind {
                addr: addr.clone(),
                source,
            })?;
        tracing::info!(
            "serving on http://{} (test accuracy {accuracy:.4}, {} seeds, {workers} workers)",
            listener.local_addr()?,
            seeds.entries.len()
        );
        advplay_service::serve(listener, app, shutdown_signal()).await?;
        tracing::info!("shut down");
        Ok(ExitCode::SUCCESS)
    })
}
