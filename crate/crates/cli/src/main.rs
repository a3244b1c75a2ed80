//! `advplay`: fetch MNIST, train a classifier, run attacks and sweeps, and
//! serve the playground.
//!
//! Exit codes: 0 success, 1 attack did not reach its goal, 2 bad flags or
//! input (including a busy port), 3 training diverged.

mod commands;
mod fetch;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use advplay_core::{Algorithm, Direction};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "advplay",
    version,
    about = "Adversarial example playground for MNIST classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a classifier and write it as an APGM model file
    Train(TrainArgs),
    /// Run one attack on a test-split image
    Attack(AttackArgs),
    /// Evasion-rate and timing sweep over upsilon and k grids
    Bench(BenchArgs),
    /// Serve the HTTP API (and optionally a static UI)
    Serve(ServeArgs),
    /// Download or copy the MNIST files and verify their checksums
    FetchData(FetchArgs),
}

#[derive(Debug, Args)]
struct DataArg {
    /// Directory holding the four MNIST IDX files (plain or .gz)
    #[arg(long, env = "APG_MNIST_DIR", default_value = "data/mnist")]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArg,
    /// Output model path
    #[arg(long, default_value = "model.apgm")]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f32,
    /// Train the small 784-256-256-10 MLP instead of the CNN
    #[arg(long)]
    mlp: bool,
    /// Train on only the first N training images
    #[arg(long)]
    limit: Option<usize>,
    /// Print a JSON summary on stdout
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value = "model.apgm")]
    model: PathBuf,
    /// fgsm, jsma or fjsma
    #[arg(long)]
    algorithm: Algorithm,
    /// Index of the seed image in the MNIST test split
    #[arg(long)]
    seed_index: usize,
    /// Target class (required for jsma and fjsma)
    #[arg(long)]
    target: Option<usize>,
    /// Epsilon for fgsm, upsilon (percent of features) for jsma/fjsma
    #[arg(long)]
    strength: f32,
    /// FJSMA apriori cut as a percent of the feature count
    #[arg(long = "k")]
    k_percent: Option<f32>,
    #[arg(long, default_value = "decrease")]
    direction: Direction,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value = "model.apgm")]
    model: PathBuf,
    /// Correctly classified test images per grid cell
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "10,15,20,25")]
    upsilons: Vec<f32>,
    #[arg(long, value_delimiter = ',', default_value = "10,15,20,30")]
    ks: Vec<f32>,
    #[arg(long, value_delimiter = ',', default_value = "jsma,fjsma")]
    algorithms: Vec<Algorithm>,
    /// Seed for the sample order
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the report as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value = "model.apgm")]
    model: PathBuf,
    #[arg(long, env = "APG_PORT", default_value_t = advplay_service::DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 1)]
    seeds_per_class: usize,
    /// Directory with the built UI to serve at `/`
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    /// Concurrent attack slots (default: CPU count)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Destination directory
    #[arg(long, env = "APG_MNIST_DIR", default_value = "data/mnist")]
    dir: PathBuf,
    /// Copy from a local directory instead of downloading
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long, default_value = fetch::DEFAULT_BASE_URL)]
    base_url: String,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Attack(a) => commands::attack(a),
        Command::Bench(a) => commands::bench(a),
        Command::Serve(a) => commands::serve(a),
        Command::FetchData(a) => fetch::run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
