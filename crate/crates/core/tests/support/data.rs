//! Locating the MNIST files and caching a trained model between test runs.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use advplay_core::mnist::{load_split, locate, MNIST_FILES};
use advplay_core::nn::{load_model, save_model, train, Architecture, Dataset, Split, TrainConfig};
use advplay_core::Network;

/// `APG_MNIST_DIR`, else `<workspace>/data/mnist`, if all four files are there.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("APG_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    MNIST_FILES.iter().all(|f| locate(&dir, f.name).is_ok()).then_some(dir)
}

pub fn load(dir: &Path) -> (Dataset, Dataset) {
    (
        load_split(dir, Split::Train).expect("train split"),
        load_split(dir, Split::Test).expect("test split"),
    )
}

/// Trains (or reloads from the cargo test scratch directory) a model with
/// the default recipe for `arch`.
pub fn trained_model(arch: Architecture, train_set: &Dataset) -> Network {
    let name = match arch {
        Architecture::Cnn => "advplay-cnn-default.apgm",
        Architecture::Mlp => "advplay-mlp-default.apgm",
    };
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if let Ok(net) = load_model(&path) {
        return net;
    }
    let cfg = TrainConfig {
        architecture: arch,
        ..TrainConfig::default()
    };
    let net = train(train_set, &cfg).expect("training");
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    save_model(&net, &tmp).expect("save model");
    std::fs::rename(&tmp, &path).expect("publish model");
    net
}
