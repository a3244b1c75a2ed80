use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::ParamGrads;
use super::network::Network;
use super::{softmax, Image, NUM_CLASSES, NUM_FEATURES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Labelled images from one MNIST split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<Image>,
    pub labels: Vec<u8>,
    pub split: Split,
}

impl Dataset {
    pub fn new(images: Vec<Image>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| usize::from(l) >= NUM_CLASSES) {
            return Err(Error::Data(format!("label {l} is outside 0..{NUM_CLASSES}")));
        }
        Ok(Dataset { images, labels, split })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// The first `n` samples (or all of them).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            split: self.split,
        }
    }
}

/// Which built-in architecture to initialise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// conv5x5(32) - relu - pool2 - conv5x5(64) - relu - pool2 - fc1024 - relu - fc10
    #[default]
    Cnn,
    /// 784 - 256 - 256 - 10 with ReLU
    Mlp,
}

/// Mini-batch Adam settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub rng_seed: u64,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 3,
            batch_size: 64,
            learning_rate: 1e-3,
            rng_seed: 0,
            architecture: Architecture::Cnn,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

const BETA1: f32 = 0.9;
const BETA2: f32 = 0.999;
const EPSILON: f32 = 1e-8;

struct Adam {
    step: i32,
    first: Vec<Option<ParamGrads>>,
    second: Vec<Option<ParamGrads>>,
}

fn zeroed(net: &Network) -> Vec<Option<ParamGrads>> {
    net.layers()
        .iter()
        .map(|l| {
            l.param_lens().map(|(w, b)| ParamGrads {
                weights: vec![0.0; w],
                bias: vec![0.0; b],
            })
        })
        .collect()
}

impl Adam {
    fn new(net: &Network) -> Self {
        Adam {
            step: 0,
            first: zeroed(net),
            second: zeroed(net),
        }
    }

    fn update(&mut self, net: &mut Network, grads: &[Option<ParamGrads>], lr: f32) {
        self.step += 1;
        let step_size = lr * (1.0 - BETA2.powi(self.step)).sqrt() / (1.0 - BETA1.powi(self.step));
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            let (Some((w, b)), Some(g), Some(m), Some(v)) = (
                layer.params_mut(),
                grads[i].as_ref(),
                self.first[i].as_mut(),
                self.second[i].as_mut(),
            ) else {
                continue;
            };
            adam_step(w, &g.weights, &mut m.weights, &mut v.weights, step_size);
            adam_step(b, &g.bias, &mut m.bias, &mut v.bias, step_size);
        }
    }
}

fn adam_step(params: &mut [f32], grads: &[f32], m: &mut [f32], v: &mut [f32], step_size: f32) {
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        *p -= step_size * *m / (v.sqrt() + EPSILON);
    }
}

/// Trains a fresh network of `cfg.architecture` with cross-entropy loss.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    train_with_progress(data, cfg, |_| {})
}

pub fn train_with_progress(data: &Dataset, cfg: &TrainConfig, mut on_epoch: impl FnMut(EpochStats)) -> Result<Network> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let mut net = Network::init(cfg.architecture, cfg.rng_seed);
    let mut adam = Adam::new(&net);
    // Shuffling uses its own stream so the initial weights do not depend on it.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x5eed_5eed_5eed_5eed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size * NUM_FEATURES);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let n = chunk.len();
            batch.clear();
            for &i in chunk {
                batch.extend_from_slice(data.images[i].pixels());
            }
            let acts = net.trace(&batch, n, false)?;
            let logits = acts.last().unwrap();
            let mut grad = vec![0.0f32; n * NUM_CLASSES];
            for (r, &i) in chunk.iter().enumerate() {
                let label = usize::from(data.labels[i]);
                let p = softmax(&logits[r * NUM_CLASSES..(r + 1) * NUM_CLASSES]);
                loss_sum -= f64::from(p[label].max(f32::MIN_POSITIVE)).ln();
                if super::argmax(&p) == label {
                    correct += 1;
                }
                for (k, g) in grad[r * NUM_CLASSES..(r + 1) * NUM_CLASSES].iter_mut().enumerate() {
                    let target = if k == label { 1.0 } else { 0.0 };
                    *g = (p[k] - target) / n as f32;
                }
            }
            if !loss_sum.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training(format!("loss diverged during epoch {}", epoch + 1)));
            }
            let mut grads = zeroed(&net);
            net.backward(&acts, n, grad, n, Some(&mut grads), false)?;
            adam.update(&mut net, &grads, cfg.learning_rate);
        }
        on_epoch(EpochStats {
            epoch: epoch + 1,
            mean_loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
        });
    }
    Ok(net)
}

/// Fraction of samples whose arg-max prediction equals the label.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Argument("cannot evaluate on an empty dataset".into()));
    }
    const CHUNK: usize = 256;
    let mut correct = 0usize;
    let mut batch = Vec::with_capacity(CHUNK * NUM_FEATURES);
    for (images, labels) in data.images.chunks(CHUNK).zip(data.labels.chunks(CHUNK)) {
        batch.clear();
        for img in images {
            batch.extend_from_slice(img.pixels());
        }
        let preds = net.predict_batch(&batch, images.len())?;
        correct += preds.iter().zip(labels).filter(|(&p, &l)| p == usize::from(l)).count();
    }
    Ok(correct as f64 / data.len() as f64)
}
