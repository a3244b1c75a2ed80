//! A deliberately small neural-network engine.
//!
//! The engine covers exactly the layer set needed for MNIST classifiers
//! (convolution, max-pooling, fully-connected, ReLU, softmax) and exposes the
//! three quantities evasion attacks need: class probabilities, the gradient of
//! the cross-entropy loss with respect to the input, and the full forward
//! derivative (the Jacobian of the softmax outputs with respect to every input
//! feature).
//!
//! All weights and activations are `f32`. Parameters are immutable once a
//! [`Network`] is built, so a network can be shared freely between threads.

mod layers;
mod model_file;
mod network;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use layers::{Conv2d, Dense, Layer, MaxPool2d, Shape};
pub use model_file::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use network::Network;
pub use train::{evaluate, train, train_with_progress, Architecture, Dataset, EpochStats, Split, TrainConfig};

/// Side length of an MNIST digit.
pub const IMAGE_SIDE: usize = 28;
/// Number of input features `M` (28 x 28, row-major).
pub const NUM_FEATURES: usize = IMAGE_SIDE * IMAGE_SIDE;
/// Number of output classes `C`.
pub const NUM_CLASSES: usize = 10;

/// A grayscale image flattened row-major, every pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct Image(Vec<f32>);

impl Image {
    pub fn new(pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != NUM_FEATURES {
            return Err(Error::Argument(format!(
                "image must have {NUM_FEATURES} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some((i, v)) = pixels.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!("pixel {i} = {v} is outside [0, 1]")));
        }
        Ok(Image(pixels))
    }

    pub fn zeros() -> Self {
        Image(vec![0.0; NUM_FEATURES])
    }

    /// Maps 8-bit intensities with `v / 255`.
    pub fn from_u8(bytes: &[u8]) -> Result<Self> {
        Image::new(bytes.iter().map(|&v| f32::from(v) / 255.0).collect())
    }

    pub fn pixels(&self) -> &[f32] {
        &self.0
    }

    pub fn into_pixels(self) -> Vec<f32> {
        self.0
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [f32] {
        &mut self.0
    }
}

impl TryFrom<Vec<f32>> for Image {
    type Error = Error;

    fn try_from(value: Vec<f32>) -> Result<Self> {
        Image::new(value)
    }
}

impl From<Image> for Vec<f32> {
    fn from(value: Image) -> Self {
        value.0
    }
}

/// Pre-softmax class scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logits(pub Vec<f32>);

impl Logits {
    pub fn softmax(&self) -> ClassProbs {
        ClassProbs(softmax(&self.0))
    }
}

/// Softmax output of the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbs(pub Vec<f32>);

impl ClassProbs {
    /// Index of the largest probability; the smallest index wins ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

/// The forward derivative: a `classes x features` matrix whose entry
/// `(j, i)` is `dF_j / dX_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    classes: usize,
    features: usize,
    data: Vec<f32>,
}

impl Jacobian {
    pub fn from_rows(classes: usize, features: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != classes * features {
            return Err(Error::Argument(format!(
                "jacobian data has {} entries, expected {classes}x{features}",
                data.len()
            )));
        }
        Ok(Jacobian {
            classes,
            features,
            data,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn row(&self, class: usize) -> &[f32] {
        &self.data[class * self.features..(class + 1) * self.features]
    }

    pub fn get(&self, class: usize, feature: usize) -> f32 {
        self.data[class * self.features + feature]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Anything an evasion attack can run against.
pub trait Classifier {
    fn logits(&self, x: &Image) -> Result<Logits>;

    fn forward(&self, x: &Image) -> Result<ClassProbs> {
        Ok(self.logits(x)?.softmax())
    }

    /// Jacobian of the softmax outputs with respect to the input.
    fn jacobian(&self, x: &Image) -> Result<Jacobian>;

    /// Jacobian of the logits with respect to the input.
    fn logit_jacobian(&self, x: &Image) -> Result<Jacobian>;

    /// Gradient of the cross-entropy loss against one-hot `class`.
    fn input_gradient(&self, x: &Image, class: usize) -> Result<Vec<f32>>;
}

pub fn softmax(logits: &[f32]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f32 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
