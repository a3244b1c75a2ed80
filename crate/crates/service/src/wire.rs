//! JSON bodies exchanged with the playground client.
//!
//! Pixels and probabilities travel as plain number arrays; `f32` values are
//! written in their shortest round-trip form, so a response decodes back to
//! the exact outcome the attack produced.

use advplay_core::attacks::{Algorithm, AttackOutcome, IterationStats};
use advplay_core::{ClassProbs, Image};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    /// Whether `min` itself is allowed.
    pub min_inclusive: bool,
    pub step: f64,
    pub default: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSchema {
    pub name: String,
    pub label: String,
    /// `"optional"` or `"required"`.
    pub target: String,
    pub strength: ParamRange,
    pub k_percent: Option<ParamRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResponse {
    pub attacks: Vec<AttackSchema>,
    pub model_accuracy: f64,
    /// Feature count.
    #[serde(rename = "M")]
    pub features: usize,
    /// Class count.
    #[serde(rename = "C")]
    pub classes: usize,
    pub directions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub seed_id: usize,
    pub label: u8,
    pub pixels: Vec<f32>,
    pub probs: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub gamma_len: usize,
    pub k: Option<usize>,
    pub pairs_evaluated: u64,
    pub pair: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResponse {
    pub attack: Algorithm,
    pub seed_id: usize,
    pub target: Option<usize>,
    pub original_pixels: Vec<f32>,
    pub adversarial_pixels: Vec<f32>,
    pub original_probs: Vec<f32>,
    pub adversarial_probs: Vec<f32>,
    pub original_class: usize,
    pub predicted_class: usize,
    pub success: bool,
    pub l0: usize,
    pub l2: f64,
    pub linf: f64,
    pub iterations: usize,
    pub elapsed_ms: f64,
    pub trace: Vec<TraceStep>,
}

impl AttackResponse {
    pub fn from_outcome(seed_id: usize, original: &Image, outcome: AttackOutcome) -> Self {
        AttackResponse {
            attack: outcome.algorithm,
            seed_id,
            target: outcome.target,
            original_pixels: original.pixels().to_vec(),
            adversarial_pixels: outcome.adversarial.into_pixels(),
            original_probs: outcome.original_probs.0,
            adversarial_probs: outcome.adversarial_probs.0,
            original_class: outcome.original_class,
            predicted_class: outcome.predicted,
            success: outcome.success,
            l0: outcome.l0,
            l2: outcome.l2,
            linf: outcome.linf,
            iterations: outcome.iterations,
            elapsed_ms: outcome.elapsed_seconds * 1e3,
            trace: outcome
                .trace
                .iter()
                .map(|s| TraceStep {
                    gamma_len: s.gamma_len,
                    k: s.k,
                    pairs_evaluated: s.pairs_evaluated,
                    pair: s.pair,
                })
                .collect(),
        }
    }

    /// Rebuilds the outcome this response was made from. Fails only if the
    /// adversarial pixels are not a valid image.
    pub fn to_outcome(&self) -> advplay_core::Result<AttackOutcome> {
        Ok(AttackOutcome {
            algorithm: self.attack,
            target: self.target,
            adversarial: Image::new(self.adversarial_pixels.clone())?,
            original_probs: ClassProbs(self.original_probs.clone()),
            adversarial_probs: ClassProbs(self.adversarial_probs.clone()),
            original_class: self.original_class,
            predicted: self.predicted_class,
            success: self.success,
            l0: self.l0,
            l2: self.l2,
            linf: self.linf,
            iterations: self.iterations,
            elapsed_seconds: self.elapsed_ms / 1e3,
            trace: self
                .trace
                .iter()
                .map(|s| IterationStats {
                    gamma_len: s.gamma_len,
                    k: s.k,
                    pairs_evaluated: s.pairs_evaluated,
                    pair: s.pair,
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_id: Option<String>,
}
