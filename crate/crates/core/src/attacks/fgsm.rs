use super::{finish, Algorithm, AttackOutcome, AttackSpec};
use crate::error::{Error, Result};
use crate::nn::{Classifier, Image};

fn sign(v: f32) -> f32 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Fast gradient sign method, one gradient evaluation.
///
/// Untargeted: `x' = clip(x + eps * sign(grad L(x, argmax f(x))))`.
/// Targeted:   `x' = clip(x - eps * sign(grad L(x, target)))`.
pub fn fgsm<C: Classifier + ?Sized>(model: &C, x: &Image, spec: &AttackSpec) -> Result<AttackOutcome> {
    if spec.algorithm != Algorithm::Fgsm {
        return Err(Error::Argument(format!(
            "fgsm called with a {} spec",
            spec.algorithm.name()
        )));
    }
    spec.validate()?;
    let eps = spec.strength;
    let original_probs = model.forward(x)?;
    let (label, step) = match spec.target {
        Some(t) => (t, -eps),
        None => (original_probs.argmax(), eps),
    };
    let grad = model.input_gradient(x, label)?;
    let pixels: Vec<f32> = x
        .pixels()
        .iter()
        .zip(&grad)
        .map(|(&v, &g)| (v + step * sign(g)).clamp(0.0, 1.0))
        .collect();
    let adversarial = Image::new(pixels)?;
    finish(model, x, spec, original_probs, adversarial, None, 1, Vec::new())
}
