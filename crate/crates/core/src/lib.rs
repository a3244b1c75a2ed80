//! MNIST classifier engine, evasion attacks and benchmark sweeps.
//!
//! - [`nn`]: CNN/MLP inference, Jacobians, input gradients, training and the
//!   `APGM` model file.
//! - [`mnist`]: IDX parsing, checksum verification and seed selection.
//! - [`attacks`]: FGSM, JSMA and FJSMA.
//! - [`bench`]: evasion-rate and timing sweeps.

pub mod attacks;
pub mod bench;
pub mod error;
pub mod mnist;
pub mod nn;

pub use attacks::{run_attack, Algorithm, AttackOutcome, AttackSpec, Direction, SaliencySource};
pub use error::{Error, Result};
pub use nn::{ClassProbs, Classifier, Image, Jacobian, Logits, Network};
