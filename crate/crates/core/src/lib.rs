//! Self-guided label refinement for adversarial training.
//!
//! A small, dependency-light laboratory for studying robust overfitting:
//! a reverse-mode differentiable multilayer perceptron, ℓ∞ adversaries,
//! the hard / uniform-smoothing / self-guided label family, training loops
//! with best/final bookkeeping, calibration and sharpness diagnostics, and
//! exact numerical checks of the information-theoretic identities that
//! motivate the method.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line runner live in the `sglr-lab` companion crate.

#![no_std]
// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod attack;
pub mod checkpoint;
pub mod data;
mod error;
pub mod graph;
pub mod labels;
pub mod loss;
pub mod metrics;
pub mod mlp;
pub mod optim;
pub mod params;
pub mod rng;
pub mod tensor;
pub mod theory;
pub mod train;

pub use error::{Error, Result};
pub use mlp::{Mlp, MlpSpec};
pub use params::ParamSet;
pub use tensor::Tensor;

/// Lower clamp applied to probabilities before taking logarithms.
pub const EPS_CLIP: f64 = 1e-12;
