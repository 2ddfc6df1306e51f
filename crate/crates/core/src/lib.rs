//! Modified hyperbolic tangent (MODHTAN) activation built on an
//! integer-calibrated approximation of `e^x`, the Soft-Step, HTAN and ELU
//! baselines, a one-hidden-layer perceptron with gradient-descent and
//! Levenberg-Marquardt trainers, and a benchmark harness.

pub mod activation;
pub mod bench;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod exp_approx;
pub mod network;
pub mod trainer;

pub use activation::{ActivationKind, EluParams, EulerMode, ModHtanParams, OffsetMode};
pub use error::{Error, Result};
pub use exp_approx::RnfParams;
pub use network::MlpModel;
