//! Penalized fractional Brownian motion.
//!
//! Exact fBM samplers, the penalization weight `(∫_0^T e^{−B_H})^{-1}` and its
//! mean `I(T)`, the weighted limit law of the penalized process, the Brownian
//! drifts and their Euler schemes, and weighted two-sample statistics.

pub mod acceptance;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod gaussgen;
pub mod io;
pub mod limitlaw;
pub mod penalize;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use estimate::EstimateWithError;
pub use gaussgen::{FbmGenerator, HurstParam, Method, Path, TimeGrid};
pub use penalize::WeightedEnsemble;
pub use rng::Seed;
pub use stats::WeightedSample;
