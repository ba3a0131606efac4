//! Generative stochastic networks trained by back-propagated reconstruction
//! likelihood, plus the exact finite-state machinery used to verify the
//! theory behind them at desk scale.
//!
//! Module map:
//! - [`ndnum`]: dense matrices, seeded randomness, small linear algebra.
//! - [`diffgraph`]: reverse-mode differentiation with noise-injection nodes.
//! - [`gsn`]: the model family (DAE through deep GSNs) and the unrolled
//!   walkback training graph.
//! - [`trainer`]: momentum SGD with per-epoch learning-rate decay.
//! - [`sampler`]: chain sampling, clamped (conditional) sampling, mean-field
//!   collection.
//! - [`chainlab`]: exact transition operators on enumerated state spaces,
//!   ergodicity checks, stationary-distribution perturbation bounds,
//!   dependency-network chains.
//! - [`parzen`]: Parzen-window Gaussian log-likelihood evaluation.
//! - [`datasets`]: IDX loading, synthetic generators, CSV I/O.

pub mod chainlab;
pub mod datasets;
pub mod diffgraph;
mod error;
pub mod gsn;
pub mod ndnum;
pub mod parzen;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
