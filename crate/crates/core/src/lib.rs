//! Estimation and simulation of doubly stochastic Poisson arrival processes
//! from interval count data.
//!
//! A generator network maps uniform noise to a vector of per-interval
//! Poisson rates; composing it with a Poisson counts simulator yields
//! synthetic days of arrival counts. The generator is fitted with a
//! Wasserstein GAN objective with gradient penalty, backpropagating through
//! the discrete Poisson step with a moment-matching surrogate derivative.
//!
//! Around the estimator sit ground-truth generators (a CIR-intensity Cox
//! process and the PGnorta copula model), arrival-epoch reconstruction from
//! counts, a queueing harness, and the summary statistics used to compare
//! generated and real data.

pub mod dswgan;
pub mod epochs;
pub mod error;
pub mod io;
pub mod nn;
pub mod par;
pub mod queueing;
pub mod rng;
pub mod stats;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use types::{CountMatrix, CountVector, EpochList, Horizon, IntensityVector};
