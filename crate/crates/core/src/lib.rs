//! Bayesian parameter estimation by Sequential Monte Carlo with an HMC
//! kernel, formulated the way statistical physics treats particle ensembles.
//!
//! An ensemble of particles moves through the potential `V(q) = -ln P(q|X)`
//! on unconstrained parameter space under Hamiltonian dynamics at a fixed
//! temperature. Boltzmann factors of the particle energies provide importance
//! weights, effective-sample-size monitoring triggers resampling, and the
//! final estimate is an energy-weighted moving average of the per-iteration
//! ensemble means.
//!
//! Modules:
//! - [`model`]: potentials, gradients, and support bijections.
//! - [`models`]: the coin-toss and IRT 2PL targets plus a Gaussian toy.
//! - [`hmc`]: thermal momenta, leapfrog integration, Metropolis acceptance.
//! - [`smc`]: the ensemble orchestrator and the weighted estimator.
//! - [`parallel`]: deterministic sharding and per-particle RNG streams.
//! - [`driver`]: run configuration, trace output, and the CLI entry points.

pub mod datafile;
pub mod driver;
pub mod error;
pub mod hmc;
pub mod model;
pub mod models;
pub mod parallel;
pub mod smc;

pub use error::{Error, Result};
