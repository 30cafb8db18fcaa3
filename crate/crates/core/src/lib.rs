//! Growth/extinction analysis for critical multidimensional stochastic
//! difference equations `X_{n+1} = X_n M + g(X_n) + ξ_n`.
//!
//! The crate computes Perron eigendata of the mean matrix, estimates the
//! drift/variance constants along the Perron ray and classifies a model as
//! bounded almost surely or unbounded with positive probability. Monte
//! Carlo tooling checks the Lyapunov inequalities behind the classification
//! and observes the dichotomy on trajectory ensembles.
//!
//! The matrix routines in [`spectral`] are generic over [`Scalar`]; the rest
//! of the crate works in `f64` through the aliases below.

pub mod commands;
pub mod config;
pub mod criterion;
pub mod error;
pub mod lyapunov;
pub mod models;
pub mod montecarlo;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Mean matrices in double precision.
pub type Matrix = spectral::NonNegMatrix<f64>;
/// Perron eigendata in double precision.
pub type Perron = spectral::PerronData<f64>;
/// Single-precision variants of the matrix types.
pub type Matrix32 = spectral::NonNegMatrix<f32>;
pub type Perron32 = spectral::PerronData<f32>;
