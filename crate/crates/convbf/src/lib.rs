//! Convolutional Bayesian filtering.
//!
//! Robust state estimation under model mismatch: the measurement (or
//! transition) likelihood is convolved with an exponential threshold kernel,
//! which for Gaussian noise reduces to the closed-form covariance inflation
//! `Q + 1/(2·rate)·I` and in general to an exponential rescaling of the
//! density to the fractional power `γ = rate/(rate + 1)`. The crate provides
//! the convolutional variants of the Kalman, extended/unscented, and particle
//! filters alongside classical robust baselines (Huber, iterated EKF,
//! auxiliary and Student-t particle filters), plus a seeded Monte Carlo
//! benchmark harness with CSV/JSON export.

pub mod bench;
pub mod convolution;
pub mod distributions;
pub mod error;
pub mod kalman;
pub mod linalg;
pub mod models;
pub mod nonlinear;
pub mod particle;

pub use error::{Error, Result};
