//! Computation of the √T coefficient of the expected maximum bin load.
//!
//! Throwing r balls into r distinct bins (uniform among the binom(n,r)
//! subsets), T times, the expected maximum occupancy grows as
//! (r/n)·T + C·√T + o(√T). This crate computes the constant C four ways
//! and cross-checks the routes against each other:
//!
//! - [`occupancy`]: exact distribution of the maximum by dynamic
//!   programming over permutation classes, in exact rational arithmetic;
//! - [`montecarlo`]: large-scale simulation of the process plus a direct
//!   sampler of the limiting law;
//! - [`gaussian_max`] / [`constants`]: the closed-form identity
//!   C = √(r(n−r)/(n(n−1)))·E[max of n standard Gaussians], with the
//!   Gaussian expectation by closed form, quadrature, or asymptotics;
//! - [`estimator`]: recovery of C from finite-T data by least squares
//!   against c·√T + b.

// reference constants are frozen with more digits than f64 keeps
#![allow(clippy::excessive_precision)]

pub mod constants;
pub mod estimator;
pub mod gaussian_max;
pub mod montecarlo;
pub mod occupancy;
pub mod params;

pub use params::{Error, Params};

/// Exact rational used throughout the exact engine and covariance code.
pub type Rational = num_rational::BigRational;
