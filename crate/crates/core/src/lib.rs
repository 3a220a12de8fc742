//! Stochastic spikes in weakly perturbed one-dimensional diffusions.
//!
//! The crate covers the diffusion family
//!
//! ```text
//! dX = (λ²/2)(ε b1(X) − b2(X)) dt + λ σ(X) dB
//! ```
//!
//! on `(0, ∞)`, where a small repulsion `ε b1` occasionally pushes the path
//! from near zero up to a fixed level `z` (a *spike*). Along the scaling curve
//! `λ² p_{ε,z} = J` the spikes form an approximately Poisson process of
//! intensity `κ J`.
//!
//! * [`model`] coefficients, presets, Taylor checks and the unit-diffusion
//!   change of coordinates;
//! * [`analytic`] scale density, hitting probabilities, Green kernels,
//!   exit-time moments and the Doob h-transform, all by log-space quadrature;
//! * [`simulate`] Euler–Maruyama first-passage sampling, regeneration cycles
//!   and spike trains;
//! * [`limits`] κ, α_{x,z}, q(z), the hitting-time mixture law and related
//!   limit constants;
//! * [`stats`] Wilson intervals, Kolmogorov–Smirnov tests, dispersion tests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod limits;
pub mod model;
pub mod quadrature;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
