//! Quadrature-backed analytic objects of the diffusion: scale density and
//! scale function, speed density, hitting probabilities, Green kernels,
//! exit-time moments and the Doob h-transform.
//!
//! Everything is evaluated in log space. For the Rabi model the relevant
//! integrands span hundreds of orders of magnitude (factors like
//! `exp(−b³/(6ε²))`), so `p` and `1/p` are only exponentiated after the
//! quadrature has subtracted a local maximum.

mod green;
mod htransform;
mod scale;

pub use green::{exit_time_second_moment, expected_exit_time, green_kernel, GreenKernel, KernelKind};
pub use htransform::{h_transform, HTransformModel};
pub use scale::{hitting_prob, hitting_prob_with, log_hitting_prob, log_spike_prob, scale_density_log, spike_prob, ScaleObjects};

use crate::error::Result;
use crate::model::{CycleBoundaries, DiffusionModel};

/// Expected durations of the two phases of a regeneration cycle, in the
/// model's clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleMoments {
    /// `E_α[T_β]`.
    pub up_mean: f64,
    /// `E_β[T̃_α]` for the process conditioned to avoid `z`.
    pub down_mean: f64,
    pub up_second: f64,
    pub down_second: f64,
}

impl CycleMoments {
    /// Mean cycle length.
    pub fn mean(&self) -> f64 {
        self.up_mean + self.down_mean
    }

    /// Second moment of the cycle length; the phases are independent by the
    /// strong Markov property.
    pub fn second_moment(&self) -> f64 {
        self.up_second + 2.0 * self.up_mean * self.down_mean + self.down_second
    }
}

/// Green kernels of the up-phase (absorbing at β, origin inaccessible) and
/// the conditioned down-phase (absorbing at α, never reaching z).
pub fn cycle_kernels(model: &DiffusionModel, boundaries: &CycleBoundaries, z: f64) -> Result<(GreenKernel, GreenKernel)> {
    let (alpha, beta) = boundaries.levels(model.epsilon())?;
    let up = green_kernel(model, 0.0, beta, KernelKind::UpperAbsorbing)?;
    let down = green_kernel(model, alpha, z, KernelKind::LowerAbsorbing)?;
    Ok((up, down))
}

/// First moments of both cycle phases (second moments left at zero).
pub fn cycle_means(model: &DiffusionModel, boundaries: &CycleBoundaries, z: f64) -> Result<CycleMoments> {
    let (alpha, beta) = boundaries.levels(model.epsilon())?;
    let (up, down) = cycle_kernels(model, boundaries, z)?;
    Ok(CycleMoments {
        up_mean: up.expected_exit_time(alpha)?,
        down_mean: down.expected_exit_time(beta)?,
        up_second: 0.0,
        down_second: 0.0,
    })
}

/// First and second moments of both cycle phases.
pub fn cycle_moments(model: &DiffusionModel, boundaries: &CycleBoundaries, z: f64) -> Result<CycleMoments> {
    let (alpha, beta) = boundaries.levels(model.epsilon())?;
    let (up, down) = cycle_kernels(model, boundaries, z)?;
    Ok(CycleMoments {
        up_mean: up.expected_exit_time(alpha)?,
        down_mean: down.expected_exit_time(beta)?,
        up_second: up.exit_time_second_moment(alpha)?,
        down_second: down.exit_time_second_moment(beta)?,
    })
}
