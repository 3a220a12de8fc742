//! Monte Carlo simulation of the diffusion: first-passage sampling,
//! regeneration cycles, conditioned down-crossings and spike trains.
//!
//! Paths are integrated in the *cycle clock* `s = λ² t`, in which the
//! diffusion has `λ = 1`; reported times are converted back to the model
//! clock `t = s/λ²`. The default scheme works in unit-diffusion coordinates
//! `Y = F(X)`, where the origin sits at `−∞`, so positivity holds without
//! clamping.
//!
//! Randomness is derived per path: path `i` of an experiment with master
//! seed `m` uses `ChaCha8Rng::seed_from_u64(m)` switched to stream `i`, so
//! results do not depend on the number of worker threads.

mod cycles;
mod engine;

pub use cycles::{
    run_spike_process, sample_conditioned_downcross_h, sample_conditioned_downcross_rejection, sample_cycle, sample_hitting_time_from_x,
    CycleRecord, CycleSampler, SpikeTrain, StraddleConvention,
};
pub use engine::{simulate_until_hit, Engine, HitOutcome, Side};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Euler–Maruyama on `X` itself.
    EulerNative,
    /// Euler–Maruyama on `Y = F(X)` (unit diffusion coefficient).
    EulerTransformed,
}

/// Simulation settings. Step sizes refer to the cycle clock `s = λ² t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub scheme: Scheme,
    /// Largest step in the cycle clock.
    pub dt_max: f64,
    /// Drift control: `ds ≤ c_drift / μ²`.
    pub c_drift: f64,
    /// Barrier control: `ds ≤ c_bar · d²`, `d` the distance to the nearest
    /// barrier in units of the local noise.
    pub c_bar: f64,
    /// Smallest step, as a fraction of `dt_max`.
    pub dt_floor_frac: f64,
    /// Brownian-bridge test for barrier crossings inside a step.
    pub barrier_refine: bool,
    pub step_budget: u64,
    pub rejection_budget: u64,
    /// Multiplies the Brownian increment. `1` for the model; other values are
    /// a test hook (`0` integrates the drift ODE).
    pub noise_scale: f64,
    pub rng_master_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::EulerTransformed,
            dt_max: 1e-2,
            c_drift: 0.1,
            c_bar: 0.25,
            dt_floor_frac: 1e-4,
            barrier_refine: true,
            step_budget: 1_000_000_000,
            rejection_budget: 1_000_000,
            noise_scale: 1.0,
            rng_master_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return Err(Error::InvalidInput(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if !(self.c_drift > 0.0 && self.c_bar > 0.0) {
            return Err(Error::InvalidInput("c_drift and c_bar must be positive".into()));
        }
        if !(self.dt_floor_frac > 0.0 && self.dt_floor_frac <= 1.0) {
            return Err(Error::InvalidInput("dt_floor_frac must lie in (0, 1]".into()));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::InvalidInput("noise_scale must be nonnegative".into()));
        }
        if self.step_budget == 0 || self.rejection_budget == 0 {
            return Err(Error::InvalidInput("budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Generator for path `stream` of an experiment seeded with `master`.
pub fn path_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Evaluate `f(i, rng_i)` for `i in 0..n` on `workers` threads (`0` means
/// the rayon default), returning results in path order.
pub fn run_paths<T, F>(n: usize, master: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(master, i as u64);
                f(i, &mut rng)
            })
            .collect()
    })
}
