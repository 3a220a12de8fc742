//! Regeneration cycles, conditioned down-crossings and spike trains.
//!
//! A cycle starts at α, runs up to β (the up-phase) and then back down to α
//! (the down-phase). A spike is the first passage above `z` within a cycle.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::{Engine, Side};
use super::{path_rng, SimConfig};
use crate::analytic::{h_transform, HTransformModel};
use crate::error::{Error, Result};
use crate::model::{CycleBoundaries, DiffusionModel};

/// One simulated cycle, times in the model clock relative to the cycle start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// Duration of the up-phase α → β.
    pub tau: f64,
    /// Duration of the down-phase β → α.
    pub sigma: f64,
    pub max_level: f64,
    pub spike: bool,
    /// Whether the down-phase was conditioned to avoid `z`.
    pub conditioned: bool,
    /// First passage above `z`, if any.
    pub spike_time: Option<f64>,
}

impl CycleRecord {
    pub fn length(&self) -> f64 {
        self.tau + self.sigma
    }
}

/// How a spike train treats the cycle running at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StraddleConvention {
    /// Keep every spike whose crossing time is before the horizon.
    #[default]
    CrossingTime,
    /// Keep only spikes of cycles completed before the horizon.
    CompletedCycles,
}

/// Spike times on `[0, horizon]` in the model clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub horizon: f64,
    pub times: Vec<f64>,
    /// Cycles started before the horizon.
    pub n_cycles: u64,
}

impl SpikeTrain {
    pub fn count(&self) -> usize {
        self.times.len()
    }
}

/// Cycle sampler for one model, boundary pair and spike level. Building it
/// once amortizes the h-transform tables over many cycles.
#[derive(Debug, Clone)]
pub struct CycleSampler {
    engine: Engine,
    alpha: f64,
    beta: f64,
    z: f64,
    h: Option<HTransformModel>,
}

impl CycleSampler {
    pub fn new(model: &DiffusionModel, boundaries: &CycleBoundaries, z: f64, config: &SimConfig) -> Result<Self> {
        let (alpha, beta) = boundaries.levels(model.epsilon())?;
        if !(z > alpha) || !z.is_finite() {
            return Err(Error::Ordering(format!("spike level z = {z} must exceed alpha = {alpha}")));
        }
        let engine = Engine::new(model, config)?;
        let h = if z > beta { Some(h_transform(model, alpha, z)?) } else { None };
        Ok(Self { engine, alpha, beta, z, h })
    }

    pub fn levels(&self) -> (f64, f64, f64) {
        (self.alpha, self.beta, self.z)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    fn conditioning(&self) -> Result<&HTransformModel> {
        self.h
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("conditioning needs z > beta, got z = {}, beta = {}", self.z, self.beta)))
    }

    /// One cycle. With `conditioned` the down-phase avoids `z` (requires
    /// `z > β`), so the cycle carries no spike.
    pub fn cycle(&self, conditioned: bool, rng: &mut ChaCha8Rng) -> Result<CycleRecord> {
        let e = &self.engine;
        let (alpha, beta, z) = (self.alpha, self.beta, self.z);
        let mut steps = 0;
        let mut spike_s = None;
        let mut max_x;
        // up-phase
        let up_s = if z <= beta {
            let a = e.leg(alpha, 0.0, z, None, rng, &mut steps)?;
            spike_s = Some(a.s);
            let b = e.leg(z, 0.0, beta, None, rng, &mut steps)?;
            max_x = a.max_x.max(b.max_x);
            a.s + b.s
        } else {
            let a = e.leg(alpha, 0.0, beta, None, rng, &mut steps)?;
            max_x = a.max_x;
            a.s
        };
        // down-phase
        let down_s = if conditioned {
            let h = self.conditioning()?;
            let d = e.leg(beta, alpha, z, Some(h), rng, &mut steps)?;
            max_x = max_x.max(d.max_x);
            d.s
        } else if spike_s.is_some() {
            let d = e.leg(beta, alpha, f64::INFINITY, None, rng, &mut steps)?;
            max_x = max_x.max(d.max_x);
            d.s
        } else {
            let d = e.leg(beta, alpha, z, None, rng, &mut steps)?;
            max_x = max_x.max(d.max_x);
            match d.which {
                Side::Low => d.s,
                Side::High => {
                    spike_s = Some(up_s + d.s);
                    let r = e.leg(z, alpha, f64::INFINITY, None, rng, &mut steps)?;
                    max_x = max_x.max(r.max_x);
                    d.s + r.s
                }
            }
        };
        let k = e.clock_ratio();
        Ok(CycleRecord {
            tau: up_s / k,
            sigma: down_s / k,
            max_level: max_x,
            spike: spike_s.is_some(),
            conditioned,
            spike_time: spike_s.map(|s| s / k),
        })
    }

    /// Down-crossing β → α conditioned to avoid `z`, by rejection of
    /// unconditioned legs that reach `z` first. Model clock.
    pub fn downcross_rejection(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let e = &self.engine;
        let budget = e.config().rejection_budget;
        let mut steps = 0;
        for _ in 0..budget {
            let d = e.leg(self.beta, self.alpha, self.z, None, rng, &mut steps)?;
            if d.which == Side::Low {
                return Ok(d.s / e.clock_ratio());
            }
        }
        Err(Error::RejectionBudget { budget })
    }

    /// Down-crossing β → α under the h-transformed dynamics. Model clock.
    pub fn downcross_h(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let e = &self.engine;
        let mut steps = 0;
        let d = e.leg(self.beta, self.alpha, self.z, Some(self.conditioning()?), rng, &mut steps)?;
        Ok(d.s / e.clock_ratio())
    }

    /// Spike times on `[0, horizon]` (model clock) of the process started at α.
    pub fn spike_train(&self, horizon: f64, convention: StraddleConvention, rng: &mut ChaCha8Rng) -> Result<SpikeTrain> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "horizon must be finite and nonnegative, got {horizon}"
            )));
        }
        let mut t = 0.0;
        let mut times = Vec::new();
        let mut n_cycles = 0;
        while t < horizon {
            n_cycles += 1;
            let c = self.cycle(false, rng)?;
            let end = t + c.length();
            if let Some(st) = c.spike_time {
                let keep = match convention {
                    StraddleConvention::CrossingTime => t + st <= horizon,
                    StraddleConvention::CompletedCycles => end <= horizon,
                };
                if keep {
                    times.push(t + st);
                }
            }
            t = end;
        }
        Ok(SpikeTrain { horizon, times, n_cycles })
    }
}

/// One cycle of `model` driven by `path_rng(config.rng_master_seed, seed)`.
pub fn sample_cycle(
    model: &DiffusionModel,
    boundaries: &CycleBoundaries,
    z: f64,
    config: &SimConfig,
    seed: u64,
    conditioned: bool,
) -> Result<CycleRecord> {
    let s = CycleSampler::new(model, boundaries, z, config)?;
    s.cycle(conditioned, &mut path_rng(config.rng_master_seed, seed))
}

/// Conditioned down-crossing time by rejection sampling.
pub fn sample_conditioned_downcross_rejection(
    model: &DiffusionModel,
    boundaries: &CycleBoundaries,
    z: f64,
    config: &SimConfig,
    seed: u64,
) -> Result<f64> {
    let s = CycleSampler::new(model, boundaries, z, config)?;
    s.downcross_rejection(&mut path_rng(config.rng_master_seed, seed))
}

/// Conditioned down-crossing time under the h-transform.
pub fn sample_conditioned_downcross_h(
    model: &DiffusionModel,
    boundaries: &CycleBoundaries,
    z: f64,
    config: &SimConfig,
    seed: u64,
) -> Result<f64> {
    let s = CycleSampler::new(model, boundaries, z, config)?;
    s.downcross_h(&mut path_rng(config.rng_master_seed, seed))
}

/// Spike train of the process started at α on `[0, horizon]`.
pub fn run_spike_process(
    model: &DiffusionModel,
    boundaries: &CycleBoundaries,
    z: f64,
    horizon: f64,
    convention: StraddleConvention,
    config: &SimConfig,
    seed: u64,
) -> Result<SpikeTrain> {
    let s = CycleSampler::new(model, boundaries, z, config)?;
    s.spike_train(horizon, convention, &mut path_rng(config.rng_master_seed, seed))
}

/// Hitting time of `z` from `x` (model clock). The path first runs in
/// `(floor_alpha, z)`; if it reaches the floor it continues from there with
/// no lower barrier.
pub fn sample_hitting_time_from_x(model: &DiffusionModel, x: f64, z: f64, floor_alpha: f64, config: &SimConfig, seed: u64) -> Result<f64> {
    if !(x > 0.0 && x <= z && floor_alpha > 0.0 && floor_alpha < z) || !z.is_finite() {
        return Err(Error::Ordering(format!(
            "need 0 < x <= z and 0 < floor_alpha < z, got x = {x}, z = {z}, floor_alpha = {floor_alpha}"
        )));
    }
    let engine = Engine::new(model, config)?;
    let mut rng = path_rng(config.rng_master_seed, seed);
    let mut steps = 0;
    let mut s = 0.0;
    let mut pos = x;
    if pos > floor_alpha {
        let a = engine.leg(pos, floor_alpha, z, None, &mut rng, &mut steps)?;
        s += a.s;
        if a.which == Side::High {
            return Ok(s / engine.clock_ratio());
        }
        pos = floor_alpha;
    }
    let b = engine.leg(pos, 0.0, z, None, &mut rng, &mut steps)?;
    Ok((s + b.s) / engine.clock_ratio())
}
