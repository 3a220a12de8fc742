//! Adaptive Euler–Maruyama integration up to the first barrier contact.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Scheme, SimConfig};
use crate::analytic::HTransformModel;
use crate::error::{Error, Result};
use crate::model::{DiffusionModel, TransformedModel};

const MAX_RETRIES: u32 = 64;

/// Which barrier was reached first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

/// First barrier contact; `time` is in the model clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitOutcome {
    pub which: Side,
    pub time: f64,
    pub max_level: f64,
}

/// One leg in the cycle clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Leg {
    pub which: Side,
    pub s: f64,
    pub max_x: f64,
}

/// A model prepared for simulation under one configuration. Immutable and
/// shareable across threads.
#[derive(Debug, Clone)]
pub struct Engine {
    model: DiffusionModel,
    transform: Option<TransformedModel>,
    cfg: SimConfig,
}

impl Engine {
    pub fn new(model: &DiffusionModel, cfg: &SimConfig) -> Result<Self> {
        cfg.check()?;
        let transform = match cfg.scheme {
            Scheme::EulerTransformed => Some(model.feller_transform(model.default_anchor())?),
            Scheme::EulerNative => None,
        };
        Ok(Self {
            model: model.clone(),
            transform,
            cfg: *cfg,
        })
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// `λ²`, the ratio of cycle clock to model clock.
    pub fn clock_ratio(&self) -> f64 {
        self.model.lambda() * self.model.lambda()
    }

    #[inline]
    fn to_state(&self, x: f64) -> f64 {
        match &self.transform {
            Some(t) => t.forward(x),
            None => x,
        }
    }

    #[inline]
    fn to_x(&self, w: f64) -> f64 {
        match &self.transform {
            Some(t) => t.inverse(w),
            None => w,
        }
    }

    /// Drift and noise coefficient of the state variable in the cycle clock.
    #[inline]
    fn coefficients(&self, x: f64, cond: Option<&HTransformModel>) -> Result<(f64, f64)> {
        let c = self.model.coefficients();
        let sigma = c.sigma(x);
        let (mut mu, vol) = match &self.transform {
            // Itô correction of Y = F(X) scales with the squared noise
            Some(_) => {
                let n2 = self.cfg.noise_scale * self.cfg.noise_scale;
                (
                    0.5 * ((self.model.epsilon() * c.b1(x) - c.b2(x)) / sigma - n2 * c.sigma_prime(x)),
                    1.0,
                )
            }
            None => (0.5 * (self.model.epsilon() * c.b1(x) - c.b2(x)), sigma),
        };
        if let Some(h) = cond {
            // d log h / dw times the squared noise coefficient of w
            let hh = h.log_derivative(x)?;
            mu += match &self.transform {
                Some(_) => sigma * hh,
                None => sigma * sigma * hh,
            };
        }
        Ok((mu, vol))
    }

    /// Run from `x0` until the first contact with `low` or `high`.
    ///
    /// `low = 0` means no lower barrier (the origin is inaccessible) and
    /// `high = ∞` no upper one. With `cond` the h-transformed drift is added
    /// and `high` (the conditioning level) must never be touched: steps
    /// that would cross it are redrawn at a quarter of the size.
    pub(crate) fn leg(
        &self,
        x0: f64,
        low: f64,
        high: f64,
        cond: Option<&HTransformModel>,
        rng: &mut ChaCha8Rng,
        steps: &mut u64,
    ) -> Result<Leg> {
        if !(low >= 0.0 && low < high) {
            return Err(Error::Ordering(format!("0 <= low < high, got low = {low}, high = {high}")));
        }
        if !(x0 >= low && x0 <= high) || !(x0 > 0.0) || !x0.is_finite() {
            return Err(Error::Ordering(format!("start {x0} inside [{low}, {high}]")));
        }
        if let Some(h) = cond {
            if h.upper() != high {
                return Err(Error::InvalidInput("conditioning level must be the upper barrier".into()));
            }
            if x0 >= high {
                return Err(Error::Domain("conditioned leg cannot start at the avoided level".into()));
            }
        }
        let has_low = low > 0.0;
        let has_high = high.is_finite();
        if has_low && x0 == low {
            return Ok(Leg {
                which: Side::Low,
                s: 0.0,
                max_x: x0,
            });
        }
        if x0 == high {
            return Ok(Leg {
                which: Side::High,
                s: 0.0,
                max_x: x0,
            });
        }
        let cfg = &self.cfg;
        let w_lo = if has_low { self.to_state(low) } else { f64::NEG_INFINITY };
        let w_hi = if has_high { self.to_state(high) } else { f64::INFINITY };
        let ds_max = cfg.dt_max;
        let ds_floor = cfg.dt_max * cfg.dt_floor_frac;
        let noise = cfg.noise_scale;
        let mut w = self.to_state(x0);
        let mut x = x0;
        let mut s = 0.0;
        let mut max_x = x0;
        loop {
            *steps += 1;
            if *steps > cfg.step_budget {
                return Err(Error::StepBudget {
                    budget: cfg.step_budget,
                    time: s / self.clock_ratio(),
                    x,
                });
            }
            let (mu, vol) = self.coefficients(x, cond)?;
            let gap = (w - w_lo).min(w_hi - w) / vol;
            let mut ds = ds_max.min(cfg.c_drift / (mu * mu)).min(cfg.c_bar * gap * gap).max(ds_floor);
            let mut retries = 0;
            let (w1, x1) = loop {
                let z: f64 = rng.sample(StandardNormal);
                let w1 = w + mu * ds + noise * vol * ds.sqrt() * z;
                let x1 = self.to_x(w1);
                let below_origin = !has_low && w1 <= w_lo;
                let bad = !(x1 > 0.0) || !x1.is_finite() || below_origin || (cond.is_some() && w1 >= w_hi);
                let crossed = (has_low && w1 <= w_lo) || (has_high && cond.is_none() && w1 >= w_hi);
                if !bad || crossed {
                    break (w1, x1);
                }
                retries += 1;
                if retries > MAX_RETRIES {
                    return Err(Error::NonFinite { x, value: w1 });
                }
                ds *= 0.25;
            };
            if has_low && w1 <= w_lo {
                let frac = (w - w_lo) / (w - w1);
                return Ok(Leg {
                    which: Side::Low,
                    s: s + frac * ds,
                    max_x,
                });
            }
            if has_high && cond.is_none() && w1 >= w_hi {
                let frac = (w_hi - w) / (w1 - w);
                return Ok(Leg {
                    which: Side::High,
                    s: s + frac * ds,
                    max_x: high,
                });
            }
            if cfg.barrier_refine && noise > 0.0 {
                let var = noise * noise * vol * vol * ds;
                if has_low {
                    let (d0, d1) = (w - w_lo, w1 - w_lo);
                    if rng.random::<f64>() < (-2.0 * d0 * d1 / var).exp() {
                        return Ok(Leg {
                            which: Side::Low,
                            s: s + ds * d0 / (d0 + d1),
                            max_x: max_x.max(x1),
                        });
                    }
                }
                if has_high && cond.is_none() {
                    let (d0, d1) = (w_hi - w, w_hi - w1);
                    if rng.random::<f64>() < (-2.0 * d0 * d1 / var).exp() {
                        return Ok(Leg {
                            which: Side::High,
                            s: s + ds * d0 / (d0 + d1),
                            max_x: high,
                        });
                    }
                }
            }
            s += ds;
            w = w1;
            x = x1;
            if x > max_x {
                max_x = x;
            }
        }
    }

    /// First contact with `low` or `high` from `x0`, times in the model clock.
    pub fn until_hit(&self, x0: f64, low: f64, high: f64, rng: &mut ChaCha8Rng) -> Result<HitOutcome> {
        let mut steps = 0;
        let leg = self.leg(x0, low, high, None, rng, &mut steps)?;
        Ok(HitOutcome {
            which: leg.which,
            time: leg.s / self.clock_ratio(),
            max_level: leg.max_x,
        })
    }
}

/// Euler–Maruyama path from `x0` until it first leaves `(low, high)`,
/// driven by the generator `path_rng(config.rng_master_seed, seed)`.
pub fn simulate_until_hit(model: &DiffusionModel, x0: f64, low: f64, high: f64, config: &SimConfig, seed: u64) -> Result<HitOutcome> {
    let engine = Engine::new(model, config)?;
    let mut rng = super::path_rng(config.rng_master_seed, seed);
    engine.until_hit(x0, low, high, &mut rng)
}
