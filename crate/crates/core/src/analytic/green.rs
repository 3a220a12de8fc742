//! Green kernels and exit-time moments.
//!
//! The generator is written in divergence form `L f = (p f')' / (2r)`, so the
//! solution of `L E = −1` vanishing on the absorbing ends is
//! `E(x) = ∫ g(x, y) r(y) dy` with
//!
//! ```text
//! g(x, y) = (2/W) u(x ∧ y) v(x ∨ y)
//! ```
//!
//! where `u`, `v` are `L`-harmonic, `u` vanishes on an absorbing lower end,
//! `v` on an absorbing upper end, and `W = p (u'v − uv')` is constant. Each
//! kind fixes `u`, `v` so that `W` is known in closed form:
//!
//! | kind            | `u(x)`                        | `v(x)`       | `W`          |
//! |-----------------|-------------------------------|--------------|--------------|
//! | `TwoAbsorbing`  | `∫_l^x 1/p`                   | `∫_x^R 1/p`  | `∫_l^R 1/p`  |
//! | `UpperAbsorbing`| `1` (lower end inaccessible)  | `∫_x^R 1/p`  | `1`          |
//! | `LowerAbsorbing`| `∫_l^x 1/p^h`                 | `1`          | `1`          |
//!
//! `LowerAbsorbing` is the kernel of the h-transformed diffusion on
//! `(lower, upper)`, for which `upper` is never reached; there
//! `u(x) = S (1/h(x) − 1)` with `S = ∫_l^R 1/p`, avoiding the non-integrable
//! `1/p^h` near the upper end.

use serde::{Deserialize, Serialize};

use super::htransform::HTransformModel;
use super::scale::ScaleObjects;
use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::quadrature::{log_add_exp, log_integrate, log_integrate_from_zero, LogPrimitive, LowerEnd, QuadConfig, UpperEnd};

const LN_2: f64 = std::f64::consts::LN_2;

/// Boundary behaviour of the exit problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    TwoAbsorbing,
    /// Domain `(l, R]` with `R` absorbing and `l` either inaccessible
    /// (`l = 0`) or reflecting (`l > 0`).
    UpperAbsorbing,
    /// h-transformed process on `(l, R)`: `l` absorbing, `R` never reached.
    LowerAbsorbing,
}

#[derive(Debug, Clone)]
enum Source {
    Base(ScaleObjects),
    H(Box<HTransformModel>),
}

/// Green kernel of one exit problem, with running integrals precomputed so
/// that exit-time moments cost a handful of panel evaluations per point.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    kind: KernelKind,
    lo: f64,
    hi: f64,
    source: Source,
    /// `∫ 1/p` of the base process, over the part of the domain where it is
    /// finite.
    scale_prim: LogPrimitive,
    log_w: f64,
    /// `∫_lo^x u r`.
    a_prim: LogPrimitive,
    /// `∫_x^hi v r`.
    b_prim: LogPrimitive,
}

/// Kernel for `model` on `(lo, hi)`.
pub fn green_kernel(model: &DiffusionModel, lo: f64, hi: f64, kind: KernelKind) -> Result<GreenKernel> {
    match kind {
        KernelKind::LowerAbsorbing => GreenKernel::for_h_transform(&super::htransform::h_transform(model, lo, hi)?),
        _ => {
            let anchor = if lo > 0.0 { lo } else { hi };
            GreenKernel::new(ScaleObjects::new(model, anchor, QuadConfig::default())?, lo, hi, kind)
        }
    }
}

impl GreenKernel {
    /// Kernel of the base process (`TwoAbsorbing` or `UpperAbsorbing`).
    pub fn new(scale: ScaleObjects, lo: f64, hi: f64, kind: KernelKind) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Degenerate { lo, hi });
        }
        let quad = *scale.quad();
        let breaks = scale.breaks();
        let (scale_prim, log_w) = match kind {
            KernelKind::TwoAbsorbing => {
                if lo == 0.0 {
                    return Err(Error::Domain("a two-sided absorbing kernel needs a positive lower end".into()));
                }
                let p = LogPrimitive::build(|y| scale.log_inv_p(y), lo, hi, LowerEnd::Regular, UpperEnd::Regular, &breaks, &quad)?;
                let w = p.log_total();
                (p, w)
            }
            KernelKind::UpperAbsorbing => {
                // 1/p need not be integrable at the lower end; tabulate from an
                // interior point and integrate below it on demand
                let start = if lo > 0.0 {
                    lo
                } else {
                    breaks.first().copied().filter(|&r| r < hi).unwrap_or(hi).min(0.5 * hi)
                };
                let p = LogPrimitive::build(
                    |y| scale.log_inv_p(y),
                    start,
                    hi,
                    LowerEnd::Regular,
                    UpperEnd::Regular,
                    &breaks,
                    &quad,
                )?;
                (p, 0.0)
            }
            KernelKind::LowerAbsorbing => {
                return Err(Error::InvalidInput(
                    "use GreenKernel::for_h_transform for the conditioned kernel".into(),
                ));
            }
        };
        let mut k = Self {
            kind,
            lo,
            hi,
            source: Source::Base(scale),
            scale_prim: scale_prim.clone(),
            log_w,
            a_prim: scale_prim.clone(),
            b_prim: scale_prim,
        };
        k.build_moment_primitives()?;
        Ok(k)
    }

    /// Kernel of the h-transformed process on `(h.lower(), h.upper())`.
    pub fn for_h_transform(h: &HTransformModel) -> Result<Self> {
        let scale_prim = h.scale_primitive().clone();
        let mut k = Self {
            kind: KernelKind::LowerAbsorbing,
            lo: h.lower(),
            hi: h.upper(),
            source: Source::H(Box::new(h.clone())),
            scale_prim: scale_prim.clone(),
            log_w: 0.0,
            a_prim: scale_prim.clone(),
            b_prim: scale_prim,
        };
        k.build_moment_primitives()?;
        Ok(k)
    }

    fn build_moment_primitives(&mut self) -> Result<()> {
        let quad = *self.quad();
        let breaks = self.breaks();
        let (lo, hi) = (self.lo, self.hi);
        let a_lower = if self.kind == KernelKind::UpperAbsorbing && lo == 0.0 {
            LowerEnd::Zero
        } else {
            LowerEnd::Regular
        };
        let a_prim = LogPrimitive::build(|y| self.log_ur(y), lo, hi, a_lower, UpperEnd::Regular, &breaks, &quad)?;
        let b_lo = if self.kind == KernelKind::UpperAbsorbing {
            self.scale_prim.lo()
        } else {
            lo
        };
        let b_prim = LogPrimitive::build(|y| self.log_vr(y), b_lo, hi, LowerEnd::Regular, UpperEnd::Regular, &breaks, &quad)?;
        self.a_prim = a_prim;
        self.b_prim = b_prim;
        Ok(())
    }

    fn quad(&self) -> &QuadConfig {
        match &self.source {
            Source::Base(s) => s.quad(),
            Source::H(h) => h.scale().quad(),
        }
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b = match &self.source {
            Source::Base(s) => s.breaks(),
            Source::H(h) => h.scale().breaks(),
        };
        b.retain(|&x| x > self.lo && x < self.hi);
        b
    }

    fn base_scale(&self) -> &ScaleObjects {
        match &self.source {
            Source::Base(s) => s,
            Source::H(h) => h.scale(),
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `log W`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_w
    }

    fn log_inv_p_base(&self, y: f64) -> Result<f64> {
        self.base_scale().log_inv_p(y)
    }

    /// `log ∫_y^hi 1/p` of the base process.
    fn log_scale_from(&self, y: f64) -> Result<f64> {
        self.scale_prim.log_from(|t| self.log_inv_p_base(t), y)
    }

    /// `log ∫_lo^y 1/p` of the base process.
    fn log_scale_to(&self, y: f64) -> Result<f64> {
        self.scale_prim.log_to(|t| self.log_inv_p_base(t), y)
    }

    /// `log u(y)`.
    pub fn log_u(&self, y: f64) -> Result<f64> {
        match self.kind {
            KernelKind::TwoAbsorbing => self.log_scale_to(y),
            KernelKind::UpperAbsorbing => Ok(0.0),
            KernelKind::LowerAbsorbing => {
                // S (1/h − 1) = S (S − G)/G with G = ∫_y^hi 1/p
                let Source::H(h) = &self.source else { unreachable!() };
                if y >= self.hi {
                    return Ok(f64::INFINITY);
                }
                Ok(self.log_scale_to(y)? + h.log_total() - self.log_scale_from(y)?)
            }
        }
    }

    /// `log v(y)`.
    pub fn log_v(&self, y: f64) -> Result<f64> {
        match self.kind {
            KernelKind::TwoAbsorbing | KernelKind::UpperAbsorbing => self.log_scale_from(y),
            KernelKind::LowerAbsorbing => Ok(0.0),
        }
    }

    /// `log r(y)` (the h-transformed speed density for `LowerAbsorbing`).
    pub fn log_speed(&self, y: f64) -> Result<f64> {
        match &self.source {
            Source::Base(s) => s.log_speed(y),
            Source::H(h) => {
                if y >= self.hi {
                    return Ok(f64::NEG_INFINITY);
                }
                let log_h = self.log_scale_from(y)? - h.log_total();
                Ok(h.scale().log_speed(y)? + 2.0 * log_h)
            }
        }
    }

    fn log_ur(&self, y: f64) -> Result<f64> {
        if self.kind == KernelKind::LowerAbsorbing {
            // u^h r^h = (S − G) G r / S, finite up to the upper end
            let Source::H(h) = &self.source else { unreachable!() };
            return Ok(self.log_scale_to(y)? + self.log_scale_from(y)? + h.scale().log_speed(y)? - h.log_total());
        }
        Ok(self.log_u(y)? + self.log_speed(y)?)
    }

    fn log_vr(&self, y: f64) -> Result<f64> {
        Ok(self.log_v(y)? + self.log_speed(y)?)
    }

    fn check_point(&self, x: f64) -> Result<()> {
        let lo_ok = if self.kind == KernelKind::UpperAbsorbing {
            x > self.lo || (self.lo > 0.0 && x == self.lo)
        } else {
            x >= self.lo
        };
        if lo_ok && x <= self.hi {
            Ok(())
        } else {
            Err(Error::Ordering(format!(
                "point {x} inside the kernel domain ({}, {})",
                self.lo, self.hi
            )))
        }
    }

    fn on_absorbing_end(&self, x: f64) -> bool {
        match self.kind {
            KernelKind::TwoAbsorbing => x == self.lo || x == self.hi,
            KernelKind::UpperAbsorbing => x == self.hi,
            KernelKind::LowerAbsorbing => x == self.lo,
        }
    }

    /// `g(x, y)`.
    pub fn g(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.log_g(x, y)?.exp())
    }

    /// `log g(x, y)`.
    pub fn log_g(&self, x: f64, y: f64) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        if self.on_absorbing_end(x) || self.on_absorbing_end(y) {
            return Ok(f64::NEG_INFINITY);
        }
        let (m, n) = if x <= y { (x, y) } else { (y, x) };
        Ok(LN_2 - self.log_w + self.log_u(m)? + self.log_v(n)?)
    }

    /// `E_x[T] = (2/W)[v(x) ∫_lo^x u r + u(x) ∫_x^hi v r]`.
    pub fn expected_exit_time(&self, x: f64) -> Result<f64> {
        Ok(self.log_expected_exit_time(x)?.exp())
    }

    /// `log E_x[T]`.
    pub fn log_expected_exit_time(&self, x: f64) -> Result<f64> {
        self.check_point(x)?;
        if self.on_absorbing_end(x) {
            return Ok(f64::NEG_INFINITY);
        }
        let left = self.log_v(x)? + self.a_prim.log_to(|y| self.log_ur(y), x)?;
        let right = self.log_u(x)? + self.b_prim.log_from(|y| self.log_vr(y), x)?;
        Ok(LN_2 - self.log_w + log_add_exp(left, right))
    }

    /// Kac's formula `E_x[T²] = 2 ∫ g(x, y) E_y[T] r(y) dy`.
    pub fn exit_time_second_moment(&self, x: f64) -> Result<f64> {
        self.check_point(x)?;
        if self.on_absorbing_end(x) {
            return Ok(0.0);
        }
        let quad = *self.quad();
        let breaks = self.breaks();
        let left_integrand = |y: f64| -> Result<f64> { Ok(self.log_ur(y)? + self.log_expected_exit_time(y)?) };
        let right_integrand = |y: f64| -> Result<f64> { Ok(self.log_vr(y)? + self.log_expected_exit_time(y)?) };
        let left = if self.kind == KernelKind::UpperAbsorbing && self.lo == 0.0 {
            log_integrate_from_zero(left_integrand, x, &quad)?.log_value
        } else {
            log_integrate(left_integrand, self.lo, x, &breaks, &quad)?.log_value
        };
        let right = log_integrate(right_integrand, x, self.hi, &breaks, &quad)?.log_value;
        let total = log_add_exp(self.log_v(x)? + left, self.log_u(x)? + right);
        Ok((2.0 * LN_2 - self.log_w + total).exp())
    }
}

/// `E_start[T]` for the exit problem of `kind` on `(lo, hi)`.
pub fn expected_exit_time(model: &DiffusionModel, start: f64, lo: f64, hi: f64, kind: KernelKind) -> Result<f64> {
    green_kernel(model, lo, hi, kind)?.expected_exit_time(start)
}

/// `E_start[T²]` by Kac's moment formula.
pub fn exit_time_second_moment(model: &DiffusionModel, start: f64, lo: f64, hi: f64, kind: KernelKind) -> Result<f64> {
    green_kernel(model, lo, hi, kind)?.exit_time_second_moment(start)
}
