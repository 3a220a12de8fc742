//! Doob h-transform: the diffusion conditioned to reach `lower` before `upper`.
//!
//! With `h(x) = P_x(T_lower < T_upper) = ∫_x^upper 1/p / ∫_lower^upper 1/p`
//! the conditioned generator is `L^h f = L(hf)/h`, which again has divergence
//! form with `p^h = p h²` and `r^h = r h²`, and drift
//! `b + λ²σ² h'/h`.

use super::scale::ScaleObjects;
use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::quadrature::{LogPrimitive, LowerEnd, QuadConfig, UpperEnd};

/// The conditioned model on `[lower, upper]`.
#[derive(Debug, Clone)]
pub struct HTransformModel {
    scale: ScaleObjects,
    lower: f64,
    upper: f64,
    /// `∫ 1/p` over `[lower, upper]`.
    prim: LogPrimitive,
    log_total: f64,
}

/// Condition `model` on hitting `lower` before `upper`.
pub fn h_transform(model: &DiffusionModel, lower: f64, upper: f64) -> Result<HTransformModel> {
    HTransformModel::new(
        ScaleObjects::new(model, lower.max(f64::MIN_POSITIVE), QuadConfig::default())?,
        lower,
        upper,
    )
}

impl HTransformModel {
    pub fn new(scale: ScaleObjects, lower: f64, upper: f64) -> Result<Self> {
        if lower == upper {
            return Err(Error::Degenerate { lo: lower, hi: upper });
        }
        if !(lower > 0.0 && lower < upper && upper.is_finite()) {
            return Err(Error::Ordering(format!("0 < lower < upper, got lower = {lower}, upper = {upper}")));
        }
        let mut breaks = scale.breaks();
        breaks.retain(|&b| b > lower && b < upper);
        let prim = LogPrimitive::build(
            |y| scale.log_inv_p(y),
            lower,
            upper,
            LowerEnd::Regular,
            UpperEnd::Regular,
            &breaks,
            scale.quad(),
        )?;
        let log_total = prim.log_total();
        Ok(Self {
            scale,
            lower,
            upper,
            prim,
            log_total,
        })
    }

    pub fn base(&self) -> &DiffusionModel {
        self.scale.model()
    }

    pub fn scale(&self) -> &ScaleObjects {
        &self.scale
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// `log ∫_lower^upper 1/p`.
    pub fn log_total(&self) -> f64 {
        self.log_total
    }

    pub(crate) fn scale_primitive(&self) -> &LogPrimitive {
        &self.prim
    }

    fn check(&self, x: f64) -> Result<()> {
        if x >= self.lower && x <= self.upper {
            Ok(())
        } else {
            Err(Error::Domain(format!("x = {x} outside [{}, {}]", self.lower, self.upper)))
        }
    }

    /// `log ∫_x^upper 1/p`.
    pub fn log_scale_to_upper(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        self.prim.log_from(|y| self.scale.log_inv_p(y), x)
    }

    /// `log h(x)`.
    pub fn log_h(&self, x: f64) -> Result<f64> {
        Ok(self.log_scale_to_upper(x)? - self.log_total)
    }

    /// `h(x)`; `h(lower) = 1`, `h(upper) = 0`.
    pub fn h(&self, x: f64) -> Result<f64> {
        if x == self.lower {
            self.check(x)?;
            return Ok(1.0);
        }
        Ok(self.log_h(x)?.exp().min(1.0))
    }

    /// `h'(x)/h(x) = −(1/p(x)) / ∫_x^upper 1/p`.
    pub fn log_derivative(&self, x: f64) -> Result<f64> {
        Ok(-(self.scale.log_inv_p(x)? - self.log_scale_to_upper(x)?).exp())
    }

    /// Drift of the conditioned process, `b(x) + λ²σ²(x) h'(x)/h(x)`.
    pub fn drift(&self, x: f64) -> Result<f64> {
        let m = self.base();
        let s = m.lambda() * m.coefficients().sigma(x);
        Ok(m.drift(x)? + s * s * self.log_derivative(x)?)
    }

    /// `log p^h = log p + 2 log h`.
    pub fn log_ph(&self, x: f64) -> Result<f64> {
        Ok(self.scale.log_p(x)? + 2.0 * self.log_h(x)?)
    }

    /// `log r^h = log p^h − log(λ²σ²)`.
    pub fn log_rh(&self, x: f64) -> Result<f64> {
        let m = self.base();
        let s = m.lambda() * m.coefficients().sigma(x);
        Ok(self.log_ph(x)? - 2.0 * s.ln())
    }
}
