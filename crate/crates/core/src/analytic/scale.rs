//! Scale density, scale function, speed density and hitting probabilities.

use crate::error::{Error, Result};
use crate::model::{Coefficients, CycleBoundaries, DiffusionModel};
use crate::quadrature::{integrate, log_integrate, LogIntegral, QuadConfig};

/// Knot spacing of the cached log-scale-density table (a factor `2^(1/4)`).
const KNOTS_PER_OCTAVE: i32 = 4;
const KNOT_LO: i32 = -200;
const KNOT_HI: i32 = 80;

/// The scale density `p_c`, normalised by `p_c(c) = 1`, and the objects
/// derived from it.
///
/// `1/p` and `p` are never formed directly: callers receive logarithms.
#[derive(Debug, Clone)]
pub struct ScaleObjects {
    model: DiffusionModel,
    anchor: f64,
    quad: QuadConfig,
    /// `log p_c` at the knots `c·2^(k/4)`, for families without a closed form.
    table: Option<Vec<f64>>,
}

/// Build the scale objects of `model` anchored at `anchor`.
pub fn scale_density_log(model: &DiffusionModel, anchor: f64) -> Result<ScaleObjects> {
    ScaleObjects::new(model, anchor, QuadConfig::default())
}

impl ScaleObjects {
    pub fn new(model: &DiffusionModel, anchor: f64, quad: QuadConfig) -> Result<Self> {
        if !(anchor > 0.0) || !anchor.is_finite() {
            return Err(Error::Domain(format!("scale anchor must be positive, got {anchor}")));
        }
        let closed = match model.coefficients() {
            Coefficients::BBLinear { .. } | Coefficients::RabiLinearized { .. } => true,
            Coefficients::AsymLinear(k) => k.a1 == 0.0 && k.b2_quad == 0.0 && k.b2_cubic == 0.0 && k.s_quad == 0.0,
            Coefficients::Custom(_) => false,
        };
        let table = if closed { None } else { Some(build_table(model, anchor)?) };
        Ok(Self {
            model: model.clone(),
            anchor,
            quad,
            table,
        })
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    /// `log p_c(x)`.
    pub fn log_p(&self, x: f64) -> Result<f64> {
        let Some(table) = &self.table else {
            return self.model.log_scale_density(self.anchor, x);
        };
        if !(x > 0.0) {
            return Err(Error::Domain(format!("scale density requires x > 0, got {x}")));
        }
        let k = (KNOTS_PER_OCTAVE as f64 * (x / self.anchor).log2()).floor() as i32;
        if !(KNOT_LO..KNOT_HI).contains(&k) {
            return self.model.log_scale_density(self.anchor, x);
        }
        let knot = knot(self.anchor, k);
        let eps = self.model.epsilon();
        let coeffs = self.model.coefficients();
        let rest = integrate(
            |l| Ok(coeffs.log_scale_slope(eps, l)),
            knot,
            x,
            &[],
            &QuadConfig::default().with_rel_tol(1e-13),
        )?;
        Ok(table[(k - KNOT_LO) as usize] + rest.value)
    }

    /// `log(1/p_c(x))`, the log of the scale-function derivative.
    pub fn log_inv_p(&self, x: f64) -> Result<f64> {
        Ok(-self.log_p(x)?)
    }

    /// `log r(x)` with the speed density `r = p/(λ²σ²)`.
    pub fn log_speed(&self, x: f64) -> Result<f64> {
        let s = self.model.lambda() * self.model.coefficients().sigma(x);
        Ok(self.log_p(x)? - 2.0 * s.ln())
    }

    /// Point where the drift changes sign, when known in closed form. Both
    /// `1/p` (minimum) and `p` (maximum) turn there, so it is a useful
    /// quadrature breakpoint.
    pub fn drift_root(&self) -> Option<f64> {
        let eps = self.model.epsilon();
        let r = match self.model.coefficients() {
            Coefficients::BBLinear { b } | Coefficients::RabiLinearized { b } => eps / b,
            Coefficients::AsymLinear(k) => eps * k.a / k.b,
            Coefficients::Custom(_) => return None,
        };
        (r > 0.0).then_some(r)
    }

    pub(crate) fn breaks(&self) -> Vec<f64> {
        self.drift_root().into_iter().collect()
    }

    /// `log ∫_a^b 1/p`.
    pub fn log_scale_integral(&self, a: f64, b: f64) -> Result<LogIntegral> {
        log_integrate(|y| self.log_inv_p(y), a, b, &self.breaks(), &self.quad)
    }

    /// `s(x) − s(y) = ∫_y^x 1/p` for `y ≤ x` (the scale function up to the
    /// additive constant).
    pub fn scale_increment(&self, y: f64, x: f64) -> Result<f64> {
        Ok(self.log_scale_integral(y, x)?.value())
    }
}

fn knot(anchor: f64, k: i32) -> f64 {
    anchor * 2f64.powf(k as f64 / KNOTS_PER_OCTAVE as f64)
}

fn build_table(model: &DiffusionModel, anchor: f64) -> Result<Vec<f64>> {
    let eps = model.epsilon();
    let coeffs = model.coefficients();
    let cfg = QuadConfig::default().with_rel_tol(1e-13);
    let n = (KNOT_HI - KNOT_LO + 1) as usize;
    let mut table = vec![0.0; n];
    let zero = (-KNOT_LO) as usize;
    for i in zero + 1..n {
        let k = i as i32 + KNOT_LO;
        table[i] = table[i - 1]
            + integrate(
                |l| Ok(coeffs.log_scale_slope(eps, l)),
                knot(anchor, k - 1),
                knot(anchor, k),
                &[],
                &cfg,
            )?
            .value;
    }
    for i in (0..zero).rev() {
        let k = i as i32 + KNOT_LO;
        table[i] = table[i + 1]
            - integrate(
                |l| Ok(coeffs.log_scale_slope(eps, l)),
                knot(anchor, k),
                knot(anchor, k + 1),
                &[],
                &cfg,
            )?
            .value;
    }
    Ok(table)
}

/// `P_x(T_R < T_r) = ∫_r^x 1/p / ∫_r^R 1/p` for `0 < r ≤ x ≤ R`, `r < R`.
pub fn hitting_prob(model: &DiffusionModel, x: f64, r: f64, big_r: f64) -> Result<f64> {
    let s = ScaleObjects::new(model, r.max(f64::MIN_POSITIVE), QuadConfig::default())?;
    hitting_prob_with(&s, x, r, big_r)
}

/// [`hitting_prob`] with prebuilt scale objects.
pub fn hitting_prob_with(s: &ScaleObjects, x: f64, r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("lower barrier must be positive, got {r}")));
    }
    if r == big_r {
        return Err(Error::Degenerate { lo: r, hi: big_r });
    }
    if !(r <= x && x <= big_r) {
        return Err(Error::Ordering(format!("r <= x <= R, got r = {r}, x = {x}, R = {big_r}")));
    }
    if x == r {
        return Ok(0.0);
    }
    if x == big_r {
        return Ok(1.0);
    }
    let num = s.log_scale_integral(r, x)?;
    let den = s.log_scale_integral(r, big_r)?;
    Ok((num.log_value - den.log_value).exp().min(1.0))
}

/// `log P_x(T_R < T_r)`; useful when the probability underflows.
pub fn log_hitting_prob(s: &ScaleObjects, x: f64, r: f64, big_r: f64) -> Result<f64> {
    if !(r > 0.0 && r < big_r && r <= x && x <= big_r) {
        return Err(Error::Ordering(format!(
            "0 < r <= x <= R with r < R, got r = {r}, x = {x}, R = {big_r}"
        )));
    }
    if x == r {
        return Ok(f64::NEG_INFINITY);
    }
    let num = s.log_scale_integral(r, x)?;
    let den = s.log_scale_integral(r, big_r)?;
    Ok((num.log_value - den.log_value).min(0.0))
}

/// The spike probability `p_{ε,z} = P_β(T_z < T_α)` at the model's ε.
pub fn spike_prob(model: &DiffusionModel, boundaries: &CycleBoundaries, z: f64) -> Result<f64> {
    Ok(log_spike_prob(model, boundaries, z)?.exp())
}

/// `log p_{ε,z}`.
pub fn log_spike_prob(model: &DiffusionModel, boundaries: &CycleBoundaries, z: f64) -> Result<f64> {
    let (alpha, beta) = boundaries.levels(model.epsilon())?;
    if z < beta {
        return Err(Error::Ordering(format!("z >= beta(eps) = {beta}, got z = {z}")));
    }
    if z == beta {
        return Ok(0.0);
    }
    let s = ScaleObjects::new(model, alpha, QuadConfig::default())?;
    log_hitting_prob(&s, beta, alpha, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AsymLinear;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_hitting_probability() {
        let m = DiffusionModel::bb_linear(1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(hitting_prob(&m, 1.5, 1.0, 2.0).unwrap(), 1.25 / 3.0, max_relative = 1e-12);
        assert_eq!(hitting_prob(&m, 1.0, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(hitting_prob(&m, 2.0, 1.0, 2.0).unwrap(), 1.0);
        assert!(matches!(hitting_prob(&m, 1.0, 1.0, 1.0), Err(Error::Degenerate { .. })));
        assert!(matches!(hitting_prob(&m, 3.0, 1.0, 2.0), Err(Error::Ordering(_))));
    }

    #[test]
    fn tabulated_density_matches_closed_form() {
        // a nonlinear-looking family that is secretly linear: compare table path
        // against the closed form by perturbing nothing but the representation
        let lin = AsymLinear::linear(1.3, 0.7, 1.1);
        let closed = DiffusionModel::asym_linear(lin, 1.0, 0.05).unwrap();
        let sc = ScaleObjects::new(&closed, 0.4, QuadConfig::default()).unwrap();
        struct Same(AsymLinear);
        impl crate::model::CoefficientFns for Same {
            fn b1(&self, _: f64) -> f64 {
                self.0.a
            }
            fn b2(&self, x: f64) -> f64 {
                self.0.b * x
            }
            fn sigma(&self, x: f64) -> f64 {
                self.0.s * x
            }
        }
        let custom = DiffusionModel::custom(std::sync::Arc::new(Same(lin)), 1.0, 0.05).unwrap();
        let st = ScaleObjects::new(&custom, 0.4, QuadConfig::default()).unwrap();
        for &x in &[1e-3, 0.02, 0.4, 0.77, 5.0, 300.0] {
            assert_relative_eq!(st.log_p(x).unwrap(), sc.log_p(x).unwrap(), epsilon = 1e-9, max_relative = 1e-11);
        }
    }

    #[test]
    fn spike_probability_degenerate_target() {
        let m = DiffusionModel::bb_linear(1.0, 1.0, 0.01).unwrap();
        let b = CycleBoundaries::example1();
        assert_eq!(spike_prob(&m, &b, 0.02).unwrap(), 1.0);
        assert!(spike_prob(&m, &b, 0.015).is_err());
    }
}
