//! Diffusion models `dX = (λ²/2)(ε b1(X) − b2(X)) dt + λ σ(X) dB` on `(0, ∞)`.
//!
//! Presets carry closed forms for everything the rest of the crate needs
//! (log scale density, unit-diffusion coordinates); user coefficients fall
//! back to quadrature and root finding. The library cannot verify the
//! structural hypotheses on user coefficients globally: [`validate_model`]
//! checks the local Taylor bounds on a grid, and the caller owns the rest.
//!
//! The origin is treated as an inaccessible boundary: no routine evaluates
//! coefficients at `x <= 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadConfig};

/// User-supplied coefficients. `sigma` must vanish only at `0`.
pub trait CoefficientFns: Send + Sync {
    fn b1(&self, x: f64) -> f64;
    fn b2(&self, x: f64) -> f64;
    fn sigma(&self, x: f64) -> f64;

    /// Derivative of `sigma`; the default is a central difference.
    fn sigma_prime(&self, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1e-8);
        (self.sigma(x + h) - self.sigma(x - h)) / (2.0 * h)
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// Preset identity of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(rename = "bb_linear")]
    BBLinear,
    AsymLinear,
    RabiLinearized,
    Custom,
}

/// Coefficients of the asymmetric polynomial family
///
/// ```text
/// b1(x) = a + a1·x/(1+x)
/// b2(x) = b·x + b2_quad·x² + b2_cubic·x³
/// σ(x)  = s·x + s_quad·x²
/// ```
///
/// `b1` stays between `a` and `a + a1`, so it is bounded away from zero and
/// infinity whenever `a > 0` and `a + a1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymLinear {
    pub a: f64,
    #[serde(default)]
    pub a1: f64,
    pub b: f64,
    #[serde(default)]
    pub b2_quad: f64,
    #[serde(default)]
    pub b2_cubic: f64,
    pub s: f64,
    #[serde(default)]
    pub s_quad: f64,
}

impl AsymLinear {
    /// `b1 ≡ a`, `b2 = b·x`, `σ = s·x`: the linear family with general slopes.
    pub fn linear(a: f64, b: f64, s: f64) -> Self {
        Self {
            a,
            a1: 0.0,
            b,
            b2_quad: 0.0,
            b2_cubic: 0.0,
            s,
            s_quad: 0.0,
        }
    }

    fn is_linear(&self) -> bool {
        self.a1 == 0.0 && self.b2_quad == 0.0 && self.b2_cubic == 0.0 && self.s_quad == 0.0
    }

    fn check(&self) -> Result<()> {
        let finite = [self.a, self.a1, self.b, self.b2_quad, self.b2_cubic, self.s, self.s_quad]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("asymmetric coefficients must be finite".into()));
        }
        if !(self.a > 0.0 && self.a + self.a1 > 0.0) {
            return Err(Error::Domain("b1 must be bounded away from zero: need a > 0 and a + a1 > 0".into()));
        }
        if !(self.b > 0.0) || self.b2_quad < 0.0 || self.b2_cubic < 0.0 {
            return Err(Error::Domain("b2 needs b > 0 and nonnegative higher-order terms".into()));
        }
        if !(self.s > 0.0) || self.s_quad < 0.0 {
            return Err(Error::Domain("sigma needs s > 0 and s_quad >= 0".into()));
        }
        Ok(())
    }
}

/// The coefficient triple `(b1, b2, σ)`.
#[derive(Clone)]
pub enum Coefficients {
    /// `b1 ≡ 1`, `b2 = b·x`, `σ = x`.
    BBLinear {
        b: f64,
    },
    AsymLinear(AsymLinear),
    /// `b1 ≡ 1`, `b2 = b·x`, `σ = x²`.
    RabiLinearized {
        b: f64,
    },
    Custom(Arc<dyn CoefficientFns>),
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BBLinear { b } => f.debug_struct("BBLinear").field("b", b).finish(),
            Self::AsymLinear(c) => f.debug_tuple("AsymLinear").field(c).finish(),
            Self::RabiLinearized { b } => f.debug_struct("RabiLinearized").field("b", b).finish(),
            Self::Custom(c) => f.debug_tuple("Custom").field(&c.name()).finish(),
        }
    }
}

impl Coefficients {
    pub fn family(&self) -> Family {
        match self {
            Self::BBLinear { .. } => Family::BBLinear,
            Self::AsymLinear(_) => Family::AsymLinear,
            Self::RabiLinearized { .. } => Family::RabiLinearized,
            Self::Custom(_) => Family::Custom,
        }
    }

    pub fn b1(&self, x: f64) -> f64 {
        match self {
            Self::BBLinear { .. } | Self::RabiLinearized { .. } => 1.0,
            Self::AsymLinear(c) => c.a + c.a1 * x / (1.0 + x),
            Self::Custom(c) => c.b1(x),
        }
    }

    pub fn b2(&self, x: f64) -> f64 {
        match self {
            Self::BBLinear { b } | Self::RabiLinearized { b } => b * x,
            Self::AsymLinear(c) => x * (c.b + x * (c.b2_quad + x * c.b2_cubic)),
            Self::Custom(c) => c.b2(x),
        }
    }

    pub fn sigma(&self, x: f64) -> f64 {
        match self {
            Self::BBLinear { .. } => x,
            Self::RabiLinearized { .. } => x * x,
            Self::AsymLinear(c) => x * (c.s + c.s_quad * x),
            Self::Custom(c) => c.sigma(x),
        }
    }

    pub fn sigma_prime(&self, x: f64) -> f64 {
        match self {
            Self::BBLinear { .. } => 1.0,
            Self::RabiLinearized { .. } => 2.0 * x,
            Self::AsymLinear(c) => c.s + 2.0 * c.s_quad * x,
            Self::Custom(c) => c.sigma_prime(x),
        }
    }

    /// `(ε b1 − b2)/σ²`, the derivative of the log scale density.
    pub fn log_scale_slope(&self, epsilon: f64, x: f64) -> f64 {
        let s = self.sigma(x);
        (epsilon * self.b1(x) - self.b2(x)) / (s * s)
    }
}

/// A fully parametrised diffusion. Immutable; cheap to clone.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    coeffs: Coefficients,
    lambda: f64,
    epsilon: f64,
}

impl DiffusionModel {
    pub fn new(coeffs: Coefficients, lambda: f64, epsilon: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda must be positive and finite, got {lambda}")));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "epsilon must be nonnegative and finite, got {epsilon}"
            )));
        }
        match &coeffs {
            Coefficients::BBLinear { b } | Coefficients::RabiLinearized { b } => {
                if !(*b > 0.0) || !b.is_finite() {
                    return Err(Error::InvalidInput(format!("b must be positive and finite, got {b}")));
                }
            }
            Coefficients::AsymLinear(c) => c.check()?,
            Coefficients::Custom(_) => {}
        }
        Ok(Self { coeffs, lambda, epsilon })
    }

    pub fn bb_linear(b: f64, lambda: f64, epsilon: f64) -> Result<Self> {
        Self::new(Coefficients::BBLinear { b }, lambda, epsilon)
    }

    pub fn rabi_linearized(b: f64, lambda: f64, epsilon: f64) -> Result<Self> {
        Self::new(Coefficients::RabiLinearized { b }, lambda, epsilon)
    }

    pub fn asym_linear(c: AsymLinear, lambda: f64, epsilon: f64) -> Result<Self> {
        Self::new(Coefficients::AsymLinear(c), lambda, epsilon)
    }

    pub fn custom(c: Arc<dyn CoefficientFns>, lambda: f64, epsilon: f64) -> Result<Self> {
        Self::new(Coefficients::Custom(c), lambda, epsilon)
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn family(&self) -> Family {
        self.coeffs.family()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Same coefficients with a different time-scale factor.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.coeffs.clone(), lambda, self.epsilon)
    }

    /// Same coefficients with a different perturbation strength.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.coeffs.clone(), self.lambda, epsilon)
    }

    /// The `b` parameter of the linear presets (`b2'(0)` in general).
    pub fn b(&self) -> Option<f64> {
        match &self.coeffs {
            Coefficients::BBLinear { b } | Coefficients::RabiLinearized { b } => Some(*b),
            Coefficients::AsymLinear(c) => Some(c.b),
            Coefficients::Custom(_) => None,
        }
    }

    /// `(λ²/2)(ε b1(x) − b2(x))`.
    pub fn drift(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("drift requires x > 0, got {x}")));
        }
        Ok(self.drift_unchecked(x))
    }

    #[inline]
    pub(crate) fn drift_unchecked(&self, x: f64) -> f64 {
        0.5 * self.lambda * self.lambda * (self.epsilon * self.coeffs.b1(x) - self.coeffs.b2(x))
    }

    /// `λ σ(x)`; zero at the origin.
    pub fn diffusion_coeff(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("diffusion coefficient requires x >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(self.lambda * self.coeffs.sigma(x))
    }

    /// Log of the scale density anchored at `c`:
    /// `∫_c^x (ε b1 − b2)/σ²`, in closed form for the presets.
    pub fn log_scale_density(&self, c: f64, x: f64) -> Result<f64> {
        if !(x > 0.0) || !(c > 0.0) {
            return Err(Error::Domain(format!(
                "scale density requires positive points, got c = {c}, x = {x}"
            )));
        }
        let eps = self.epsilon;
        Ok(match &self.coeffs {
            Coefficients::BBLinear { b } => eps * (1.0 / c - 1.0 / x) - b * (x / c).ln(),
            Coefficients::RabiLinearized { b } => {
                eps / 3.0 * (1.0 / (c * c * c) - 1.0 / (x * x * x)) + 0.5 * b * (1.0 / (x * x) - 1.0 / (c * c))
            }
            Coefficients::AsymLinear(k) if k.is_linear() => (eps * k.a * (1.0 / c - 1.0 / x) - k.b * (x / c).ln()) / (k.s * k.s),
            coeffs => {
                if x == c {
                    return Ok(0.0);
                }
                integrate(
                    |l| Ok(coeffs.log_scale_slope(eps, l)),
                    c,
                    x,
                    &[],
                    &QuadConfig::default().with_rel_tol(1e-12),
                )?
                .value
            }
        })
    }

    /// Unit-diffusion coordinates `F(x) = ∫_anchor^x 1/σ`.
    pub fn feller_transform(&self, anchor: Anchor) -> Result<TransformedModel> {
        TransformedModel::new(self.clone(), anchor)
    }

    /// The natural Feller anchor: `1` for the linear-noise families, `+∞`
    /// for the Rabi model (giving `F(x) = −1/x`).
    pub fn default_anchor(&self) -> Anchor {
        match self.coeffs {
            Coefficients::RabiLinearized { .. } => Anchor::Infinity,
            _ => Anchor::Finite(1.0),
        }
    }
}

// ---------------------------------------------------------------------------
// Feller transform

/// Lower limit of `F(x) = ∫_anchor^x 1/σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Finite(f64),
    /// `+∞`; requires `1/σ` integrable at infinity (the Rabi model).
    Infinity,
}

/// The model in unit-diffusion coordinates `Y = F(X)`.
///
/// By Itô's formula `dY = μ(Y) dt + λ dB` with
/// `μ(y) = (λ²/2)[(ε b1 − b2)/σ − σ'](F⁻¹(y))`.
#[derive(Debug, Clone)]
pub struct TransformedModel {
    model: DiffusionModel,
    anchor: Anchor,
}

impl TransformedModel {
    fn new(model: DiffusionModel, anchor: Anchor) -> Result<Self> {
        match anchor {
            Anchor::Finite(c) if !(c > 0.0) || !c.is_finite() => {
                return Err(Error::Domain(format!("anchor must be positive, got {c}")));
            }
            Anchor::Infinity => match model.coeffs {
                Coefficients::RabiLinearized { .. } => {}
                Coefficients::AsymLinear(k) if k.s_quad > 0.0 => {}
                _ => {
                    return Err(Error::Domain("1/sigma is not integrable at infinity for this family".into()));
                }
            },
            _ => {}
        }
        if let Coefficients::Custom(c) = &model.coeffs {
            // sigma must not vanish in the interior; probe a wide grid
            for k in -40..=40 {
                let x = 2f64.powf(k as f64 / 2.0);
                let s = c.sigma(x);
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Domain(format!("sigma vanishes or is non-finite in the interior at x = {x}")));
                }
            }
        }
        Ok(Self { model, anchor })
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    /// `F(x)`.
    pub fn forward(&self, x: f64) -> f64 {
        match (&self.model.coeffs, self.anchor) {
            (Coefficients::BBLinear { .. }, Anchor::Finite(c)) => (x / c).ln(),
            (Coefficients::RabiLinearized { .. }, Anchor::Infinity) => -1.0 / x,
            (Coefficients::RabiLinearized { .. }, Anchor::Finite(c)) => 1.0 / c - 1.0 / x,
            (Coefficients::AsymLinear(k), anchor) => {
                let g = |u: f64| {
                    if k.s_quad == 0.0 {
                        u.ln() / k.s
                    } else {
                        (u / (k.s + k.s_quad * u)).ln() / k.s
                    }
                };
                match anchor {
                    Anchor::Finite(c) => g(x) - g(c),
                    // g(u) → ln(1/s_quad)/s as u → ∞
                    Anchor::Infinity => g(x) + k.s_quad.ln() / k.s,
                }
            }
            (Coefficients::Custom(c), Anchor::Finite(a)) => {
                integrate(|u| Ok(1.0 / c.sigma(u)), a, x, &[], &QuadConfig::default().with_rel_tol(1e-13))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            }
            _ => f64::NAN,
        }
    }

    /// `F⁻¹(y)`.
    pub fn inverse(&self, y: f64) -> f64 {
        match (&self.model.coeffs, self.anchor) {
            (Coefficients::BBLinear { .. }, Anchor::Finite(c)) => c * y.exp(),
            (Coefficients::RabiLinearized { .. }, Anchor::Infinity) => -1.0 / y,
            (Coefficients::RabiLinearized { .. }, Anchor::Finite(c)) => 1.0 / (1.0 / c - y),
            (Coefficients::AsymLinear(k), anchor) => {
                let shift = match anchor {
                    Anchor::Finite(c) => {
                        if k.s_quad == 0.0 {
                            c.ln() / k.s
                        } else {
                            (c / (k.s + k.s_quad * c)).ln() / k.s
                        }
                    }
                    Anchor::Infinity => -k.s_quad.ln() / k.s,
                };
                let e = (k.s * (y + shift)).exp();
                if k.s_quad == 0.0 {
                    e
                } else {
                    k.s * e / (1.0 - k.s_quad * e)
                }
            }
            (Coefficients::Custom(_), Anchor::Finite(_)) => self.invert_numerically(y),
            _ => f64::NAN,
        }
    }

    fn invert_numerically(&self, y: f64) -> f64 {
        // bracket in log x, then safeguarded Newton with F' = 1/σ
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while self.forward(lo.exp()) > y && lo > -700.0 {
            lo *= 2.0;
        }
        while self.forward(hi.exp()) < y && hi < 700.0 {
            hi *= 2.0;
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let x = t.exp();
            let r = self.forward(x) - y;
            if r.abs() <= 1e-14 * (1.0 + y.abs()) {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            // dF/dt = x/σ(x)
            let step = r * self.model.coeffs.sigma(x) / x;
            let next = t - step;
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 {
                break;
            }
        }
        t.exp()
    }

    /// Transformed drift at `λ = 1` (the cycle clock), in terms of `x = F⁻¹(y)`.
    #[inline]
    pub fn unit_drift_at_x(&self, x: f64) -> f64 {
        let c = &self.model.coeffs;
        let s = c.sigma(x);
        0.5 * ((self.model.epsilon * c.b1(x) - c.b2(x)) / s - c.sigma_prime(x))
    }

    /// Transformed drift `μ(y)` in the model clock.
    pub fn drift(&self, y: f64) -> f64 {
        let l = self.model.lambda;
        l * l * self.unit_drift_at_x(self.inverse(y))
    }

    /// Transformed diffusion coefficient; identically `λ`.
    pub fn diffusion_coeff(&self, y: f64) -> f64 {
        let x = self.inverse(y);
        // λ σ(x) F'(x) with F' = 1/σ
        self.model.lambda * self.model.coeffs.sigma(x) * (1.0 / self.model.coeffs.sigma(x))
    }
}

// ---------------------------------------------------------------------------
// Taylor bounds

/// Local constants of the Taylor remark: near zero
/// `|b1 − a| ≤ M x`, `|b2 − b x| ≤ M x²`, `|σ² − σ'² x²| ≤ M x³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaylorBounds {
    pub a: f64,
    pub b: f64,
    pub sigma_prime: f64,
    #[serde(rename = "m")]
    pub big_m: f64,
    pub delta0: f64,
}

impl TaylorBounds {
    pub fn new(a: f64, b: f64, sigma_prime: f64, big_m: f64, delta0: f64) -> Result<Self> {
        let t = Self {
            a,
            b,
            sigma_prime,
            big_m,
            delta0,
        };
        t.check()?;
        Ok(t)
    }

    pub fn check(&self) -> Result<()> {
        if ![self.a, self.b, self.sigma_prime, self.big_m, self.delta0]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
        {
            return Err(Error::InvalidInput("Taylor constants must be positive and finite".into()));
        }
        let cap = self.a.min(self.b).min(self.sigma_prime * self.sigma_prime) / (2.0 * self.big_m);
        if !(self.delta0 < cap) {
            return Err(Error::InvalidInput(format!(
                "delta0 = {} must be below (a ∧ b ∧ σ'²)/(2M) = {cap}",
                self.delta0
            )));
        }
        Ok(())
    }
}

/// Outcome at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorCheck {
    pub x: f64,
    /// `M x − |b1(x) − a|`; nonnegative when the inequality holds.
    pub b1_margin: f64,
    pub b2_margin: f64,
    pub sigma_margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub points: Vec<TaylorCheck>,
    pub pass: bool,
}

/// Check the three Taylor inequalities on a grid inside `(0, δ₀]`.
pub fn validate_model(model: &DiffusionModel, bounds: &TaylorBounds, grid: &[f64]) -> Result<ValidationReport> {
    bounds.check()?;
    if grid.is_empty() {
        return Err(Error::InvalidInput("validation grid is empty".into()));
    }
    let c = model.coefficients();
    let mut points = Vec::with_capacity(grid.len());
    for &x in grid {
        if !(x > 0.0) || x > bounds.delta0 {
            return Err(Error::Domain(format!("grid point {x} outside (0, delta0 = {}]", bounds.delta0)));
        }
        let m = bounds.big_m;
        let s = c.sigma(x);
        // tiny slack so exactly-linear coefficients pass despite rounding
        let slack = 64.0 * f64::EPSILON;
        let b1_margin = m * x - (c.b1(x) - bounds.a).abs();
        let b2_margin = m * x * x - (c.b2(x) - bounds.b * x).abs();
        let sigma_margin = m * x * x * x - (s * s - bounds.sigma_prime * bounds.sigma_prime * x * x).abs();
        let pass = b1_margin >= -slack * bounds.a.abs()
            && b2_margin >= -slack * (bounds.b * x).abs()
            && sigma_margin >= -slack * (bounds.sigma_prime * x).powi(2);
        points.push(TaylorCheck {
            x,
            b1_margin,
            b2_margin,
            sigma_margin,
            pass,
        });
    }
    let pass = points.iter().all(|p| p.pass);
    Ok(ValidationReport { points, pass })
}

// ---------------------------------------------------------------------------
// Cycle boundaries

/// The regeneration levels `0 < α(ε) < β(ε)`.
#[derive(Clone)]
pub enum CycleBoundaries {
    /// `α = alpha_mult·ε`, `β = beta_mult·ε` (the linear-noise choice).
    Linear { alpha_mult: f64, beta_mult: f64 },
    /// `α = ε/b`, `β = ε/b + ε²` (the Rabi choice).
    Rabi { b: f64 },
    Custom {
        alpha: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        beta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for CycleBoundaries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { alpha_mult, beta_mult } => f
                .debug_struct("Linear")
                .field("alpha_mult", alpha_mult)
                .field("beta_mult", beta_mult)
                .finish(),
            Self::Rabi { b } => f.debug_struct("Rabi").field("b", b).finish(),
            Self::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl CycleBoundaries {
    /// `α(ε) = ε`, `β(ε) = 2ε`.
    pub fn example1() -> Self {
        Self::Linear {
            alpha_mult: 1.0,
            beta_mult: 2.0,
        }
    }

    pub fn rabi(b: f64) -> Self {
        Self::Rabi { b }
    }

    pub fn alpha(&self, eps: f64) -> f64 {
        match self {
            Self::Linear { alpha_mult, .. } => alpha_mult * eps,
            Self::Rabi { b } => eps / b,
            Self::Custom { alpha, .. } => alpha(eps),
        }
    }

    pub fn beta(&self, eps: f64) -> f64 {
        match self {
            Self::Linear { beta_mult, .. } => beta_mult * eps,
            Self::Rabi { b } => eps / b + eps * eps,
            Self::Custom { beta, .. } => beta(eps),
        }
    }

    /// `(α(ε), β(ε))`, checking `0 < α < β`.
    pub fn levels(&self, eps: f64) -> Result<(f64, f64)> {
        let (a, b) = (self.alpha(eps), self.beta(eps));
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::Ordering(format!(
                "0 < alpha(eps) < beta(eps), got alpha = {a}, beta = {b} at eps = {eps}"
            )));
        }
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn drift_examples() {
        let m = DiffusionModel::bb_linear(1.0, 1.0, 0.1).unwrap();
        assert_eq!(m.drift(0.1).unwrap(), 0.0);
        let m = DiffusionModel::bb_linear(1.0, 2.0, 0.1).unwrap();
        assert_relative_eq!(m.drift(0.2).unwrap(), -0.2, max_relative = 1e-14);
        let m = DiffusionModel::rabi_linearized(1.0, 1.0, 0.01).unwrap();
        assert_relative_eq!(m.drift(1.0).unwrap(), -0.495, max_relative = 1e-14);
        assert!(matches!(m.drift(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn diffusion_examples() {
        let m = DiffusionModel::bb_linear(1.0, 3.0, 0.1).unwrap();
        assert_eq!(m.diffusion_coeff(0.0).unwrap(), 0.0);
        assert_relative_eq!(m.diffusion_coeff(0.5).unwrap(), 1.5);
        let m = DiffusionModel::rabi_linearized(1.0, 2.0, 0.1).unwrap();
        assert_relative_eq!(m.diffusion_coeff(0.5).unwrap(), 0.5);
        assert_eq!(m.diffusion_coeff(0.0).unwrap(), 0.0);
    }

    #[test]
    fn rabi_feller_map_and_drift() {
        let m = DiffusionModel::rabi_linearized(1.5, 1.0, 0.1).unwrap();
        let t = m.feller_transform(Anchor::Infinity).unwrap();
        assert_relative_eq!(t.forward(2.0), -0.5);
        // Itô: ½(εY² + bY) + 1/Y
        for &y in &[-0.3, -1.0, -7.0] {
            let expected = 0.5 * (0.1 * y * y + 1.5 * y) + 1.0 / y;
            assert_relative_eq!(t.drift(y), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn bb_feller_map() {
        let m = DiffusionModel::bb_linear(1.0, 1.0, 0.1).unwrap();
        let t = m.feller_transform(Anchor::Finite(3.0)).unwrap();
        assert_eq!(t.forward(3.0), 0.0);
        for &x in &[0.01, 1.0, 10.0] {
            assert_relative_eq!(t.inverse(t.forward(x)), x, max_relative = 1e-12);
        }
        // ½(ε/x − b − 1)
        assert_relative_eq!(t.drift(t.forward(0.2)), 0.5 * (0.5 - 2.0), max_relative = 1e-12);
    }

    #[test]
    fn taylor_examples() {
        let m = DiffusionModel::bb_linear(1.0, 1.0, 0.1).unwrap();
        let tb = TaylorBounds::new(1.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        let r = validate_model(&m, &tb, &[0.01, 0.05, 0.1]).unwrap();
        assert!(r.pass);
        assert!(r.points.iter().all(|p| p.b2_margin >= 0.0));

        let cubic = AsymLinear {
            b2_cubic: 1.0,
            ..AsymLinear::linear(1.0, 1.0, 1.0)
        };
        let m = DiffusionModel::asym_linear(cubic, 1.0, 0.1).unwrap();
        let r = validate_model(&m, &tb, &[0.05]).unwrap();
        assert!(r.pass);
        assert_relative_eq!(r.points[0].b2_margin, 2.5e-3 - 1.25e-4, max_relative = 1e-10);

        let quad = AsymLinear {
            b2_quad: 10.0,
            ..AsymLinear::linear(1.0, 1.0, 1.0)
        };
        let m = DiffusionModel::asym_linear(quad, 1.0, 0.1).unwrap();
        let r = validate_model(&m, &tb, &[0.05]).unwrap();
        assert!(!r.pass);

        assert!(validate_model(&m, &tb, &[0.2]).is_err());
        assert!(TaylorBounds::new(1.0, 1.0, 1.0, 1.0, 0.6).is_err());
    }

    #[test]
    fn log_scale_density_closed_forms() {
        let m = DiffusionModel::bb_linear(1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!((-m.log_scale_density(1.0, 2.0).unwrap()).exp(), 2.0, max_relative = 1e-14);
        let m = DiffusionModel::rabi_linearized(1.0, 1.0, 0.1).unwrap();
        assert_eq!(m.log_scale_density(1.0, 1.0).unwrap(), 0.0);
        let x: f64 = 0.7;
        let inv_p = (0.1 / 3.0 * (1.0 / x.powi(3) - 1.0)).exp() * (0.5 * (1.0 - 1.0 / (x * x))).exp();
        assert_relative_eq!((-m.log_scale_density(1.0, x).unwrap()).exp(), inv_p, max_relative = 1e-12);
    }

    #[test]
    fn boundaries() {
        let r = CycleBoundaries::rabi(2.0);
        assert_relative_eq!(r.alpha(0.1), 0.05);
        assert_relative_eq!(r.beta(0.1), 0.06);
        assert!(CycleBoundaries::Linear {
            alpha_mult: 2.0,
            beta_mult: 1.0
        }
        .levels(0.1)
        .is_err());
    }
}
