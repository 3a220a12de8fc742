//! Scaling-limit predictions along the curve `λ² p_{ε,z} = J`.
//!
//! In that limit the hitting time of `z` from `x` has the law
//! `(1 − α_{x,z}) δ₀ + α_{x,z} Exp(κJ)`, and the spikes form a Poisson process
//! of intensity `κJ`. This module evaluates the constants: `κ` (numerically
//! from finite-ε cycle moments, and from the closed-form limit integrals of
//! the linear and Rabi families), `α_{x,z}`, `q(z)`, the mixture law, `λ` on
//! the scaling curve, the Poisson total-variation bound, the Rabi spike
//! asymptotic and the invariant-mass normaliser `Z_ε`.

use log::warn;
use serde::Serialize;

use crate::analytic::{cycle_means, log_hitting_prob, log_spike_prob, ScaleObjects};
use crate::error::{Error, Result};
use crate::model::{CycleBoundaries, DiffusionModel};
use crate::quadrature::{log_add_exp, log_integrate, log_integrate_from_zero, log_integrate_to_infinity, QuadConfig};

// ---------------------------------------------------------------------------
// κ from finite-ε cycle moments

/// Limit estimate from a sequence `κ_ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaEstimate {
    pub eps: Vec<f64>,
    pub kappa_eps: Vec<f64>,
    /// Extrapolated `κ`, or the smallest-ε value if extrapolation was refused.
    pub kappa: f64,
    /// `|κ − κ_{ε_min}|`, a crude bound on the remaining bias.
    pub error_estimate: f64,
    /// Fitted convergence order `p` in `κ_ε ≈ κ + c ε^p`.
    pub order: Option<f64>,
    pub extrapolated: bool,
}

/// `κ_ε = 1/(E_α[T_β] + E_β[T̃_α])` at `λ = 1` for each ε, and the
/// extrapolated limit.
pub fn kappa_numeric(model: &DiffusionModel, boundaries: &CycleBoundaries, z: f64, eps_grid: &[f64]) -> Result<KappaEstimate> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidInput("empty epsilon grid".into()));
    }
    if eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("epsilon grid must be strictly decreasing".into()));
    }
    let unit = model.with_lambda(1.0)?;
    let mut kappa_eps = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let m = cycle_means(&unit.with_epsilon(eps)?, boundaries, z)?;
        kappa_eps.push(1.0 / m.mean());
    }
    Ok(extrapolate(eps_grid, &kappa_eps))
}

/// Richardson extrapolation with the order fitted from the three smallest
/// ε. Falls back to the raw smallest-ε value when the sequence is not
/// monotone or the fitted order is implausible.
pub fn extrapolate(eps: &[f64], values: &[f64]) -> KappaEstimate {
    let n = values.len();
    let raw = values[n - 1];
    let fallback = |reason: &str| {
        if n >= 3 {
            warn!("kappa extrapolation refused ({reason}); reporting the smallest-eps value");
        }
        KappaEstimate {
            eps: eps.to_vec(),
            kappa_eps: values.to_vec(),
            kappa: raw,
            error_estimate: if n >= 2 { (values[n - 1] - values[n - 2]).abs() } else { f64::NAN },
            order: None,
            extrapolated: false,
        }
    };
    if n < 3 {
        return fallback("fewer than three points");
    }
    let (e1, e2, e3) = (eps[n - 3], eps[n - 2], eps[n - 1]);
    let (k1, k2, k3) = (values[n - 3], values[n - 2], values[n - 1]);
    let d12 = k1 - k2;
    let d23 = k2 - k3;
    if d12 == 0.0 || d23 == 0.0 || d12.signum() != d23.signum() {
        return fallback("sequence not monotone");
    }
    let target = d12 / d23;
    // (e1^p − e2^p)/(e2^p − e3^p) is increasing in p for e1 > e2 > e3
    let ratio = |p: f64| (e1.powf(p) - e2.powf(p)) / (e2.powf(p) - e3.powf(p));
    let (mut lo, mut hi) = (0.5f64, 3.0f64);
    if target <= ratio(lo) || target >= ratio(hi) {
        return fallback("fitted order outside [0.5, 3]");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let c = d23 / (e2.powf(p) - e3.powf(p));
    let kappa = k3 - c * e3.powf(p);
    KappaEstimate {
        eps: eps.to_vec(),
        kappa_eps: values.to_vec(),
        kappa,
        error_estimate: (kappa - k3).abs(),
        order: Some(p),
        extrapolated: true,
    }
}

// ---------------------------------------------------------------------------
// Closed-form limits

/// Parts of the linear-family cycle limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example1Limit {
    /// `lim E_{αε}[T_{βε}]`.
    pub up: f64,
    /// `lim E_{βε}[T̃_{αε}]`.
    pub down: f64,
    pub kappa: f64,
}

/// `κ` for `b1 → a`, `b2 ≈ b x`, `σ ≈ σ' x` with `α(ε) = αε`, `β(ε) = βε`.
///
/// The limiting mean cycle length is
/// `(2/σ'²) ∬ exp(c(1/w − 1/y)) w^k / y^(k+2) dw dy` with `c = a/σ'²`,
/// `k = b/σ'²`, over four regions in the `(w, y)` plane. Their union is
/// `α < w < β`, `0 < y < ∞`.
pub fn kappa_limit_example1(a: f64, b: f64, sigma_prime: f64, alpha: f64, beta: f64) -> Result<f64> {
    Ok(example1_limit(a, b, sigma_prime, alpha, beta)?.kappa)
}

/// [`kappa_limit_example1`] with the up- and down-phase contributions.
pub fn example1_limit(a: f64, b: f64, sigma_prime: f64, alpha: f64, beta: f64) -> Result<Example1Limit> {
    if ![a, b, sigma_prime, alpha, beta].iter().all(|v| *v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput("all parameters must be positive and finite".into()));
    }
    if !(alpha < beta) {
        return Err(Error::Ordering(format!("alpha < beta, got {alpha}, {beta}")));
    }
    let s2 = sigma_prime * sigma_prime;
    let c = a / s2;
    let k = b / s2;
    let cfg = QuadConfig::default().with_rel_tol(1e-10);
    let log_f = move |w: f64, y: f64| c * (1.0 / w - 1.0 / y) + k * w.ln() - (k + 2.0) * y.ln();
    // inner integral over w ∈ (w0, w1) at fixed y
    let inner = |y: f64, w0: f64, w1: f64| -> Result<f64> {
        if w0 >= w1 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(log_integrate(|w| Ok(log_f(w, y)), w0, w1, &[], &cfg)?.log_value)
    };
    // up-phase, region y < α < w < β
    let up1 = log_integrate_from_zero(|y| inner(y, alpha, beta), alpha, &cfg)?.log_value;
    // up-phase, region α < y ≤ w < β
    let up2 = log_integrate(|y| inner(y, y, beta), alpha, beta, &[], &cfg)?.log_value;
    // down-phase, region α < w ≤ y < β
    let down1 = log_integrate(|y| inner(y, alpha, y), alpha, beta, &[], &cfg)?.log_value;
    // down-phase, region α < w < β < y
    let down2 = log_integrate_to_infinity(|y| inner(y, alpha, beta), beta, &cfg)?.log_value;
    let pre = (2.0 / s2).ln();
    let up = (pre + log_add_exp(up1, up2)).exp();
    let down = (pre + log_add_exp(down1, down2)).exp();
    Ok(Example1Limit {
        up,
        down,
        kappa: 1.0 / (up + down),
    })
}

/// `κ` for the linearized Rabi model with `α(ε) = ε/b`, `β(ε) = ε/b + ε²`:
/// `κ⁻¹ = 4b⁴ ∫₀¹ e^{b⁵w²/2} dw · ∫₀^∞ e^{−b⁵y²/2} dy`.
pub fn kappa_limit_rabi(b: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidInput(format!("b must be positive, got {b}")));
    }
    let b5 = b.powi(5);
    let cfg = QuadConfig::default().with_rel_tol(1e-12);
    let i1 = log_integrate(|w| Ok(0.5 * b5 * w * w), 0.0, 1.0, &[], &cfg)?.log_value;
    let i2 = log_integrate_to_infinity(|y| Ok(-0.5 * b5 * y * y), 0.0, &cfg)?.log_value;
    let exact = 0.5 * (std::f64::consts::PI / (2.0 * b5)).ln();
    if (i2 - exact).abs() > 1e-8 {
        return Err(Error::Quadrature {
            lo: 0.0,
            hi: f64::INFINITY,
            log_value: i2,
            rel_error: (i2 - exact).abs(),
        });
    }
    Ok((-(4.0 * b.powi(4)).ln() - i1 - i2).exp())
}

// ---------------------------------------------------------------------------
// α_{x,z}, q(z), mixture law

/// `lim P_x(T_{α(ε)} < T_z) = ∫_x^z 1/p₀ / ∫_0^z 1/p₀`, with `p₀` the scale
/// density at `ε = 0`.
pub fn alpha_xz(model: &DiffusionModel, x: f64, z: f64) -> Result<f64> {
    if !(x > 0.0 && x < z && z.is_finite()) {
        return Err(Error::Ordering(format!("0 < x < z, got x = {x}, z = {z}")));
    }
    let s = ScaleObjects::new(&model.with_epsilon(0.0)?, z, QuadConfig::default())?;
    let cfg = QuadConfig::default();
    let num = log_integrate(|y| s.log_inv_p(y), x, z, &[], &cfg)?.log_value;
    let den = log_integrate_from_zero(|y| s.log_inv_p(y), z, &cfg)?.log_value;
    Ok((num - den).exp().min(1.0))
}

/// Rate correction when the scaling curve is calibrated at level 1 instead
/// of `z`: `q(z) = 1 − α_{z,1}` for `z ≤ 1`, `(1 − α_{1,z})⁻¹` for `z > 1`.
pub fn q_of_z(model: &DiffusionModel, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InvalidInput(format!("z must be positive, got {z}")));
    }
    if z == 1.0 {
        Ok(1.0)
    } else if z < 1.0 {
        Ok(1.0 - alpha_xz(model, z, 1.0)?)
    } else {
        Ok(1.0 / (1.0 - alpha_xz(model, 1.0, z)?))
    }
}

/// The limit law `(1 − α_{x,z}) δ₀ + α_{x,z} Exp(rate)` of the hitting time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitPrediction {
    pub kappa: f64,
    pub j: f64,
    pub alpha_xz: f64,
    pub rate: f64,
    pub atom_weight: f64,
}

impl LimitPrediction {
    /// `P(T ≤ t)`; right-continuous, with the atom at `0`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            1.0 - self.alpha_xz * (-self.rate * t).exp()
        }
    }

    /// `P(T ≥ t)`: `1` at `t = 0`, then `α e^{−rate·t}`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            self.alpha_xz * (-self.rate * t).exp()
        }
    }
}

/// Assemble the mixture law. With `q_z = None` the curve is calibrated on
/// `p_{ε,z}` and the rate is `κJ`; with `Some(q)` it is calibrated on
/// `p_{ε,1}` and the rate is `κJ/q`.
pub fn mixture_law(kappa: f64, j: f64, alpha_xz: f64, q_z: Option<f64>) -> Result<LimitPrediction> {
    if !(kappa > 0.0 && j > 0.0) || !kappa.is_finite() || !j.is_finite() {
        return Err(Error::InvalidInput("kappa and J must be positive".into()));
    }
    if !(0.0..=1.0).contains(&alpha_xz) {
        return Err(Error::InvalidInput(format!("alpha_xz must be a probability, got {alpha_xz}")));
    }
    let q = q_z.unwrap_or(1.0);
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidInput(format!("q(z) must be positive, got {q}")));
    }
    Ok(LimitPrediction {
        kappa,
        j,
        alpha_xz,
        rate: kappa * j / q,
        atom_weight: 1.0 - alpha_xz,
    })
}

/// `λ = sqrt(J / p_{ε,z_cal})` on the scaling curve.
pub fn scaling_lambda(model: &DiffusionModel, boundaries: &CycleBoundaries, z_cal: f64, j: f64, eps: f64) -> Result<f64> {
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::InvalidInput(format!("J must be positive, got {j}")));
    }
    let lp = log_spike_prob(&model.with_epsilon(eps)?, boundaries, z_cal)?;
    Ok((0.5 * (j.ln() - lp)).exp())
}

/// Total-variation bound `p/(2√(1−p)) + E|p Ñ(λ²T) − κJT|`.
pub fn tv_bound(p: f64, mean_abs_dev: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p must lie in [0, 1), got {p}")));
    }
    if !(mean_abs_dev >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "mean absolute deviation must be nonnegative, got {mean_abs_dev}"
        )));
    }
    Ok(p / (2.0 * (1.0 - p).sqrt()) + mean_abs_dev)
}

// ---------------------------------------------------------------------------
// Rabi asymptotics and Z_ε

/// `log` of the small-ε asymptotic of `P_{ε/b + lε²}(T_z < T_{ε/b})`:
/// `ε² e^{−b³/(6ε²)} ∫₀^l e^{b⁵x²/2} dx / ∫₀^z e^{−b/(2x²)} dx`.
pub fn log_rabi_spike_prob_asymptotic(b: f64, eps: f64, l: f64, z: f64) -> Result<f64> {
    if !(b > 0.0 && eps > 0.0 && l >= 0.0 && z > 0.0) {
        return Err(Error::InvalidInput("b, eps, z must be positive and l nonnegative".into()));
    }
    if l == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let cfg = QuadConfig::default().with_rel_tol(1e-12);
    let b5 = b.powi(5);
    let num = log_integrate(|x| Ok(0.5 * b5 * x * x), 0.0, l, &[], &cfg)?.log_value;
    let den = log_integrate_from_zero(|x| Ok(-0.5 * b / (x * x)), z, &cfg)?.log_value;
    Ok(2.0 * eps.ln() - b.powi(3) / (6.0 * eps * eps) + num - den)
}

/// The Rabi spike asymptotic as a probability (may underflow to 0; see
/// [`log_rabi_spike_prob_asymptotic`]).
pub fn rabi_spike_prob_asymptotic(b: f64, eps: f64, l: f64, z: f64) -> Result<f64> {
    Ok(log_rabi_spike_prob_asymptotic(b, eps, l, z)?.exp())
}

/// `log P_{ε/b + lε²}(T_z < T_{ε/b})` for the linearized Rabi model.
pub fn log_rabi_spike_prob_exact(b: f64, eps: f64, l: f64, z: f64) -> Result<f64> {
    let m = DiffusionModel::rabi_linearized(b, 1.0, eps)?;
    let lower = eps / b;
    let start = lower + l * eps * eps;
    let s = ScaleObjects::new(&m, lower, QuadConfig::default())?;
    log_hitting_prob(&s, start, lower, z)
}

/// `log Z_ε` with `Z_ε = ∫₀^∞ x⁻⁴ exp(−ε/(3x³) + b/(2x²)) dx`, evaluated as
/// `∫₀^∞ u² exp(−εu³/3 + bu²/2) du` after `u = 1/x`.
pub fn log_z_eps(b: f64, eps: f64) -> Result<f64> {
    if !(b > 0.0 && eps > 0.0) {
        return Err(Error::InvalidInput("b and eps must be positive".into()));
    }
    let cfg = QuadConfig::default().with_rel_tol(1e-10);
    // the integrand peaks near u = b/ε; split there
    let peak = b / eps;
    let g = |u: f64| Ok(2.0 * u.ln() - eps * u * u * u / 3.0 + 0.5 * b * u * u);
    let head = log_integrate(g, 0.0, peak, &[], &cfg)?.log_value;
    let tail = log_integrate_to_infinity(g, peak, &cfg)?.log_value;
    Ok(log_add_exp(head, tail))
}

/// `Z_ε` (overflows for small ε; see [`log_z_eps`]).
pub fn z_eps(b: f64, eps: f64) -> Result<f64> {
    Ok(log_z_eps(b, eps)?.exp())
}

/// One row of the `Z_ε` diagnostic: the curves `λ² Z_ε = const` and
/// `λ² p_{ε,1} = const` agree up to a constant factor iff `log_product`
/// settles as ε ↓ 0. Reported, never asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZDiagnostic {
    pub eps: f64,
    pub log_z: f64,
    pub log_spike_prob: f64,
    /// `log(Z_ε p_{ε,1})`.
    pub log_product: f64,
}

pub fn z_eps_diagnostic(b: f64, eps: f64) -> Result<ZDiagnostic> {
    let log_z = log_z_eps(b, eps)?;
    let m = DiffusionModel::rabi_linearized(b, 1.0, eps)?;
    let lsp = log_spike_prob(&m, &CycleBoundaries::rabi(b), 1.0)?;
    Ok(ZDiagnostic {
        eps,
        log_z,
        log_spike_prob: lsp,
        log_product: log_z + lsp,
    })
}
