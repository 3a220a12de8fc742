//! Tests of empirical samples against the limit laws: Wilson intervals,
//! Kolmogorov–Smirnov tests, the atom-plus-exponential mixture test, the
//! Poisson dispersion test and empirical CDFs.
//!
//! Every function depends only on the sample multiset, never on its order.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::limits::LimitPrediction;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Wilson score interval for a binomial proportion.
pub fn binomial_ci(successes: u64, n: u64, level: f64) -> Result<Interval> {
    if n == 0 || successes > n {
        return Err(Error::InvalidInput(format!(
            "need 0 <= successes <= n and n >= 1, got {successes} of {n}"
        )));
    }
    check_level(level)?;
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // the exact endpoints at p = 0 and p = 1
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    Ok(Interval { lo, hi })
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

/// Empirical CDF of `samples`; NaNs are rejected.
pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    Ecdf::new(samples)
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample("empirical CDF of no samples".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidInput("NaN in sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// `sup_x |F_n(x) − F(x)|` for a continuous CDF `F`.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.sorted.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = cdf(x);
            d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
        }
        d.clamp(0.0, 1.0)
    }

    /// `sup_x |F_n(x) − G_m(x)|` between two empirical CDFs.
    pub fn sup_distance_ecdf(&self, other: &Ecdf) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (n, m) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0, 0);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / n - j as f64 / m).abs());
        }
        d
    }
}

/// Kolmogorov survival function `P(K > t) = 2 Σ (−1)^{k−1} e^{−2k²t²}`.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.2 {
        // the alternating series converges slowly here; the value is 1 to double precision
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS statistic `d` with effective size `n`,
/// using Stephens' finite-sample scaling `(√n + 0.12 + 0.11/√n) d`.
pub fn ks_pvalue(d: f64, n: f64) -> f64 {
    let rn = n.sqrt();
    kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d)
}

/// One-sample KS test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<(f64, f64)> {
    let e = Ecdf::new(samples)?;
    let d = e.sup_distance(cdf);
    Ok((d, ks_pvalue(d, e.len() as f64)))
}

/// One-sample KS test against `Exp(rate)`.
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<(f64, f64)> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidInput(format!("rate must be positive, got {rate}")));
    }
    if samples.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidInput("exponential samples must be nonnegative".into()));
    }
    ks_test(samples, |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let (ea, eb) = (Ecdf::new(a)?, Ecdf::new(b)?);
    let d = ea.sup_distance_ecdf(&eb);
    let (n, m) = (ea.len() as f64, eb.len() as f64);
    Ok((d, ks_pvalue(d, n * m / (n + m))))
}

/// Mixture-test result at one threshold `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureTestReport {
    pub t0: f64,
    /// Fraction of samples below `t0`, the empirical atom weight.
    pub atom_fraction_hat: f64,
    /// 95% Wilson interval of the atom fraction.
    pub atom_ci: Interval,
    /// Predicted atom weight `1 − α_{x,z}`.
    pub atom_expected: f64,
    /// KS of the excesses `T − t0` over the tail against `Exp(rate)`.
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    /// Rate used in the KS test.
    pub rate: f64,
    /// Reciprocal mean excess of the tail.
    pub rate_hat: f64,
    pub n: usize,
    pub n_tail: usize,
}

/// Thresholds `{0.01, 0.05, 0.10}/rate`.
pub fn default_t0_grid(rate: f64) -> Vec<f64> {
    [0.01, 0.05, 0.10].iter().map(|c| c / rate).collect()
}

fn mixture_core(samples: &[f64], atom_expected: f64, rate: Option<f64>, t0_grid: &[f64]) -> Result<Vec<MixtureTestReport>> {
    if samples.is_empty() {
        return Err(Error::EmptySample("mixture test needs samples".into()));
    }
    if samples.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidInput("hitting times must be nonnegative".into()));
    }
    let n = samples.len();
    let mut out = Vec::with_capacity(t0_grid.len());
    for &t0 in t0_grid {
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::InvalidInput(format!("threshold t0 must be positive, got {t0}")));
        }
        let excess: Vec<f64> = samples.iter().filter(|&&x| x >= t0).map(|&x| x - t0).collect();
        if excess.is_empty() {
            return Err(Error::EmptySample(format!("no samples at or above t0 = {t0}")));
        }
        let below = (n - excess.len()) as u64;
        let mean_excess = excess.iter().sum::<f64>() / excess.len() as f64;
        let rate_hat = 1.0 / mean_excess;
        let r = rate.unwrap_or(rate_hat);
        let (ks_stat, ks_pvalue) = ks_exponential(&excess, r)?;
        out.push(MixtureTestReport {
            t0,
            atom_fraction_hat: below as f64 / n as f64,
            atom_ci: binomial_ci(below, n as u64, 0.95)?,
            atom_expected,
            ks_stat,
            ks_pvalue,
            rate: r,
            rate_hat,
            n,
            n_tail: excess.len(),
        });
    }
    Ok(out)
}

/// Compare hitting-time samples with the predicted mixture
/// `(1 − α) δ₀ + α Exp(rate)`: at each `t0` the fraction below `t0`
/// estimates the atom and, by memorylessness, the excesses over `t0` should
/// be `Exp(rate)`.
pub fn mixture_test(samples: &[f64], prediction: &LimitPrediction, t0_grid: &[f64]) -> Result<Vec<MixtureTestReport>> {
    mixture_core(samples, 1.0 - prediction.alpha_xz, Some(prediction.rate), t0_grid)
}

/// As [`mixture_test`], but the tail is tested against `Exp(rate_hat)`.
pub fn mixture_test_self_calibrated(samples: &[f64], atom_expected: f64, t0_grid: &[f64]) -> Result<Vec<MixtureTestReport>> {
    mixture_core(samples, atom_expected, None, t0_grid)
}

/// Dispersion index (sample variance over mean) of counts and its two-sided
/// chi-square p-value under a Poisson null, `(n − 1)·index ~ χ²_{n−1}`.
pub fn poisson_dispersion(counts: &[u64]) -> Result<(f64, f64)> {
    if counts.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "dispersion needs at least 2 counts, got {}",
            counts.len()
        )));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::Domain("dispersion index of all-zero counts".into()));
    }
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let index = var / mean;
    let chi = ChiSquared::new(n - 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let f = chi.cdf((n - 1.0) * index);
    Ok((index, (2.0 * f.min(1.0 - f)).min(1.0)))
}
