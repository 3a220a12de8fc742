use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use spikesim::limits::mixture_law;
use spikesim::stats::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn exp_samples(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() / rate).collect()
}

/// Draws from `(1 − α) U(0, atom_width) + α Exp(rate)`.
fn mixture_samples(rng: &mut ChaCha8Rng, n: usize, alpha: f64, rate: f64, atom_width: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < alpha {
                -(1.0 - rng.random::<f64>()).ln() / rate
            } else {
                atom_width * rng.random::<f64>()
            }
        })
        .collect()
}

#[test]
fn wilson_matches_independent_formula() {
    // z = 1.959963984540054 for 95%
    let z: f64 = 1.959963984540054;
    for (k, n) in [(50u64, 100u64), (3, 40), (997, 1000), (1, 7)] {
        let (kf, nf) = (k as f64, n as f64);
        let p = kf / nf;
        let denom = 1.0 + z * z / nf;
        let centre = (p + z * z / (2.0 * nf)) / denom;
        let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
        let ci = binomial_ci(k, n, 0.95).unwrap();
        assert!((ci.lo - (centre - half)).abs() < 1e-12);
        assert!((ci.hi - (centre + half)).abs() < 1e-12);
    }
    let ci = binomial_ci(50, 100, 0.95).unwrap();
    assert!((ci.lo - 0.404).abs() < 1e-3 && (ci.hi - 0.596).abs() < 1e-3);
}

#[test]
fn wilson_edges_and_errors() {
    assert_eq!(binomial_ci(0, 25, 0.95).unwrap().lo, 0.0);
    assert_eq!(binomial_ci(25, 25, 0.95).unwrap().hi, 1.0);
    assert!(binomial_ci(3, 2, 0.95).is_err());
    assert!(binomial_ci(0, 0, 0.95).is_err());
    assert!(binomial_ci(1, 2, 1.5).is_err());
}

#[test]
fn wilson_width_shrinks_like_inverse_root_n() {
    let w: Vec<f64> = [100u64, 10_000, 1_000_000]
        .iter()
        .map(|&n| binomial_ci(n * 3 / 10, n, 0.95).unwrap().width())
        .collect();
    assert!((w[0] / w[1] - 10.0).abs() < 0.2);
    assert!((w[1] / w[2] - 10.0).abs() < 0.02);
}

#[test]
fn ks_exponential_has_nominal_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let reps = 1000;
    let rejections = (0..reps)
        .filter(|_| {
            let s = exp_samples(&mut rng, 500, 2.0);
            ks_exponential(&s, 2.0).unwrap().1 < 0.01
        })
        .count();
    let rate = rejections as f64 / reps as f64;
    assert!(rate <= 0.02, "{rate}");
}

#[test]
fn ks_exponential_detects_a_wrong_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = exp_samples(&mut rng, 10_000, 1.0);
    assert!(ks_exponential(&s, 2.0).unwrap().1 < 0.01);
}

#[test]
fn ks_on_identical_samples() {
    let s = vec![5.0; 1000];
    let (d, p) = ks_exponential(&s, 100.0).unwrap();
    assert!(d > 0.99 && p < 1e-12);
    assert!(ks_exponential(&[], 1.0).is_err());
}

#[test]
fn ks_is_invariant_under_monotone_transformation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = exp_samples(&mut rng, 800, 1.5);
    let (d, p) = ks_exponential(&s, 1.5).unwrap();
    // Y = ln X has CDF 1 − exp(−rate e^y)
    let logs: Vec<f64> = s.iter().map(|x| x.ln()).collect();
    let (dl, pl) = ks_test(&logs, |y| -(-1.5 * y.exp()).exp_m1()).unwrap();
    assert!((d - dl).abs() < 1e-12 && (p - pl).abs() < 1e-12);
}

#[test]
fn two_sample_ks_same_and_different_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = exp_samples(&mut rng, 3000, 1.0);
    let b = exp_samples(&mut rng, 2000, 1.0);
    let c = exp_samples(&mut rng, 2000, 1.5);
    assert!(ks_two_sample(&a, &b).unwrap().1 > 0.01);
    assert!(ks_two_sample(&a, &c).unwrap().1 < 0.01);
}

#[test]
fn ecdf_single_jump() {
    let e = ecdf(&[2.5]).unwrap();
    assert_eq!(e.eval(2.4999), 0.0);
    assert_eq!(e.eval(2.5), 1.0);
}

#[test]
fn ecdf_matches_naive_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s: Vec<f64> = (0..100).map(|_| (rng.random::<f64>() * 20.0).floor() / 4.0).collect();
    let e = ecdf(&s).unwrap();
    for i in 0..100 {
        let x = i as f64 / 20.0;
        let naive = s.iter().filter(|&&v| v <= x).count() as f64 / 100.0;
        assert_eq!(e.eval(x), naive);
    }
    // sup-distance against the naive O(n²) evaluation at all jump points
    let cdf = |x: f64| (x / 5.0).clamp(0.0, 1.0);
    let mut naive_d: f64 = 0.0;
    for &x in &s {
        let right = s.iter().filter(|&&v| v <= x).count() as f64 / 100.0;
        let left = s.iter().filter(|&&v| v < x).count() as f64 / 100.0;
        naive_d = naive_d.max((right - cdf(x)).abs()).max((left - cdf(x)).abs());
    }
    assert!((e.sup_distance(cdf) - naive_d).abs() < 1e-12);
}

#[test]
fn ecdf_of_merged_samples_is_weighted_mixture() {
    let a = [0.1, 0.5, 0.9, 2.0];
    let b = [0.3, 0.5, 1.1];
    let merged: Vec<f64> = a.iter().chain(&b).cloned().collect();
    let (ea, eb, em) = (ecdf(&a).unwrap(), ecdf(&b).unwrap(), ecdf(&merged).unwrap());
    for x in [0.0, 0.2, 0.5, 1.0, 1.5, 3.0] {
        let w = (4.0 * ea.eval(x) + 3.0 * eb.eval(x)) / 7.0;
        assert!((em.eval(x) - w).abs() < 1e-15);
    }
}

#[test]
fn mixture_test_on_synthetic_data() {
    let (alpha, rate) = (0.75, 0.5);
    let law = mixture_law(rate, 1.0, alpha, None).unwrap();
    let grid = default_t0_grid(rate);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let reps = 100;
    let mut good = 0;
    for _ in 0..reps {
        // the atom lives well below the smallest threshold
        let s = mixture_samples(&mut rng, 2000, alpha, rate, 1e-4);
        let r = mixture_test(&s, &law, &grid[1..2]).unwrap()[0];
        assert!(r.atom_ci.contains(r.atom_fraction_hat));
        assert!((0.0..=1.0).contains(&r.ks_stat));
        // the fraction below t0 also holds the exponential mass there
        let expected = 1.0 - alpha + alpha * (1.0 - (-rate * r.t0).exp());
        if r.atom_ci.contains(expected) && r.ks_pvalue > 0.01 {
            good += 1;
        }
    }
    // a 95% interval and a 1% test jointly hold about 94% of the time
    assert!(good >= 88, "{good}");
}

#[test]
fn mixture_without_atom() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rate = 2.0;
    let s = exp_samples(&mut rng, 5000, rate);
    let law = mixture_law(rate, 1.0, 1.0, None).unwrap();
    let reports = mixture_test(&s, &law, &default_t0_grid(rate)).unwrap();
    // only the exponential mass below t0 remains
    for r in &reports {
        assert!((r.atom_fraction_hat - (1.0 - (-rate * r.t0).exp())).abs() < 0.02);
    }
    assert!(reports[0].atom_fraction_hat < 0.03);
}

#[test]
fn mixture_report_is_stable_across_thresholds() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (alpha, rate) = (0.6, 1.0);
    let s = mixture_samples(&mut rng, 4000, alpha, rate, 1e-4);
    let law = mixture_law(rate, 1.0, alpha, None).unwrap();
    let r = mixture_test(&s, &law, &default_t0_grid(rate)).unwrap();
    // subtract the exponential mass below each threshold before comparing
    let atoms: Vec<f64> = r
        .iter()
        .map(|x| x.atom_fraction_hat - alpha * (1.0 - (-rate * x.t0).exp()))
        .collect();
    let spread = atoms.iter().cloned().fold(f64::MIN, f64::max) - atoms.iter().cloned().fold(f64::MAX, f64::min);
    let se = (0.4 * 0.6 / 4000.0f64).sqrt();
    assert!(spread < 3.0 * se, "{atoms:?}");
}

#[test]
fn self_calibrated_variant_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (alpha, rate) = (0.7, 0.3);
    let s = mixture_samples(&mut rng, 5000, alpha, rate, 1e-4);
    let law = mixture_law(rate, 1.0, alpha, None).unwrap();
    let grid = default_t0_grid(rate);
    let fixed = mixture_test(&s, &law, &grid).unwrap();
    let calibrated = mixture_test_self_calibrated(&s, 1.0 - alpha, &grid).unwrap();
    for (f, c) in fixed.iter().zip(&calibrated) {
        assert_eq!(f.atom_fraction_hat, c.atom_fraction_hat);
        assert!((c.rate / rate - 1.0).abs() < 0.05);
        assert!(f.ks_pvalue > 0.01 && c.ks_pvalue > 0.01);
    }
}

#[test]
fn mixture_with_empty_tail_is_reported() {
    let law = mixture_law(1.0, 1.0, 0.5, None).unwrap();
    assert!(mixture_test(&[0.001, 0.002], &law, &[0.5]).is_err());
}

#[test]
fn dispersion_of_constant_counts() {
    let (idx, p) = poisson_dispersion(&[4; 100]).unwrap();
    assert_eq!(idx, 0.0);
    assert!(p < 1e-10);
    assert!(poisson_dispersion(&[0, 0, 0]).is_err());
    assert!(poisson_dispersion(&[3]).is_err());
}

#[test]
fn dispersion_band_frequency_for_poisson_counts() {
    // for 500 Poisson draws (n − 1)·index is close to χ²_{499}, so the
    // frequency of index ∈ [0.9, 1.1] is about 0.88, not 0.95
    let chi = ChiSquared::new(499.0).unwrap();
    let theory = chi.cdf(499.0 * 1.1) - chi.cdf(499.0 * 0.9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pois = Poisson::new(5.0).unwrap();
    let reps = 1000;
    let inside = (0..reps)
        .filter(|_| {
            let c: Vec<u64> = (0..500).map(|_| pois.sample(&mut rng) as u64).collect();
            let (idx, _) = poisson_dispersion(&c).unwrap();
            (0.9..=1.1).contains(&idx)
        })
        .count() as f64
        / reps as f64;
    let se = (theory * (1.0 - theory) / reps as f64).sqrt();
    assert!((inside - theory).abs() < 4.0 * se, "{inside} vs {theory}");
}

#[test]
fn dispersion_detects_overdispersion() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let geo = Geometric::new(0.2).unwrap();
    let c: Vec<u64> = (0..500).map(|_| geo.sample(&mut rng)).collect();
    let (idx, p) = poisson_dispersion(&c).unwrap();
    assert!(idx > 1.3 && p < 0.01, "{idx} {p}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn statistics_ignore_sample_order(mut v in prop::collection::vec(0.001f64..10.0, 2..200), seed in 0u64..1000) {
        let (d, p) = ks_exponential(&v, 0.7).unwrap();
        let counts: Vec<u64> = v.iter().map(|x| (x * 3.0) as u64 + 1).collect();
        let disp = poisson_dispersion(&counts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..v.len()).rev() {
            let j = rng.random_range(0..=i);
            v.swap(i, j);
        }
        let (d2, p2) = ks_exponential(&v, 0.7).unwrap();
        prop_assert_eq!((d, p), (d2, p2));
        let counts2: Vec<u64> = v.iter().map(|x| (x * 3.0) as u64 + 1).collect();
        let disp2 = poisson_dispersion(&counts2).unwrap();
        prop_assert!((disp.0 - disp2.0).abs() <= 1e-12 * disp.0.abs().max(1.0));
    }

    #[test]
    fn wilson_interval_contains_estimate(n in 1u64..10_000, frac in 0.0f64..=1.0, level in 0.5f64..0.999) {
        let k = ((n as f64) * frac).floor() as u64;
        let ci = binomial_ci(k, n, level).unwrap();
        prop_assert!(ci.lo >= 0.0 && ci.hi <= 1.0);
        prop_assert!(ci.contains(k as f64 / n as f64));
    }
}
