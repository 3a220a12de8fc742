use spikesim::analytic::*;
use spikesim::model::*;
use spikesim::simulate::*;
use spikesim::stats::ks_two_sample;
use spikesim::Error;

fn bb(eps: f64) -> DiffusionModel {
    DiffusionModel::bb_linear(1.0, 1.0, eps).unwrap()
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn start_on_a_barrier_returns_immediately() {
    let cfg = SimConfig::default();
    let m = bb(0.01);
    let lo = simulate_until_hit(&m, 0.01, 0.01, 1.0, &cfg, 0).unwrap();
    assert_eq!((lo.which, lo.time, lo.max_level), (Side::Low, 0.0, 0.01));
    let hi = simulate_until_hit(&m, 1.0, 0.01, 1.0, &cfg, 0).unwrap();
    assert_eq!((hi.which, hi.time), (Side::High, 0.0));
    assert!(simulate_until_hit(&m, 2.0, 0.01, 1.0, &cfg, 0).is_err());
}

#[test]
fn zero_noise_follows_the_drift_flow() {
    // dx/dt = (ε − x)/2 from 0.5 reaches 0.05 at t = 2 ln(0.49/0.04)
    let expected = 2.0 * (0.49f64 / 0.04).ln();
    for scheme in [Scheme::EulerTransformed, Scheme::EulerNative] {
        let cfg = SimConfig {
            scheme,
            noise_scale: 0.0,
            dt_max: 1e-3,
            ..SimConfig::default()
        };
        for seed in 0..5 {
            let out = simulate_until_hit(&bb(0.01), 0.5, 0.05, 1.0, &cfg, seed).unwrap();
            assert_eq!(out.which, Side::Low);
            assert!((out.time / expected - 1.0).abs() < 1e-2, "{scheme:?}: {}", out.time);
            assert_eq!(out.max_level, 0.5);
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = SimConfig::default();
    let engine = Engine::new(&bb(0.05), &cfg).unwrap();
    let run = |workers| run_paths(200, 42, workers, |_, rng| engine.until_hit(0.1, 0.05, 1.0, rng)).unwrap();
    let (a, b, c) = (run(1), run(2), run(3));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn hitting_frequency_matches_quadrature() {
    let eps = 0.01;
    let m = bb(eps);
    let cfg = SimConfig::default();
    let engine = Engine::new(&m, &cfg).unwrap();
    let n = 100_000;
    let out = run_paths(n, 1, 0, |_, rng| engine.until_hit(2.0 * eps, eps, 1.0, rng)).unwrap();
    let hits = out.iter().filter(|o| o.which == Side::High).count() as f64;
    let p = spike_prob(&m, &CycleBoundaries::example1(), 1.0).unwrap();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits / n as f64 - p).abs() < 3.0 * se, "{} vs {p}", hits / n as f64);
}

#[test]
fn native_scheme_agrees_with_transformed() {
    let eps = 0.05;
    let m = bb(eps);
    let p = hitting_prob(&m, 0.1, eps, 0.5).unwrap();
    let n = 20_000;
    for scheme in [Scheme::EulerNative, Scheme::EulerTransformed] {
        let cfg = SimConfig {
            scheme,
            ..SimConfig::default()
        };
        let engine = Engine::new(&m, &cfg).unwrap();
        let out = run_paths(n, 2, 0, |_, rng| engine.until_hit(0.1, eps, 0.5, rng)).unwrap();
        let f = out.iter().filter(|o| o.which == Side::High).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((f - p).abs() < 3.0 * se, "{scheme:?}: {f} vs {p}");
    }
}

#[test]
fn exit_time_mean_and_second_moment_match_green_kernel() {
    let eps = 0.05;
    let m = bb(eps);
    let cfg = SimConfig::default();
    let engine = Engine::new(&m, &cfg).unwrap();
    let n = 100_000;
    let t: Vec<f64> = run_paths(n, 3, 0, |_, rng| Ok(engine.until_hit(eps, 0.0, 2.0 * eps, rng)?.time)).unwrap();
    let (mean, se) = mean_se(&t);
    let m1 = expected_exit_time(&m, eps, 0.0, 2.0 * eps, KernelKind::UpperAbsorbing).unwrap();
    assert!((mean - m1).abs() < 3.0 * se, "{mean} ± {se} vs {m1}");
    let sq: Vec<f64> = t.iter().map(|x| x * x).collect();
    let (mean2, se2) = mean_se(&sq);
    let m2 = exit_time_second_moment(&m, eps, 0.0, 2.0 * eps, KernelKind::UpperAbsorbing).unwrap();
    assert!((mean2 - m2).abs() < 3.0 * se2, "{mean2} ± {se2} vs {m2}");
}

#[test]
fn halving_the_step_moves_the_estimate_by_less_than_one_se() {
    let eps = 0.01;
    let m = bb(eps);
    let n = 100_000;
    let freq = |dt_max: f64| {
        let cfg = SimConfig {
            dt_max,
            ..SimConfig::default()
        };
        let engine = Engine::new(&m, &cfg).unwrap();
        let out = run_paths(n, 4, 0, |_, rng| engine.until_hit(2.0 * eps, eps, 1.0, rng)).unwrap();
        out.iter().filter(|o| o.which == Side::High).count() as f64 / n as f64
    };
    let (f1, f2) = (freq(1e-2), freq(5e-3));
    let se = (f1 * (1.0 - f1) / n as f64).sqrt();
    assert!((f1 - f2).abs() < se, "{f1} vs {f2}, se {se}");
}

#[test]
fn conditioned_cycles_never_reach_the_level() {
    let cfg = SimConfig::default();
    let s = CycleSampler::new(&bb(0.1), &CycleBoundaries::example1(), 0.4, &cfg).unwrap();
    let recs = run_paths(5000, 5, 0, |_, rng| s.cycle(true, rng)).unwrap();
    for r in &recs {
        assert!(r.conditioned && !r.spike && r.spike_time.is_none());
        assert!(r.max_level < 0.4);
        assert!(r.tau >= 0.0 && r.sigma >= 0.0);
    }
}

#[test]
fn unconditioned_spike_frequency_matches_quadrature() {
    let eps = 0.1;
    let m = bb(eps);
    let cb = CycleBoundaries::example1();
    let cfg = SimConfig::default();
    let s = CycleSampler::new(&m, &cb, 1.0, &cfg).unwrap();
    let n = 100_000;
    let recs = run_paths(n, 6, 0, |_, rng| s.cycle(false, rng)).unwrap();
    let spikes = recs.iter().filter(|r| r.spike).count() as f64;
    for r in &recs {
        assert_eq!(r.spike, r.max_level >= 1.0);
        if let Some(t) = r.spike_time {
            assert!(t >= r.tau && t <= r.tau + r.sigma);
        }
    }
    let p = spike_prob(&m, &cb, 1.0).unwrap();
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((spikes / n as f64 - p).abs() < 3.0 * se, "{} vs {p}", spikes / n as f64);
}

#[test]
fn conditioned_cycle_length_matches_green_kernels() {
    let eps = 0.1;
    let m = bb(eps);
    let cb = CycleBoundaries::example1();
    let cfg = SimConfig::default();
    let s = CycleSampler::new(&m, &cb, 1.0, &cfg).unwrap();
    let recs = run_paths(100_000, 7, 0, |_, rng| s.cycle(true, rng)).unwrap();
    let lengths: Vec<f64> = recs.iter().map(|r| r.length()).collect();
    let (mean, se) = mean_se(&lengths);
    let expected = cycle_means(&m, &cb, 1.0).unwrap().mean();
    assert!((mean - expected).abs() < 3.0 * se, "{mean} ± {se} vs {expected}");
}

#[test]
fn rejection_and_h_transform_samplers_agree() {
    let eps = 0.1;
    let m = bb(eps);
    let cb = CycleBoundaries::example1();
    let cfg = SimConfig::default();
    let s = CycleSampler::new(&m, &cb, 0.5, &cfg).unwrap();
    let a = run_paths(4000, 8, 0, |_, rng| s.downcross_rejection(rng)).unwrap();
    let b = run_paths(4000, 9, 0, |_, rng| s.downcross_h(rng)).unwrap();
    let (_, p) = ks_two_sample(&a, &b).unwrap();
    assert!(p > 0.01, "KS p-value {p}");
}

#[test]
fn rejection_sampler_without_conditioning_pressure_is_the_plain_down_crossing() {
    // with z far away the conditioning event is almost sure
    let eps = 0.1;
    let m = bb(eps);
    let cb = CycleBoundaries::example1();
    let cfg = SimConfig::default();
    let s = CycleSampler::new(&m, &cb, 50.0, &cfg).unwrap();
    let e = Engine::new(&m, &cfg).unwrap();
    let a = run_paths(2000, 10, 0, |_, rng| s.downcross_rejection(rng)).unwrap();
    let b = run_paths(2000, 10, 0, |_, rng| e.until_hit(0.2, 0.1, 50.0, rng)).unwrap();
    assert!(b.iter().all(|o| o.which == Side::Low));
    let b: Vec<f64> = b.iter().map(|o| o.time).collect();
    assert_eq!(a, b);
}

#[test]
fn budgets_are_enforced() {
    let m = bb(0.1);
    let cb = CycleBoundaries::example1();
    let tight = SimConfig {
        step_budget: 10,
        ..SimConfig::default()
    };
    assert!(matches!(
        simulate_until_hit(&m, 0.5, 0.1, 1.0, &tight, 0),
        Err(Error::StepBudget { .. })
    ));
    let one_trial = SimConfig {
        rejection_budget: 1,
        ..SimConfig::default()
    };
    let errors = (0..50)
        .filter(|&seed| {
            matches!(
                sample_conditioned_downcross_rejection(&m, &cb, 0.2001, &one_trial, seed),
                Err(Error::RejectionBudget { .. })
            )
        })
        .count();
    assert!(errors > 0);
}

#[test]
fn low_level_spikes_every_cycle() {
    let cfg = SimConfig::default();
    let train = run_spike_process(
        &bb(0.1),
        &CycleBoundaries::example1(),
        0.15,
        200.0,
        StraddleConvention::CrossingTime,
        &cfg,
        0,
    )
    .unwrap();
    // the last cycle may start before the horizon and cross 0.15 after it
    assert!(train.count() as u64 == train.n_cycles || train.count() as u64 + 1 == train.n_cycles);
    assert!(train.times.windows(2).all(|w| w[0] < w[1]));
    assert!(train.times.iter().all(|&t| (0.0..=200.0).contains(&t)));
}

#[test]
fn clock_rescaling_is_exact_per_seed() {
    let cfg = SimConfig::default();
    let cb = CycleBoundaries::example1();
    let slow = run_spike_process(&bb(0.1), &cb, 0.5, 900.0, StraddleConvention::CrossingTime, &cfg, 11).unwrap();
    let fast_model = DiffusionModel::bb_linear(1.0, 3.0, 0.1).unwrap();
    let fast = run_spike_process(&fast_model, &cb, 0.5, 100.0, StraddleConvention::CrossingTime, &cfg, 11).unwrap();
    assert_eq!(slow.n_cycles, fast.n_cycles);
    assert_eq!(slow.count(), fast.count());
    for (a, b) in slow.times.iter().zip(&fast.times) {
        assert!((a / 9.0 - b).abs() <= 1e-9 * b.max(1.0));
    }
}

#[test]
fn straddle_conventions_agree_within_noise() {
    let cfg = SimConfig::default();
    let cb = CycleBoundaries::example1();
    let s = CycleSampler::new(&bb(0.1), &cb, 0.5, &cfg).unwrap();
    let runs = 400;
    let count = |conv| -> Vec<f64> { run_paths(runs, 12, 0, |_, rng| Ok(s.spike_train(50.0, conv, rng)?.count() as f64)).unwrap() };
    let a = count(StraddleConvention::CrossingTime);
    let b = count(StraddleConvention::CompletedCycles);
    for (x, y) in a.iter().zip(&b) {
        assert!(x >= y && x - y <= 1.0);
    }
    let (ma, sa) = mean_se(&a);
    let (mb, _) = mean_se(&b);
    assert!((ma - mb).abs() < 3.0 * sa, "{ma} vs {mb}");
}

#[test]
fn hitting_time_from_the_level_is_zero() {
    let cfg = SimConfig::default();
    assert_eq!(sample_hitting_time_from_x(&bb(0.1), 1.0, 1.0, 0.1, &cfg, 0).unwrap(), 0.0);
    let t = sample_hitting_time_from_x(&bb(0.1), 0.5, 1.0, 0.1, &cfg, 0).unwrap();
    assert!(t > 0.0);
}
