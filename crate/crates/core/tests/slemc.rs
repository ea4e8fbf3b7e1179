use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use virfuse::odesolve::solve_watermelon;
use virfuse::slemc::*;
use virfuse::Rational;

fn estimate(n: u32, kappa: f64, theta: f64, samples: u64, seed: u64) -> McEstimate {
    watermelon_mc(&McConfig::new(n, kappa, theta, samples, seed)).unwrap()
}

/// Fraction of left passages of one strand among decided samples, with its
/// standard error.
fn left_fraction(kappa: f64, rho: f64, theta: f64, samples: usize, seed: u64) -> (f64, f64) {
    let config = McConfig::new(1, kappa, theta, 1, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes: Vec<f64> =
        (0..samples).filter_map(|_| sample_strand_angle(kappa, rho, theta, &config, &mut rng)).collect();
    let n = outcomes.len() as f64;
    assert!(n >= 0.99 * samples as f64, "too many undecided samples");
    let p = outcomes.iter().filter(|&&t| t == PI).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[test]
fn bessel_dimension_examples() {
    assert_eq!(bessel_dimension(2.0, 2.0), 5.0);
    assert_eq!(bessel_dimension(4.0, 0.0), 2.0);
    // the leftmost of n strands carries ρ = 2(n-1); a single strand has none
    assert_eq!(bessel_dimension(8.0 / 3.0, 2.0 * (1 - 1) as f64), 2.5);
}

#[test]
fn single_strand_is_symmetric_at_the_midpoint() {
    let (p, se) = left_fraction(2.0, 0.0, PI / 2.0, 20_000, 1);
    assert!((p - 0.5).abs() <= 3.0 * se, "{p} ± {se}");
}

#[test]
fn left_passage_grows_with_the_angle() {
    let points: Vec<(f64, f64)> = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]
        .iter()
        .map(|&t| left_fraction(8.0 / 3.0, 0.0, t, 10_000, 2))
        .collect();
    for w in points.windows(2) {
        assert!(w[1].0 - w[0].0 > 3.0 * combined(w[0].1, w[1].1), "{points:?}");
    }
}

#[test]
fn force_point_repels_the_strand() {
    // a force point on the right pushes the strand to the left, so fewer
    // points are passed on their right
    let (free, se0) = left_fraction(2.0, 0.0, PI / 2.0, 10_000, 3);
    let (forced, se8) = left_fraction(2.0, 8.0, PI / 2.0, 10_000, 3);
    assert!(free - forced > 3.0 * combined(se0, se8), "{free} vs {forced}");
}

#[test]
fn estimates_are_normalized() {
    let e = estimate(3, 2.0, 1.2, 3_000, 4);
    assert_eq!(e.counts.iter().sum::<u64>(), e.samples_used);
    assert_eq!(e.samples_used, 3_000);
    assert!((e.f_hat.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    for (f, se) in e.f_hat.iter().zip(&e.std_err) {
        assert_eq!(*se, (f * (1.0 - f) / 3_000.0).sqrt());
    }
}

#[test]
fn one_strand_halves_at_the_midpoint() {
    let e = estimate(1, 3.0, PI / 2.0, 20_000, 5);
    assert!((e.f_hat[1] - 0.5).abs() <= 3.0 * e.std_err[1]);
}

#[test]
fn two_strands_are_balanced_at_the_midpoint() {
    let e = estimate(2, 2.0, PI / 2.0, 20_000, 6);
    assert!((e.f_hat[0] - e.f_hat[2]).abs() <= 3.0 * combined(e.std_err[0], e.std_err[2]), "{e:?}");
}

#[test]
fn agrees_with_the_ode_for_one_strand() {
    let theta = PI / 4.0;
    let e = estimate(1, 8.0 / 3.0, theta, 20_000, 7);
    let sol = solve_watermelon(1, &Rational::new(8, 3).unwrap(), &[theta], None).unwrap();
    let f1 = sol.curve.unwrap().values[0][1];
    assert!((e.f_hat[1] - f1).abs() <= 3.0 * e.std_err[1] + 0.01, "{} vs {f1}", e.f_hat[1]);
}

#[test]
fn reflection_symmetry_suite() {
    for (n, theta) in [(1, PI / 3.0), (2, PI / 3.0), (2, 0.9)] {
        let a = estimate(n, 2.0, theta, 10_000, 8);
        let b = estimate(n, 2.0, PI - theta, 10_000, 9);
        for k in 0..=n as usize {
            let j = n as usize - k;
            let tol = 3.0 * combined(a.std_err[k], b.std_err[j]);
            assert!((a.f_hat[k] - b.f_hat[j]).abs() <= tol.max(1e-12), "n = {n}, k = {k}: {a:?} {b:?}");
        }
    }
}

#[test]
fn halving_the_step_is_within_noise() {
    let base = McConfig::new(1, 2.0, PI / 3.0, 20_000, 10);
    let fine = McConfig { dt: base.dt / 2.0, ..base.clone() };
    let (a, b) = (watermelon_mc(&base).unwrap(), watermelon_mc(&fine).unwrap());
    assert!((a.f_hat[1] - b.f_hat[1]).abs() <= 2.0 * combined(a.std_err[1], b.std_err[1]));
}

#[test]
fn worker_count_does_not_change_the_result() {
    let config = McConfig::new(2, 2.0, 1.1, 1_500, 11);
    let one = watermelon_mc_with_threads(&config, 1).unwrap().to_json();
    let three = watermelon_mc_with_threads(&config, 3).unwrap().to_json();
    assert_eq!(one, three);
    assert_eq!(one, watermelon_mc(&config).unwrap().to_json());
}

#[test]
fn json_round_trips() {
    let e = estimate(2, 8.0 / 3.0, 0.7, 500, 12);
    let json = e.to_json();
    let back: McEstimate = serde_json::from_str(&json).unwrap();
    assert_eq!(back, e);
    assert_eq!(back.to_json(), json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["config", "fHat", "stdErr", "samplesUsed", "flaggedUndecided"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["config"]["rngSeed"], 12);
}

#[test]
fn batch_csv_layout() {
    let config = McConfig::new(1, 2.0, 1.0, 200, 13);
    let batch = watermelon_mc_batch(&config, &[1.0, 2.0]).unwrap();
    let csv = batch_csv(&batch);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta,f0,f1,stderr0,stderr1,samples,undecided");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("2,"));
}

#[test]
fn invalid_configurations_are_rejected() {
    for c in [McConfig::new(1, 5.0, 1.0, 10, 0), McConfig::new(1, 2.0, 0.0, 10, 0), McConfig::new(1, 2.0, 1.0, 0, 0)] {
        assert!(matches!(watermelon_mc(&c), Err(McError::InvalidConfig(_))));
    }
}

#[test]
fn partition_function_examples() {
    assert_eq!(partition_function_h(2.0, &[0.3]).unwrap(), 1.0);
    assert!((partition_function_h(2.0, &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!((partition_function_h(4.0, &[0.0, 4.0]).unwrap() - 2.0).abs() < 1e-14);
    assert_eq!(partition_function_h(2.0, &[0.0, 0.0]), Err(McError::Seeds(0, 1)));
    assert_eq!(partition_function_h(2.0, &[0.0, 2.0, 1.0]), Err(McError::Seeds(1, 2)));
}

proptest! {
    #[test]
    fn partition_function_scales(
        kappa in 0.5f64..4.0,
        gaps in proptest::collection::vec(0.1f64..2.0, 1..5),
        start in -3.0f64..3.0,
        lambda in 0.2f64..5.0,
    ) {
        let xs: Vec<f64> = gaps.iter().scan(start, |x, g| { *x += g; Some(*x) }).collect();
        let n = xs.len() as f64;
        let scaled: Vec<f64> = xs.iter().map(|x| lambda * x).collect();
        let z = partition_function_h(kappa, &xs).unwrap();
        let zs = partition_function_h(kappa, &scaled).unwrap();
        prop_assert!((zs / z - lambda.powf(n * (n - 1.0) / kappa)).abs() < 1e-9 * zs / z);
    }

    #[test]
    fn strand_angles_increase(kappa in 0.5f64..4.0, rho in 0.0f64..6.0, theta in 0.1f64..3.0, seed in 0u64..1000) {
        let config = McConfig::new(1, kappa, theta, 1, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = sample_strand_angle(kappa, rho, theta, &config, &mut rng).unwrap();
        prop_assert!(t >= theta && t <= PI);
    }
}
