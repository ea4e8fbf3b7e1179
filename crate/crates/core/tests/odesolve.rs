use std::f64::consts::PI;

use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;
use virfuse::arith::{Rational, RationalFunction};
use virfuse::bpz::{compile_d, s_symbol, OdeOperator};
use virfuse::odesolve::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d).unwrap()
}

/// `Σ_i p_i ∂^i` with `p_i` given densely in `s`.
fn op(coeffs: &[&[i64]]) -> OdeOperator {
    let s = RationalFunction::var(s_symbol());
    let raw = coeffs
        .iter()
        .map(|c| {
            c.iter().rev().fold(RationalFunction::zero(), |acc, &k| &(&acc * &s) + &RationalFunction::from_int(k))
        })
        .collect();
    OdeOperator::from_raw(s_symbol(), raw).unwrap()
}

fn zero() -> ExpansionPoint {
    ExpansionPoint::Finite(Rational::zero())
}

fn d2(kappa: Rational) -> OdeOperator {
    compile_d(1, &RationalFunction::constant(kappa)).unwrap()
}

fn exact_exponents(ode: &OdeOperator, point: &ExpansionPoint) -> Vec<String> {
    local_exponents(ode, point).unwrap().iter().map(|e| e.exact.as_ref().unwrap().to_string()).collect()
}

#[test]
fn euler_operator_has_double_root_zero() {
    // s²∂² + s∂ = ϑ²
    let e = op(&[&[], &[0, 1], &[0, 0, 1]]);
    assert_eq!(indicial_polynomial(&e, &zero()).unwrap(), vec![q(0, 1), q(0, 1), q(1, 1)]);
}

#[test]
fn bessel_type_exponents() {
    // 2s∂² + δ∂ at 0 has exponents 0 and 1 - δ/2
    let e = op(&[&[], &[5], &[0, 2]]);
    assert_eq!(exact_exponents(&e, &zero()), vec!["0", "-3/2"]);
}

#[test]
fn irregular_point_is_rejected() {
    let e = op(&[&[1], &[0, 0, 1]]);
    assert!(matches!(indicial_polynomial(&e, &zero()), Err(OdeError::Irregular(_))));
    // ∂ - 1 is irregular at ∞
    let e = op(&[&[-1], &[1]]);
    assert!(matches!(local_exponents(&e, &ExpansionPoint::Infinity), Err(OdeError::Irregular(_))));
}

#[test]
fn d2_exponent_pairs_are_frozen() {
    let one = ExpansionPoint::Finite(q(1, 1));
    let cases = [(q(2, 1), ["3/2", "0"], ["0", "-2"]), (q(8, 3), ["1", "0"], ["0", "-1"]), (q(4, 1), ["1/2", "0"], ["0", "0"])];
    for (kappa, at_zero, at_one) in cases {
        let ode = d2(kappa.clone());
        assert_eq!(exact_exponents(&ode, &zero()), at_zero, "kappa = {kappa}");
        assert_eq!(exact_exponents(&ode, &ExpansionPoint::Infinity), at_zero, "kappa = {kappa}");
        if kappa != q(4, 1) {
            assert_eq!(exact_exponents(&ode, &one), at_one, "kappa = {kappa}");
        }
    }
}

#[test]
fn frobenius_series_of_the_free_particle() {
    let e = op(&[&[], &[], &[1]]);
    let one = frobenius_series(&e, &zero(), 0.0, 6).unwrap();
    assert_eq!(one.exact_coefficients.unwrap(), vec![Rational::one(); 1].into_iter().chain(vec![Rational::zero(); 6]).collect::<Vec<_>>());
    let lin = frobenius_series(&e, &zero(), 1.0, 6).unwrap();
    assert_eq!(lin.exact_exponent, Some(q(1, 1)));
    assert!(lin.coefficients[1..].iter().all(|c| *c == 0.0));
    assert_eq!(lin.value(0.25), 0.25);
}

#[test]
fn euler_branches_are_exact_monomials() {
    // s²∂² - 2 has exponents {2, -1}
    let e = op(&[&[-2], &[], &[0, 0, 1]]);
    assert_eq!(exact_exponents(&e, &zero()), vec!["2", "-1"]);
    let sq = frobenius_series(&e, &zero(), 2.0, 8).unwrap();
    assert!(sq.exact_coefficients.as_ref().unwrap()[1..].iter().all(Rational::is_zero));
    assert_eq!(sq.value(0.3), 0.3f64.powi(2));
    let inv = frobenius_series(&e, &zero(), -1.0, 8).unwrap();
    assert!(inv.coefficients[1..].iter().all(|c| *c == 0.0));
}

#[test]
fn resonance_names_the_gap() {
    // s∂² - 1: exponents {1, 0}, and the exponent-0 branch needs a logarithm
    let e = op(&[&[-1], &[], &[0, 1]]);
    let err = frobenius_series(&e, &zero(), 0.0, 4).unwrap_err();
    assert_eq!(err, OdeError::Resonance { exponent: "0".into(), gap: 1 });
    assert!(err.to_string().contains("gap 1"));
    assert!(frobenius_series(&e, &zero(), 1.0, 4).is_ok());
}

#[test]
fn non_exponent_is_rejected() {
    let e = op(&[&[-2], &[], &[0, 0, 1]]);
    assert!(matches!(frobenius_series(&e, &zero(), 0.7, 4), Err(OdeError::NotAnExponent { .. })));
}

#[test]
fn recursion_residual_vanishes() {
    // the truncated branch satisfies the operator up to the truncation order
    let ode = d2(q(8, 3));
    let num = NumericOde::new(&ode).unwrap();
    for lam in [1.0, 0.0] {
        let f = frobenius_series(&ode, &zero(), lam, 60).unwrap();
        for s in [-0.05, -0.2] {
            let d = f.derivatives(s, 3);
            let scale = d.iter().map(|x| x.abs()).sum::<f64>();
            assert!(num.residual(s, &d).abs() < 1e-12 * scale.max(1.0), "lam = {lam}, s = {s}");
        }
    }
    // an irrational exponent goes through the floating recursion
    let ode = d2(Rational::approximate(std::f64::consts::E, 1000).unwrap());
    let exps = local_exponents(&ode, &zero()).unwrap();
    assert!(exps[0].exact.is_some());
}

#[test]
fn free_particle_integration() {
    let e = NumericOde::new(&op(&[&[], &[], &[1]])).unwrap();
    let y = integrate(&e, 0.0, &[0.0, 1.0], 1.0, 1e-12).unwrap();
    assert!((y[0] - 1.0).abs() < 1e-10 && (y[1] - 1.0).abs() < 1e-10);
}

#[test]
fn euler_closed_form_is_transported() {
    // y = s² + 1/s solves s²y'' - 2y = 0
    let e = NumericOde::new(&op(&[&[-2], &[], &[0, 0, 1]])).unwrap();
    let exact = |s: f64| [s * s + 1.0 / s, 2.0 * s - 1.0 / (s * s)];
    let y = integrate(&e, 1.0, &exact(1.0), 3.0, 1e-12).unwrap();
    for (a, b) in y.iter().zip(exact(3.0)) {
        assert!(((a - b) / b).abs() < 1e-8);
    }
    assert!(matches!(integrate(&e, -1.0, &exact(-1.0), 1.0, 1e-12), Err(OdeError::SingularInterval { .. })));
}

#[test]
fn d2_wronskian_is_consistent() {
    // W' = -(p1/p2) W, transported independently of the solution pair
    let kappa = 8.0 / 3.0;
    let ode = d2(q(8, 3));
    let num = NumericOde::new(&ode).unwrap();
    let (s0, s1) = (s_of_theta(PI / 4.0), s_of_theta(3.0 * PI / 4.0));
    let a = integrate(&num, s0, &[1.0, 0.0], s1, 1e-12).unwrap();
    let b = integrate(&num, s0, &[0.0, 1.0], s1, 1e-12).unwrap();
    let w = a[0] * b[1] - a[1] * b[0];
    let ratio = |s: f64| (kappa * s - 3.0 * kappa + 8.0 * s + 8.0) / (2.0 * kappa * s * s - 2.0 * kappa * s);
    let lw = dopri5(|s, _, d| d[0] = -ratio(s), s0, &[0.0], s1, Tolerance::new(1e-13)).unwrap()[0];
    assert!((w - lw.exp()).abs() < 1e-7 * lw.exp());
}

#[test]
fn constants_stay_constant() {
    for n in 1..=4u32 {
        let num = NumericOde::new(&compile_d(n, &RationalFunction::constant(q(2, 1))).unwrap()).unwrap();
        let mut data = vec![0.0; n as usize + 1];
        data[0] = 1.0;
        let y = integrate(&num, -3.0, &data, -0.2, 1e-12).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1..].iter().all(|d| d.abs() < 1e-10));
    }
}

#[test]
fn frobenius_agrees_with_integration() {
    let ode = compile_d(2, &RationalFunction::constant(q(2, 1))).unwrap();
    let num = NumericOde::new(&ode).unwrap();
    for point in [zero(), ExpansionPoint::Infinity] {
        let (s0, s1) = if point == zero() { (-0.1, -0.4) } else { (-10.0, -2.5) };
        for e in local_exponents(&ode, &point).unwrap() {
            let f = frobenius_series(&ode, &point, e.value, 96).unwrap();
            let y = integrate(&num, s0, &f.derivatives(s0, 3), s1, 1e-14).unwrap();
            let expected = f.value(s1);
            assert!((y[0] - expected).abs() < 1e-8 * expected.abs().max(1e-300), "{point} {} {} {}", e.value, y[0], expected);
        }
    }
}

#[test]
fn step_underflow_advises_frobenius() {
    let err = dopri5(|_, y, d| d[0] = y[0] * y[0], 0.0, &[1.0], 2.0, Tolerance::new(1e-10)).unwrap_err();
    assert!(matches!(err, OdeError::StepUnderflow { .. }));
    assert!(err.to_string().contains("Frobenius"));
}

/// Probability that `e^{iθ}` lies left of chordal SLE_κ in ℍ, in closed form.
fn left_passage(kappa: f64, theta: f64) -> f64 {
    let (a, b, c) = (0.5, 1.5 - 4.0 / kappa, 1.5);
    let z = theta.cos().powi(2);
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 0..200_000 {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    let norm = (ln_gamma(4.0 / kappa) - ln_gamma(4.0 / kappa - 0.5)).exp() / PI.sqrt();
    0.5 - norm * theta.cos() * sum
}

#[test]
fn single_strand_matches_closed_form() {
    let grid = chebyshev_theta_grid(DEFAULT_GRID);
    for kappa in [q(2, 1), q(8, 3), q(3, 1), q(4, 1), q(1, 2)] {
        let sol = solve_watermelon(1, &kappa, &grid, None).unwrap();
        let curve = sol.curve.as_ref().unwrap();
        curve.check_invariants().unwrap();
        assert!(curve.reflection_defect().unwrap() < 1e-10);
        assert!((curve.values[31][1] - 0.5).abs() < 1e-6);
        for theta in [0.2, PI / 4.0, PI / 2.0, 2.0, 3.0 * PI / 4.0] {
            let f = sol.evaluate(theta).unwrap().unwrap();
            assert!((f[0] - left_passage(kappa.to_f64(), theta)).abs() < 1e-9, "kappa = {kappa}, theta = {theta}");
        }
    }
}

#[test]
fn single_strand_values_are_frozen() {
    let grid = chebyshev_theta_grid(DEFAULT_GRID);
    let frozen = [(q(2, 1), FROZEN_K2), (q(8, 3), FROZEN_K83), (q(3, 1), FROZEN_K3)];
    for (kappa, expected) in frozen {
        let sol = solve_watermelon(1, &kappa, &grid, None).unwrap();
        let f = sol.evaluate(PI / 4.0).unwrap().unwrap();
        assert!((f[1] - expected).abs() < 1e-10, "kappa = {kappa}: {}", f[1]);
    }
}

const FROZEN_K2: f64 = 0.909154943091892;
// (2 + √2)/4: at κ = 8/3, f_1 = (1 + cos θ)/2
const FROZEN_K83: f64 = 0.853553390593274;
const FROZEN_K3: f64 = 0.826486621033032;

#[test]
fn sector_orientation() {
    let sol = solve_watermelon(2, &q(2, 1), &chebyshev_theta_grid(DEFAULT_GRID), None).unwrap();
    assert!(sol.curve.is_none() && sol.fit.is_none());
    let b = &sol.basis;
    let limit = |c: &[f64], l: &[f64]| c.iter().zip(l).map(|(a, b)| a * b).sum::<f64>();
    assert!(limit(&b.step, &b.limit_pi).abs() < 1e-12);
    assert!((limit(&b.step, &b.limit_zero) - 1.0).abs() < 1e-12);
    for e in &b.interior {
        assert!(limit(e, &b.limit_pi).abs() < 1e-12 && limit(e, &b.limit_zero).abs() < 1e-12);
    }
}

/// A symmetric kernel element pattern evaluated on `thetas`.
fn synthetic_points(n: u32, kappa: &Rational, weights: &[f64], thetas: &[f64]) -> Vec<McPoint> {
    let b = KernelBasis::new(n, kappa).unwrap();
    let n = n as usize;
    let dim = b.interior.len();
    let value = |k: usize, theta: f64| {
        let phi = b.phi(theta).unwrap();
        let dot = |c: &[f64]| c.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
        let h = dot(&b.step);
        let mut v = if k == 0 { 1.0 - h } else if k == n { h } else { 0.0 };
        for j in 0..dim {
            let w = if k < n { weights[k * dim + j] } else { -(0..n).map(|kk| weights[kk * dim + j]).sum::<f64>() };
            v += w * dot(&b.interior[j]);
        }
        v
    };
    thetas
        .iter()
        .map(|&t| McPoint {
            theta: t,
            f_hat: (0..=n).map(|k| 0.5 * (value(k, t) + value(n - k, PI - t))).collect(),
        })
        .collect()
}

#[test]
fn kernel_fit_recovers_symmetric_data() {
    let kappa = q(2, 1);
    let thetas = [0.5, 1.0, PI / 2.0, 2.2, 2.8];
    let points = synthetic_points(2, &kappa, &[0.3, -0.2], &thetas);
    let sol = solve_watermelon(2, &kappa, &chebyshev_theta_grid(DEFAULT_GRID), Some(&points)).unwrap();
    let fit = sol.fit.as_ref().unwrap();
    assert!(fit.max_residual < 1e-9, "{fit:?}");
    assert_eq!(fit.rank, 2);
    let curve = sol.curve.as_ref().unwrap();
    assert!(curve.reflection_defect().unwrap() < 1e-9);
    let sums: f64 = curve.values.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    assert!(sums < 1e-12);
    for p in &points {
        let f = sol.evaluate(p.theta).unwrap().unwrap();
        for (a, b) in f.iter().zip(&p.f_hat) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn underdetermined_fit_is_ill_conditioned() {
    let kappa = q(2, 1);
    let points = synthetic_points(3, &kappa, &[0.1, 0.0, 0.0, 0.1, -0.1, 0.0], &[PI / 2.0]);
    let err = solve_watermelon(3, &kappa, &chebyshev_theta_grid(DEFAULT_GRID), Some(&points)).unwrap_err();
    assert!(matches!(err, OdeError::IllConditioned { .. }), "{err}");
}

#[test]
fn invalid_inputs() {
    let grid = chebyshev_theta_grid(5);
    assert!(matches!(solve_watermelon(0, &q(2, 1), &grid, None), Err(OdeError::InvalidInput(_))));
    assert!(matches!(solve_watermelon(1, &q(5, 1), &grid, None), Err(OdeError::InvalidInput(_))));
    assert!(matches!(solve_watermelon(1, &q(2, 1), &[0.0], None), Err(OdeError::InvalidInput(_))));
}

#[test]
fn csv_output_has_header_and_precision() {
    let grid = chebyshev_theta_grid(DEFAULT_GRID);
    let sol = solve_watermelon(1, &q(3, 1), &grid, None).unwrap();
    let curve = sol.curve.unwrap();
    let csv = curve_csv(&curve.theta_grid, &curve.values, "f");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,f0,f1"));
    assert_eq!(csv.lines().count(), 64);
    let mid: Vec<&str> = csv.lines().nth(32).unwrap().split(',').collect();
    assert_eq!(mid[0], "1.57079632679");
    assert_eq!(mid[1], "0.500000000000");
    let svg = curves_svg(&curve.theta_grid, &curve.values, "n = 1");
    assert_eq!(svg.matches("<polyline").count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn single_strand_is_a_monotone_probability(p in 1i64..=16, theta in 0.05f64..3.09) {
        let kappa = q(p, 4);
        let sol = solve_watermelon(1, &kappa, &[theta, PI - theta], None).unwrap();
        let curve = sol.curve.as_ref().unwrap();
        let (a, b) = (&curve.values[0], &curve.values[1]);
        prop_assert!((a[0] + a[1] - 1.0).abs() < 1e-12);
        prop_assert!(a[0] >= -1e-6 && a[0] <= 1.0 + 1e-6);
        prop_assert!((a[0] - b[1]).abs() < 1e-6);
        let later = sol.evaluate((theta + 0.02).min(3.13)).unwrap().unwrap();
        prop_assert!(later[0] >= a[0] - 1e-12);
    }
}
