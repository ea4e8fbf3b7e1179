//! The end-to-end acceptance suite: ten criteria, each reported as one
//! pass/fail line with its runtime.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use virfuse::arith::{Monomial, MultiPoly};
use virfuse::bpz::{
    apply_to_powerproduct, build_bpz_system, compile_delta0, fuchsian_check, kappa, leading_ratio, restrict_to_s,
    z0_build, OdeOperator, Spectator,
};
use virfuse::fusion::{default_kmax, fuse, Sign};
use virfuse::odesolve::{chebyshev_theta_grid, solve_watermelon, McPoint, DEFAULT_GRID};
use virfuse::slemc::{watermelon_mc, watermelon_mc_with_threads, McConfig, McEstimate};
use virfuse::virasoro::{bsa_vector, central_charge, is_singular, kac_weight, singular_vector, tau, UEAElement};
use virfuse::{KacLabel, Rational, RationalFunction, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Exact-algebra criteria only.
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({:.1} s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub exact: bool,
    budget: Duration,
    check: fn(&Options) -> Result<String, String>,
}

/// Settings shared by the Monte-Carlo criteria.
#[derive(Debug, Clone)]
pub struct Options {
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
    pub samples: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { threads: None, samples: 100_000 }
    }
}

pub fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "singular vectors", exact: true, budget: secs(60), check: singular_vectors },
        Criterion { id: 2, name: "commuting-realization identity", exact: true, budget: secs(1), check: ell_identity },
        Criterion { id: 3, name: "fusion worked cases", exact: true, budget: secs(30), check: fusion_worked_cases },
        Criterion { id: 4, name: "fusion generality", exact: true, budget: secs(600), check: fusion_generality },
        Criterion { id: 5, name: "compiled ODE structure", exact: true, budget: secs(300), check: ode_structure },
        Criterion { id: 6, name: "product solution null check", exact: true, budget: secs(120), check: z0_null },
        Criterion { id: 7, name: "one-strand ODE vs Monte-Carlo", exact: false, budget: secs(1800), check: cross_one },
        Criterion { id: 8, name: "two-strand kernel fit", exact: false, budget: secs(2400), check: cross_two },
        Criterion { id: 9, name: "Monte-Carlo consistency", exact: false, budget: secs(900), check: mc_consistency },
        Criterion { id: 10, name: "exact arithmetic properties", exact: true, budget: secs(60), check: arith_suite },
    ]
}

pub fn run_criterion(c: &Criterion, options: &Options) -> CriterionReport {
    let start = Instant::now();
    let outcome = c.check(options);
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if passed && elapsed > c.budget {
        passed = false;
        detail = format!("{detail}; exceeded the {} s budget", c.budget.as_secs());
    }
    CriterionReport { id: c.id, name: c.name, passed, detail, seconds: elapsed.as_secs_f64() }
}

/// Runs the criteria of `level` in order, handing each report to `sink` as
/// soon as it is available.
pub fn run(level: Level, options: &Options, mut sink: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    criteria()
        .iter()
        .filter(|c| level == Level::Full || c.exact)
        .map(|c| {
            let r = run_criterion(c, options);
            sink(&r);
            r
        })
        .collect()
}

impl Criterion {
    fn check(&self, options: &Options) -> Result<String, String> {
        (self.check)(options)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn label(r: u32, s: u32) -> KacLabel {
    KacLabel::new(r, s).expect("positive label")
}

fn word(w: &[u32]) -> UEAElement {
    UEAElement::word(w).expect("positive modes")
}

fn rf(n: i64, d: i64) -> RationalFunction {
    RationalFunction::constant(Rational::new(n, d).expect("nonzero denominator"))
}

/// `Σ coeffs[k] τ^k`.
fn t_poly(coeffs: &[i64]) -> RationalFunction {
    let mut acc = RationalFunction::zero();
    let mut pow = RationalFunction::one();
    for &c in coeffs {
        acc = &acc + &pow.scale(&Rational::from(c));
        pow = &pow * &tau();
    }
    acc
}

fn singular_vectors(_: &Options) -> Result<String, String> {
    let t = tau();
    let c = central_charge(&t).map_err(err)?;
    let mut count = 0;
    for r in 1..=12u32 {
        for s in 1..=12 / r {
            let l = label(r, s);
            let v = singular_vector(l).map_err(err)?;
            let h = kac_weight(l, &t).map_err(err)?;
            ensure(is_singular(&v, &c, &h), || format!("Δ{l} is not annihilated by L_1 and L_2"))?;
            count += 1;
        }
    }
    let reference = [
        (label(1, 1), word(&[1])),
        (label(2, 1), &word(&[1, 1]) - &word(&[2]).scale(&t)),
        (
            label(3, 1),
            &(&word(&[1, 1, 1]) - &(&word(&[1, 2]) + &word(&[2, 1])).scale(&t.scale(&Rational::from(2))))
                + &word(&[3]).scale(&t_poly(&[0, 0, 4])),
        ),
    ];
    for (l, want) in reference {
        ensure(singular_vector(l).map_err(err)? == want, || format!("Δ{l} differs from its reference form"))?;
    }
    for r in 1..=6 {
        ensure(bsa_vector(r).map_err(err)? == singular_vector(label(r, 1)).map_err(err)?, || {
            format!("closed form differs from the solver for r = {r}")
        })?;
    }
    Ok(format!("{count} labels annihilated; reference forms and closed forms agree"))
}

fn ell_identity(_: &Options) -> Result<String, String> {
    let t = tau();
    let d = &(&word(&[1, 1, 1]) - &word(&[1, 2]).scale(&t.scale(&Rational::from(4))))
        + &word(&[3]).scale(&t_poly(&[0, 2, 4]));
    ensure(d == singular_vector(label(3, 1)).map_err(err)?, || "identity fails".into())?;
    Ok("normal-ordered cubic equals Δ(3,1)".into())
}

fn fusion_worked_cases(_: &Options) -> Result<String, String> {
    let a = fuse(label(2, 1), Sign::Plus, default_kmax(label(2, 1))).map_err(err)?;
    ensure(a.k_star == 3 && a.all_p[..3].iter().all(UEAElement::is_zero), || format!("(2,1): k* = {}", a.k_star))?;
    let lhs = a.p_k.scale(&t_poly(&[1, 2]));
    let rhs = singular_vector(label(3, 1)).map_err(err)?.scale(&rf(1, 2));
    ensure(lhs == rhs && a.certificate, || "(2τ+1)P_3 differs from Δ(3,1)/2".into())?;
    let lambda3 = a.proportionality_constant.clone().ok_or("(2,1): no proportionality constant")?;

    let b = fuse(label(1, 2), Sign::Plus, default_kmax(label(1, 2))).map_err(err)?;
    ensure(b.k_star == 4 && b.all_p[3].is_zero() && b.certificate, || format!("(1,2): k* = {}", b.k_star))?;
    let lambda = b.proportionality_constant.clone().ok_or("(1,2): no proportionality constant")?;
    ensure(b.p_k == singular_vector(label(2, 2)).map_err(err)?.scale(&lambda), || "P_4 is not λΔ(2,2)".into())?;
    Ok(format!("k* = 3 with λ = {lambda3}; k* = 4 with λ = {lambda}"))
}

fn fusion_generality(_: &Options) -> Result<String, String> {
    let mut count = 0;
    for r in 1..=7u32 {
        for s in 1..=8 / (r + 1) {
            let l = label(r, s);
            let target = (r + 1) * s;
            let res = fuse(l, Sign::Plus, default_kmax(l)).map_err(|e| format!("{l}: {e}"))?;
            ensure(res.all_p[..target as usize].iter().all(UEAElement::is_zero), || format!("{l}: early P_j"))?;
            ensure(res.k_star == target && res.certificate, || format!("{l}: k* = {}", res.k_star))?;
            count += 1;
        }
    }
    Ok(format!("{count} labels fuse at the target level"))
}

fn ode_structure(_: &Options) -> Result<String, String> {
    for n in 1..=5u32 {
        let delta0 = compile_delta0(n, &kappa()).map_err(err)?;
        let raw = restrict_to_s(&delta0, n).map_err(|e| format!("n = {n}: {e}"))?;
        let ode = OdeOperator::from_raw(virfuse::bpz::s_symbol(), raw).map_err(err)?;
        ensure(ode.order() == n as usize + 1 && ode.coeffs[0].is_zero(), || format!("n = {n}: p_0 ≠ 0"))?;
        ensure(leading_ratio(&ode).map_err(err)?.is_one(), || format!("n = {n}: leading coefficient"))?;
        let report = fuchsian_check(&ode);
        ensure(report.is_fuchsian, || format!("n = {n}: {:?}", report.failures))?;
    }
    Ok("D_2..D_6 pass".into())
}

fn z0_null(_: &Options) -> Result<String, String> {
    let mut count = 0;
    for r in 0..=4usize {
        for s in 0..=4 - r {
            if r + s == 0 {
                continue;
            }
            for n in 0..=2 {
                let configs = [vec![Spectator::zero(); n], vec![Spectator::from_a(rf(1, 3)); n]];
                for sp in &configs[..if n == 0 { 1 } else { 2 }] {
                    let sys = build_bpz_system(r, s, sp).map_err(err)?;
                    let z = z0_build(r, s, sp).map_err(err)?;
                    for d in sys.d21.iter().chain(&sys.d12) {
                        ensure(apply_to_powerproduct(d, &z).is_zero(), || format!("r = {r}, s = {s}, n = {n}"))?;
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{count} operator applications vanish"))
}

fn mc(config: &McConfig, options: &Options) -> Result<McEstimate, String> {
    match options.threads {
        Some(t) => watermelon_mc_with_threads(config, t),
        None => watermelon_mc(config),
    }
    .map_err(err)
}

fn cross_one(options: &Options) -> Result<String, String> {
    let thetas = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
    let mut worst: f64 = 0.0;
    for (kappa, label) in [(Rational::from(2), "2"), (Rational::new(8, 3).map_err(err)?, "8/3"), (Rational::from(3), "3")] {
        let sol = solve_watermelon(1, &kappa, &thetas, None).map_err(err)?;
        let curve = sol.curve.ok_or("no curve for one strand")?;
        for (i, &theta) in thetas.iter().enumerate() {
            let f1 = curve.values[i][1];
            let config = McConfig::new(1, kappa.to_f64(), theta, options.samples, 7 + i as u64);
            let e = mc(&config, options)?;
            let tol = 3.0 * e.std_err[1] + 0.01;
            let gap = (e.f_hat[1] - f1).abs();
            worst = worst.max(gap / tol);
            ensure(gap <= tol, || format!("κ = {label}, θ = {theta:.4}: ODE {f1:.5} vs MC {:.5}", e.f_hat[1]))?;
            if i == 1 {
                ensure((f1 - 0.5).abs() <= tol && (e.f_hat[1] - 0.5).abs() <= tol, || {
                    format!("κ = {label}: f_1(π/2) = {f1} (ODE), {} (MC)", e.f_hat[1])
                })?;
            }
        }
    }
    Ok(format!("largest gap is {:.2} of the tolerance", worst))
}

fn cross_two(options: &Options) -> Result<String, String> {
    let thetas: Vec<f64> = (1..=5).map(|k| k as f64 * PI / 6.0).collect();
    let mut points = Vec::new();
    for (i, &theta) in thetas.iter().enumerate() {
        let e = mc(&McConfig::new(2, 2.0, theta, options.samples, 100 + i as u64), options)?;
        points.push(McPoint { theta, f_hat: e.f_hat });
    }
    let sol = solve_watermelon(2, &Rational::from(2), &chebyshev_theta_grid(DEFAULT_GRID), Some(&points)).map_err(err)?;
    let fit = sol.fit.ok_or("no fit")?;
    let defect = sol.curve.as_ref().and_then(|c| c.reflection_defect()).ok_or("grid is not symmetric")?;
    ensure(fit.max_residual <= 0.015, || format!("max residual {:.4}", fit.max_residual))?;
    ensure(defect <= 0.01, || format!("reflection defect {defect:.4}"))?;
    Ok(format!("max residual {:.4}, reflection defect {defect:.2e}", fit.max_residual))
}

fn mc_consistency(options: &Options) -> Result<String, String> {
    let small = McConfig::new(2, 2.0, 1.1, 2_000, 21);
    let one = watermelon_mc_with_threads(&small, 1).map_err(err)?;
    let four = watermelon_mc_with_threads(&small, 4).map_err(err)?;
    ensure(one.to_json() == four.to_json(), || "results depend on the worker count".into())?;
    ensure(one.counts.iter().sum::<u64>() == one.samples_used && one.samples_used == small.samples, || {
        "sector counts do not add up".into()
    })?;

    let base = McConfig::new(1, 2.0, PI / 3.0, options.samples, 22);
    let fine = McConfig { dt: base.dt / 2.0, ..base.clone() };
    let (a, b) = (mc(&base, options)?, mc(&fine, options)?);
    for e in [&a, &b] {
        ensure(e.counts.iter().sum::<u64>() == e.samples_used, || "sector counts do not add up".into())?;
    }
    let shift = (a.f_hat[1] - b.f_hat[1]).abs();
    let tol = 2.0 * a.std_err[1].hypot(b.std_err[1]);
    ensure(shift <= tol, || format!("halving dt moved f_1 by {shift:.4} > {tol:.4}"))?;
    Ok(format!("deterministic across workers; dt-halving shift {shift:.4} ≤ {tol:.4}"))
}

const VARS: [&str; 3] = ["x", "y", "z"];

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.random_range(-6i64..=6), rng.random_range(1i64..=4)).expect("nonzero denominator")
}

fn random_poly(rng: &mut ChaCha8Rng, nonzero: bool) -> MultiPoly {
    loop {
        let terms: Vec<(Monomial, Rational)> = (0..rng.random_range(1..=3))
            .map(|_| {
                let e = [rng.random_range(0..=2), rng.random_range(0..=2), rng.random_range(0..=1)];
                let m = Monomial::from_pairs(VARS.iter().zip(e).map(|(v, e)| (Symbol::new(v), e)));
                (m, random_rational(rng))
            })
            .collect();
        let p = MultiPoly::from_terms(terms);
        if !nonzero || !p.is_zero() {
            return p;
        }
    }
}

fn random_ratfunc(rng: &mut ChaCha8Rng) -> RationalFunction {
    let (n, d) = (random_poly(rng, false), random_poly(rng, true));
    RationalFunction::new(n, d).expect("nonzero denominator")
}

/// Ring axioms, normalization and evaluation on one random triple.
#[allow(clippy::eq_op)]
fn arith_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let (a, b, c) = (random_ratfunc(rng), random_ratfunc(rng), random_ratfunc(rng));
    let show = || format!("a = {a}, b = {b}, c = {c}");
    ensure(&a + &b == &b + &a && &(&a + &b) + &c == &a + &(&b + &c), || format!("addition: {}", show()))?;
    ensure(&a * &b == &b * &a && &(&a * &b) * &c == &a * &(&b * &c), || format!("multiplication: {}", show()))?;
    ensure(&a * &(&b + &c) == &(&a * &b) + &(&a * &c), || format!("distributivity: {}", show()))?;
    ensure((&a - &a).is_zero(), || format!("cancellation: {}", show()))?;
    if !b.is_zero() {
        ensure((&a * &b).checked_div(&b).map_err(err)? == a, || format!("division: {}", show()))?;
    }
    let (n, d) = a.clone().into_parts();
    let again = RationalFunction::new(n, d).map_err(err)?;
    ensure(again == a && a.denom().leading_coefficient().is_one(), || format!("normalization: {}", show()))?;
    let point: HashMap<Symbol, Rational> = VARS.iter().map(|v| (Symbol::new(v), random_rational(rng))).collect();
    if let (Ok(va), Ok(vb)) = (a.evaluate(&point), b.evaluate(&point)) {
        let sum = (&a + &b).evaluate(&point).map_err(err)?;
        let prod = (&a * &b).evaluate(&point).map_err(err)?;
        let diff = (&a - &b).evaluate(&point).map_err(err)?;
        ensure(sum == &va + &vb && prod == &va * &vb && diff == &va - &vb, || format!("evaluation: {}", show()))?;
    }
    Ok(())
}

/// Randomized cases drawn by the arithmetic criterion.
pub const ARITH_CASES: usize = 10_000;

fn arith_suite(_: &Options) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..ARITH_CASES {
        arith_case(&mut rng).map_err(|e| format!("case {i}: {e}"))?;
    }
    Ok(format!("{ARITH_CASES} random cases"))
}
