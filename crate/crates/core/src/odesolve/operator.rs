//! Numerical views of a compiled operator `Σ p_i(s) ∂_s^i`: dense
//! coefficients, the Euler form `s^N D = Σ_j Q_j(s) ϑ^j` with `ϑ = s∂_s`,
//! and the companion systems used for integration.

use std::fmt;

use nalgebra::DMatrix;

use super::dopri::{dopri5, Tolerance};
use super::OdeError;
use crate::arith::Rational;
use crate::bpz::OdeOperator;

/// A finite point or ∞.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpansionPoint {
    Finite(Rational),
    Infinity,
}

impl fmt::Display for ExpansionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpansionPoint::Finite(a) => write!(f, "{a}"),
            ExpansionPoint::Infinity => f.write_str("inf"),
        }
    }
}

/// Signed Stirling numbers of the first kind: `x(x-1)…(x-i+1) = Σ_j s(i,j) x^j`.
pub(crate) fn stirling1(n: usize) -> Vec<Vec<i64>> {
    let mut s = vec![vec![0i64; n + 1]; n + 1];
    s[0][0] = 1;
    for i in 0..n {
        for j in 0..=i {
            s[i + 1][j + 1] += s[i][j];
            s[i + 1][j] -= i as i64 * s[i][j];
        }
    }
    s
}

pub(crate) fn eval_exact(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| &(&acc * x) + c)
}

pub(crate) fn eval_f64(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `p(x + a)`.
fn shift(p: &[Rational], a: &Rational) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); p.len()];
    for c in p.iter().rev() {
        // out = out·(x + a) + c
        let mut next = vec![Rational::zero(); p.len()];
        for (k, o) in out.iter().enumerate() {
            if o.is_zero() {
                continue;
            }
            next[k] = &next[k] + &(o * a);
            if k + 1 < next.len() {
                next[k + 1] = &next[k + 1] + o;
            }
        }
        next[0] = &next[0] + c;
        out = next;
    }
    out
}

fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.last().is_some_and(Rational::is_zero) {
        p.pop();
    }
    p
}

/// Dense coefficients of `p_i`, lowest degree first.
pub(crate) fn dense_coeffs(ode: &OdeOperator) -> Result<Vec<Vec<Rational>>, OdeError> {
    ode.coeffs
        .iter()
        .map(|c| {
            if !c.denom().is_one() {
                return Err(OdeError::InvalidInput("coefficients must be polynomials".into()));
            }
            let dense = c
                .numer()
                .to_dense(ode.variable)
                .ok_or_else(|| OdeError::InvalidInput("coefficients must be numeric; specialize κ first".into()))?;
            Ok(trim(dense))
        })
        .collect()
}

/// `Q_j = Σ_{i ≥ j} s(i,j) p_i s^{N-i}`.
pub(crate) fn theta_form(p: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = p.len() - 1;
    let st = stirling1(n);
    let len = p.iter().enumerate().map(|(i, c)| c.len() + n - i).max().unwrap_or(1);
    let mut q = vec![vec![Rational::zero(); len]; n + 1];
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter_mut().enumerate().take(i + 1) {
            if st[i][j] == 0 {
                continue;
            }
            let k = Rational::from(st[i][j]);
            for (m, c) in pi.iter().enumerate() {
                qj[m + n - i] = &qj[m + n - i] + &(c * &k);
            }
        }
    }
    q.into_iter().map(trim).collect()
}

/// Recursion polynomials at a point: a branch `Σ a_k x^{λ+k}` in the local
/// variable satisfies `Σ_{m ≥ 0} a_{K-m} R_m(λ+K-m) = 0`, with `R_0` the
/// indicial polynomial.
#[derive(Debug, Clone)]
pub(crate) struct LocalRecursion {
    pub r: Vec<Vec<Rational>>,
}

pub(crate) fn local_recursion(ode: &OdeOperator, point: &ExpansionPoint) -> Result<LocalRecursion, OdeError> {
    let p = dense_coeffs(ode)?;
    let n = p.len() - 1;
    match point {
        ExpansionPoint::Finite(a) => {
            let shifted: Vec<Vec<Rational>> =
                if a.is_zero() { p } else { p.iter().map(|c| trim(shift(c, a))).collect() };
            let q = theta_form(&shifted);
            let val = |c: &[Rational]| c.iter().position(|x| !x.is_zero());
            let m0 = q.iter().filter_map(|c| val(c)).min().expect("the leading coefficient is nonzero");
            if val(&q[n]) != Some(m0) {
                return Err(OdeError::Irregular(point.to_string()));
            }
            let top = q.iter().map(Vec::len).max().unwrap_or(0);
            let r = (m0..top)
                .map(|m| q.iter().map(|c| c.get(m).cloned().unwrap_or_else(Rational::zero)).collect())
                .map(trim)
                .collect();
            Ok(LocalRecursion { r })
        }
        ExpansionPoint::Infinity => {
            let q = theta_form(&p);
            let d = q.iter().map(Vec::len).max().unwrap_or(0);
            if q[n].len() != d {
                return Err(OdeError::Irregular(point.to_string()));
            }
            let r = (0..d)
                .map(|m| {
                    q.iter()
                        .enumerate()
                        .map(|(j, c)| {
                            let v = c.get(d - 1 - m).cloned().unwrap_or_else(Rational::zero);
                            if j % 2 == 1 {
                                -&v
                            } else {
                                v
                            }
                        })
                        .collect()
                })
                .map(trim)
                .collect();
            Ok(LocalRecursion { r })
        }
    }
}

/// Real roots of a real polynomial (lowest degree first), from the
/// eigenvalues of its companion matrix, polished by Newton steps.
pub(crate) fn real_roots(p: &[f64]) -> Vec<f64> {
    let mut p = p.to_vec();
    while p.last().is_some_and(|c| *c == 0.0) {
        p.pop();
    }
    let n = p.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    let lead = p[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -p[i] / lead;
    }
    let dp: Vec<f64> = (1..=n).map(|k| p[k] * k as f64).collect();
    let mut out = Vec::new();
    for z in m.complex_eigenvalues().iter() {
        if z.im.abs() > 1e-7 * (1.0 + z.re.abs()) {
            continue;
        }
        let mut x = z.re;
        for _ in 0..3 {
            let d = eval_f64(&dp, x);
            if d == 0.0 {
                break;
            }
            let step = eval_f64(&p, x) / d;
            if !step.is_finite() || step.abs() > 1e-3 * (1.0 + x.abs()) {
                break;
            }
            x -= step;
        }
        out.push(x);
    }
    out.sort_by(|a, b| b.partial_cmp(a).expect("roots are finite"));
    out
}

/// Dense `f64` coefficients and the Euler form, for integration.
#[derive(Debug, Clone)]
pub struct NumericOde {
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    singular: Vec<f64>,
}

/// `c(s)` for `|s| ≤ 1` and `c(s)/s^degree` otherwise.
fn eval_scaled(c: &[f64], s: f64, degree: usize) -> f64 {
    if s.abs() <= 1.0 {
        return eval_f64(c, s);
    }
    let inv = 1.0 / s;
    (0..=degree).fold(0.0, |acc, k| acc * inv + c.get(k).copied().unwrap_or(0.0))
}

impl NumericOde {
    pub fn new(ode: &OdeOperator) -> Result<Self, OdeError> {
        let exact = dense_coeffs(ode)?;
        let q = theta_form(&exact);
        let to_f = |v: &Vec<Rational>| v.iter().map(Rational::to_f64).collect::<Vec<f64>>();
        let p: Vec<Vec<f64>> = exact.iter().map(to_f).collect();
        let singular = real_roots(p.last().expect("nonzero operator"));
        Ok(NumericOde { p, q: q.iter().map(to_f).collect(), singular })
    }

    pub fn order(&self) -> usize {
        self.p.len() - 1
    }

    /// Real singular points (roots of the leading coefficient).
    pub fn singular_points(&self) -> &[f64] {
        &self.singular
    }

    /// `Σ p_i(s) y^{(i)}` for `derivs = (y, y', …, y^{(N)})`.
    pub fn residual(&self, s: f64, derivs: &[f64]) -> f64 {
        self.p.iter().zip(derivs).map(|(c, d)| eval_f64(c, s) * d).sum()
    }

    /// `p_i(s)/p_N(s)` for `i < N`.
    fn ratios(&self, s: f64, out: &mut [f64]) {
        let n = self.order();
        let lead = eval_f64(&self.p[n], s);
        for i in 0..n {
            out[i] = eval_f64(&self.p[i], s) / lead;
        }
    }

    /// `Q_j(s)/Q_N(s)` for `j < N`, evaluated stably for large `|s|`.
    fn theta_ratios(&self, s: f64, out: &mut [f64]) {
        let n = self.order();
        let d = self.q.iter().map(|c| c.len()).max().unwrap_or(1).saturating_sub(1);
        let lead = eval_scaled(&self.q[n], s, d);
        for j in 0..n {
            out[j] = eval_scaled(&self.q[j], s, d) / lead;
        }
    }
}

/// Integrates `D y = 0` from `s0` with data `(y, y', …, y^{(N-1)})` to `s1`
/// and returns the same data at `s1`.
pub fn integrate(ode: &NumericOde, s0: f64, initial: &[f64], s1: f64, tol: f64) -> Result<Vec<f64>, OdeError> {
    let n = ode.order();
    if initial.len() != n {
        return Err(OdeError::InvalidInput(format!("expected {n} initial values, got {}", initial.len())));
    }
    let (lo, hi) = (s0.min(s1), s0.max(s1));
    if let Some(&p) = ode.singular_points().iter().find(|&&p| p >= lo - 1e-12 && p <= hi + 1e-12) {
        return Err(OdeError::SingularInterval { point: p });
    }
    let mut r = vec![0.0; n];
    dopri5(
        |s, y, dy| {
            ode.ratios(s, &mut r);
            dy[..n - 1].copy_from_slice(&y[1..n]);
            dy[n - 1] = -(0..n).map(|i| r[i] * y[i]).sum::<f64>();
        },
        s0,
        initial,
        s1,
        Tolerance::new(tol),
    )
}

/// Integrates in `x = ln(-s)` on the negative axis, with data
/// `(y, ϑy, …, ϑ^{N-1}y)`; the regular singular points 0 and ∞ sit at
/// `x = ∓∞`.
pub fn integrate_log(ode: &NumericOde, x0: f64, initial: &[f64], x1: f64, tol: f64) -> Result<Vec<f64>, OdeError> {
    let n = ode.order();
    if initial.len() != n {
        return Err(OdeError::InvalidInput(format!("expected {n} initial values, got {}", initial.len())));
    }
    let mut r = vec![0.0; n];
    dopri5(
        |x, y, dy| {
            ode.theta_ratios(-x.exp(), &mut r);
            dy[..n - 1].copy_from_slice(&y[1..n]);
            dy[n - 1] = -(0..n).map(|j| r[j] * y[j]).sum::<f64>();
        },
        x0,
        initial,
        x1,
        Tolerance::new(tol),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirling_numbers() {
        let s = stirling1(4);
        assert_eq!(s[3], vec![0, 2, -3, 1, 0]);
        assert_eq!(s[4][1], -6);
    }

    #[test]
    fn shift_is_taylor_expansion() {
        let p = vec![Rational::from(1), Rational::from(0), Rational::from(1)];
        // (x + 2)^2 + 1 = x^2 + 4x + 5
        assert_eq!(shift(&p, &Rational::from(2)), vec![Rational::from(5), Rational::from(4), Rational::from(1)]);
    }

    #[test]
    fn real_roots_of_cubic() {
        // (x - 1)(x + 2)(x - 1/2)
        let r = real_roots(&[1.0, -2.5, 0.5, 1.0]);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([1.0, 0.5, -2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(real_roots(&[1.0, 0.0, 1.0]).is_empty());
    }
}
