//! Local exponents and Frobenius branches at regular singular points.

use super::operator::{eval_exact, eval_f64, local_recursion, real_roots, stirling1, ExpansionPoint};
use super::OdeError;
use crate::arith::Rational;
use crate::bpz::OdeOperator;

/// A root of the indicial polynomial; `exact` is set when it is rational.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponent {
    pub value: f64,
    pub exact: Option<Rational>,
}

/// Monic indicial polynomial in `ν` (lowest degree first).
pub fn indicial_polynomial(ode: &OdeOperator, point: &ExpansionPoint) -> Result<Vec<Rational>, OdeError> {
    let rec = local_recursion(ode, point)?;
    let r0 = &rec.r[0];
    let lead = r0.last().expect("indicial polynomial is nonzero").clone();
    Ok(r0.iter().map(|c| c.checked_div(&lead).expect("nonzero")).collect())
}

fn exact_root(p: &[Rational], x: f64) -> Option<Rational> {
    let q = Rational::approximate(x, 100_000)?;
    eval_exact(p, &q).is_zero().then_some(q)
}

/// Real local exponents, largest first.
pub fn local_exponents(ode: &OdeOperator, point: &ExpansionPoint) -> Result<Vec<Exponent>, OdeError> {
    let p = indicial_polynomial(ode, point)?;
    let pf: Vec<f64> = p.iter().map(Rational::to_f64).collect();
    Ok(real_roots(&pf)
        .into_iter()
        .map(|x| {
            let exact = exact_root(&p, x);
            Exponent { value: exact.as_ref().map_or(x, Rational::to_f64), exact }
        })
        .collect())
}

/// `x^λ Σ_k a_k x^k` in the local variable (`s - a`, or `1/s` at ∞), with
/// `a_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusSolution {
    pub point: ExpansionPoint,
    pub exponent: f64,
    pub exact_exponent: Option<Rational>,
    pub coefficients: Vec<f64>,
    /// Present when the exponent is rational.
    pub exact_coefficients: Option<Vec<Rational>>,
    pub truncation_order: usize,
}

/// Frobenius branch for `exponent`, truncated at `order`. An integer gap to
/// another exponent is harmless when the recursion stays consistent there
/// (the free coefficient is set to zero); otherwise it is a resonance.
pub fn frobenius_series(
    ode: &OdeOperator,
    point: &ExpansionPoint,
    exponent: f64,
    order: usize,
) -> Result<FrobeniusSolution, OdeError> {
    let rec = local_recursion(ode, point)?;
    let r0 = &rec.r[0];
    let (coefficients, exact_exponent, exact_coefficients) = match exact_root(r0, exponent) {
        Some(lam) => {
            let a = exact_recursion(&rec.r, &lam, order)?;
            (a.iter().map(Rational::to_f64).collect(), Some(lam), Some(a))
        }
        None => {
            let rf: Vec<Vec<f64>> = rec.r.iter().map(|p| p.iter().map(Rational::to_f64).collect()).collect();
            let scale: f64 = rf[0].iter().map(|c| c.abs()).sum::<f64>() * (1.0 + exponent.abs()).powi(rf[0].len() as i32);
            let res = eval_f64(&rf[0], exponent);
            if res.abs() > 1e-10 * scale {
                return Err(OdeError::NotAnExponent { exponent, residual: res });
            }
            (float_recursion(&rf, exponent, order)?, None, None)
        }
    };
    Ok(FrobeniusSolution {
        point: point.clone(),
        exponent: exact_exponent.as_ref().map_or(exponent, Rational::to_f64),
        exact_exponent,
        coefficients,
        exact_coefficients,
        truncation_order: order,
    })
}

fn exact_recursion(r: &[Vec<Rational>], lam: &Rational, order: usize) -> Result<Vec<Rational>, OdeError> {
    let mut a = vec![Rational::one()];
    for k in 1..=order {
        let mut rhs = Rational::zero();
        for m in 1..=k.min(r.len() - 1) {
            let arg = lam + &Rational::from((k - m) as i64);
            rhs = &rhs - &(&a[k - m] * &eval_exact(&r[m], &arg));
        }
        let den = eval_exact(&r[0], &(lam + &Rational::from(k as i64)));
        if den.is_zero() {
            if !rhs.is_zero() {
                return Err(OdeError::Resonance { exponent: lam.to_string(), gap: k });
            }
            a.push(Rational::zero());
        } else {
            a.push(rhs.checked_div(&den).expect("nonzero"));
        }
    }
    Ok(a)
}

fn float_recursion(r: &[Vec<f64>], lam: f64, order: usize) -> Result<Vec<f64>, OdeError> {
    let mut a = vec![1.0];
    let scale0: f64 = r[0].iter().map(|c| c.abs()).sum();
    for k in 1..=order {
        let mut rhs = 0.0;
        let mut size: f64 = 0.0;
        for m in 1..=k.min(r.len() - 1) {
            let t = a[k - m] * eval_f64(&r[m], lam + (k - m) as f64);
            rhs -= t;
            size = size.max(t.abs());
        }
        let x = lam + k as f64;
        let den = eval_f64(&r[0], x);
        if den.abs() <= 1e-9 * scale0 * (1.0 + x.abs()).powi(r[0].len() as i32) {
            if rhs.abs() > 1e-8 * size.max(1e-300) {
                return Err(OdeError::Resonance { exponent: format!("{lam}"), gap: k });
            }
            a.push(0.0);
        } else {
            a.push(rhs / den);
        }
    }
    Ok(a)
}

impl FrobeniusSolution {
    fn local(&self, s: f64) -> f64 {
        match &self.point {
            ExpansionPoint::Finite(a) => s - a.to_f64(),
            ExpansionPoint::Infinity => 1.0 / s,
        }
    }

    /// `ϑ^j y` for `j < count`, with `ϑ = (s-a)∂_s`, or `s∂_s` at ∞. The
    /// branch is real on both sides: `|x|^λ` replaces `x^λ`.
    pub fn theta_derivatives(&self, s: f64, count: usize) -> Vec<f64> {
        let x = self.local(s);
        let base = x.abs().powf(self.exponent);
        let sign = if matches!(self.point, ExpansionPoint::Infinity) { -1.0 } else { 1.0 };
        let mut out = vec![0.0; count];
        let mut xk = 1.0;
        for (k, a) in self.coefficients.iter().enumerate() {
            let mu = self.exponent + k as f64;
            let mut pw = 1.0;
            for o in out.iter_mut() {
                *o += a * pw * xk;
                pw *= sign * mu;
            }
            xk *= x;
        }
        out.iter().map(|v| v * base).collect()
    }

    pub fn value(&self, s: f64) -> f64 {
        self.theta_derivatives(s, 1)[0]
    }

    /// `(y, y', …, y^{(count-1)})` from `∂^k = v^{-k} Σ_j s(k,j) ϑ^j`, where
    /// `v = s - a` (or `s` at ∞).
    pub fn derivatives(&self, s: f64, count: usize) -> Vec<f64> {
        let th = self.theta_derivatives(s, count);
        let v = match &self.point {
            ExpansionPoint::Finite(a) => s - a.to_f64(),
            ExpansionPoint::Infinity => s,
        };
        let st = stirling1(count);
        (0..count)
            .map(|k| (0..=k).map(|j| st[k][j] as f64 * th[j]).sum::<f64>() / v.powi(k as i32))
            .collect()
    }
}
