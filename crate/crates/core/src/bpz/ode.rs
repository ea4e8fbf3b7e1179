//! The Fuchsian ODE `D_{n+1}` in `s = -cot²(θ/2)` obtained from
//! `Δ_{n+1,1}` by substituting the bulk-spectator operators `ℓ⁰_m`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde_json::json;

use super::diffop::{DiffOpRS, MultiDiffOp};
use super::BpzError;
use crate::arith::{content_in, gcd, MultiPoly, Rational, RationalFunction, Symbol};
use crate::virasoro::{singular_vector, tau_symbol, KacLabel, StandardMonomial};

pub fn r_symbol() -> Symbol {
    Symbol::new("r")
}

pub fn s_symbol() -> Symbol {
    Symbol::new("s")
}

pub fn kappa_symbol() -> Symbol {
    Symbol::new("kappa")
}

pub fn nu_symbol() -> Symbol {
    Symbol::new("nu")
}

fn inf_symbol() -> Symbol {
    Symbol::new("x_inf")
}

/// The indeterminate κ.
pub fn kappa() -> RationalFunction {
    RationalFunction::var(kappa_symbol())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebyshevKind {
    T,
    U,
}

/// Dense coefficients (lowest degree first) of `T_p` or `U_p`.
pub fn chebyshev(kind: ChebyshevKind, p: u32) -> Vec<Rational> {
    let x_times = |v: &[Rational]| {
        let mut out = vec![Rational::zero()];
        out.extend(v.iter().map(|c| c * &Rational::from(2)));
        out
    };
    let first = vec![Rational::one()];
    let second = match kind {
        ChebyshevKind::T => vec![Rational::zero(), Rational::one()],
        ChebyshevKind::U => vec![Rational::zero(), Rational::from(2)],
    };
    if p == 0 {
        return first;
    }
    let (mut a, mut b) = (first, second);
    for _ in 1..p {
        // X_{k+1} = 2x X_k - X_{k-1}
        let mut next = x_times(&b);
        for (i, c) in a.iter().enumerate() {
            next[i] = &next[i] - c;
        }
        a = std::mem::replace(&mut b, next);
    }
    b
}

/// Evaluates a dense polynomial at a rational function (Horner).
pub fn eval_dense(coeffs: &[Rational], x: &RationalFunction) -> RationalFunction {
    let mut acc = RationalFunction::zero();
    for c in coeffs.iter().rev() {
        acc = &(&acc * x) + &RationalFunction::constant(c.clone());
    }
    acc
}

/// `ℓ⁰_m = -r^{m+1} T_{|m|}(A) ∂_r - r^m U_{|m|-1}(A) 2s ∂_s` with
/// `A = (s+1)/(s-1)`, for `m ≤ -1`.
pub fn ell0_rs(m: i32) -> Result<DiffOpRS, BpzError> {
    if m >= 0 {
        return Err(BpzError::NonNegativeMode(m));
    }
    let (r, s) = (r_symbol(), s_symbol());
    let vars = [r, s];
    let sv = RationalFunction::var(s);
    let one = RationalFunction::one();
    let a = (&sv + &one).checked_div(&(&sv - &one))?;
    let p = m.unsigned_abs();
    let rv = RationalFunction::var(r);
    let t = eval_dense(&chebyshev(ChebyshevKind::T, p), &a);
    let u = eval_dense(&chebyshev(ChebyshevKind::U, p - 1), &a);
    let dr = &-&rv.pow(m + 1)? * &t;
    let ds = &(&-&rv.pow(m)? * &u) * &sv.scale(&Rational::from(2));
    Ok(&MultiDiffOp::first_order(&vars, r, dr) + &MultiDiffOp::first_order(&vars, s, ds))
}

/// `Σ p_i(s) ∂_s^i` with polynomial coefficients, content-free, integral,
/// and with the leading term of `p_N` positive.
#[derive(Clone, PartialEq, Eq)]
pub struct OdeOperator {
    pub variable: Symbol,
    pub coeffs: Vec<RationalFunction>,
    /// `coeffs = normalizer · raw` for the coefficients as compiled.
    pub normalizer: RationalFunction,
}

impl OdeOperator {
    /// Clears denominators of `raw` into canonical form.
    pub fn from_raw(variable: Symbol, raw: Vec<RationalFunction>) -> Result<Self, BpzError> {
        let mut raw = raw;
        while raw.last().is_some_and(|c| c.is_zero()) {
            raw.pop();
        }
        if raw.is_empty() {
            return Err(BpzError::ZeroOperator);
        }
        let mut lcd = MultiPoly::one();
        for c in &raw {
            let g = gcd(&lcd, c.denom());
            lcd = &lcd * &c.denom().div_exact(&g).expect("gcd divides");
        }
        let nums: Vec<MultiPoly> = raw
            .iter()
            .map(|c| &c.numer().clone() * &lcd.div_exact(c.denom()).expect("lcd is a multiple"))
            .collect();
        let mut g = MultiPoly::zero();
        for p in &nums {
            g = if g.is_zero() { p.clone() } else { gcd(&g, p) };
        }
        let nums: Vec<MultiPoly> = nums.iter().map(|p| p.div_exact(&g).expect("gcd divides")).collect();
        // integral, content one
        let mut den_lcm = BigInt::one();
        let mut num_gcd = BigInt::zero();
        for p in &nums {
            for (_, c) in p.terms() {
                den_lcm = den_lcm.lcm(c.denom());
                num_gcd = num_gcd.gcd(c.numer());
            }
        }
        let mut k = Rational::new(den_lcm, num_gcd)?;
        let lead = nums.last().unwrap().leading_coefficient();
        if lead.is_negative() {
            k = -&k;
        }
        let coeffs: Vec<RationalFunction> = nums.iter().map(|p| RationalFunction::from_poly(p.scale(&k))).collect();
        let normalizer = RationalFunction::new(lcd.scale(&k), g)?;
        Ok(OdeOperator { variable, coeffs, normalizer })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Applies the operator to a function of the ODE variable.
    pub fn apply(&self, f: &RationalFunction) -> RationalFunction {
        let mut acc = RationalFunction::zero();
        let mut d = f.clone();
        for c in &self.coeffs {
            acc = &acc + &(c * &d);
            d = d.derivative(self.variable);
        }
        acc
    }

    /// Substitutes a value for κ.
    pub fn at_kappa(&self, k: &Rational) -> Result<OdeOperator, BpzError> {
        let mut b = HashMap::new();
        b.insert(kappa_symbol(), RationalFunction::constant(k.clone()));
        let raw: Vec<RationalFunction> =
            self.coeffs.iter().map(|c| c.substitute(&b)).collect::<Result<_, _>>()?;
        let mut out = OdeOperator::from_raw(self.variable, raw)?;
        out.normalizer = &out.normalizer * &self.normalizer.substitute(&b)?;
        Ok(out)
    }

    /// Coefficients as `f64` polynomials in the ODE variable (lowest degree
    /// first); κ must already be specialized.
    pub fn numeric_coeffs(&self) -> Result<Vec<Vec<f64>>, BpzError> {
        self.coeffs
            .iter()
            .map(|c| {
                let dense = c.numer().to_dense(self.variable).ok_or(BpzError::NotNumeric)?;
                Ok(dense.iter().map(Rational::to_f64).collect())
            })
            .collect()
    }

    pub fn to_latex(&self) -> String {
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let d = match i {
                0 => String::new(),
                1 => format!(" \\partial_{{{}}}", self.variable.name()),
                _ => format!(" \\partial_{{{}}}^{{{i}}}", self.variable.name()),
            };
            let body = c.numer().to_string().replace('*', " ").replace("kappa", "\\kappa");
            parts.push(format!("\\left({body}\\right){d}"));
        }
        parts.join(" + ")
    }
}

impl fmt::Display for OdeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({c}) d^{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for OdeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `Δ_{n+1,1}` with `L_m ↦ ℓ⁰_m` and `τ = 4/κ`, as a two-variable operator.
pub fn compile_delta0(n: u32, kappa: &RationalFunction) -> Result<DiffOpRS, BpzError> {
    if n == 0 {
        return Err(BpzError::InvalidOrder(n));
    }
    if kappa.is_zero() {
        return Err(BpzError::ZeroKappa);
    }
    let tau = RationalFunction::from_int(4).checked_div(kappa)?;
    let mut b = HashMap::new();
    b.insert(tau_symbol(), tau);
    let delta = singular_vector(KacLabel::new(n + 1, 1)?)?;
    let vars = [r_symbol(), s_symbol()];
    let gens: Vec<DiffOpRS> = (1..=n as i32 + 1).map(|m| ell0_rs(-m)).collect::<Result<_, _>>()?;
    let mut memo: HashMap<StandardMonomial, DiffOpRS> = HashMap::new();
    memo.insert(StandardMonomial::identity(), MultiDiffOp::identity(&vars));
    let mut total = MultiDiffOp::zero(&vars);
    for (mono, coef) in delta.terms() {
        let idx = mono.indices();
        for m in (0..idx.len()).rev() {
            let suffix = StandardMonomial::new(&idx[m..]).expect("suffix of a standard monomial");
            if memo.contains_key(&suffix) {
                continue;
            }
            let prev = StandardMonomial::new(&idx[m + 1..]).expect("suffix of a standard monomial");
            let op = gens[idx[m] as usize - 1].compose(&memo[&prev]);
            memo.insert(suffix, op);
        }
        let c = coef.substitute(&b)?;
        total = &total + &memo[mono].scale(&c);
    }
    Ok(total)
}

/// Restricts `Δ⁰_{n+1,1}` to functions of `s` alone and returns
/// `r^{n+1}` times the surviving coefficients, after checking that no
/// other power of `r` appears.
pub fn restrict_to_s(delta0: &DiffOpRS, n: u32) -> Result<Vec<RationalFunction>, BpzError> {
    let r = r_symbol();
    let rn = RationalFunction::var(r).pow(n as i32 + 1)?;
    let mut raw = vec![RationalFunction::zero(); n as usize + 2];
    for (alpha, c) in delta0.terms() {
        if alpha[0] != 0 {
            continue;
        }
        let p = c * &rn;
        if p.variables().contains(&r) {
            return Err(BpzError::Residue(format!("coefficient of d_s^{} is {c}", alpha[1])));
        }
        raw[alpha[1] as usize] = p;
    }
    Ok(raw)
}

/// `D_{n+1}` for `n ≥ 1`, with κ symbolic (`kappa()`) or a constant.
pub fn compile_d(n: u32, kappa: &RationalFunction) -> Result<OdeOperator, BpzError> {
    let delta0 = compile_delta0(n, kappa)?;
    let raw = restrict_to_s(&delta0, n)?;
    OdeOperator::from_raw(s_symbol(), raw)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SingularPoint {
    Finite(RationalFunction),
    Infinity,
    /// Roots of a factor without rational roots.
    Roots(MultiPoly),
}

impl fmt::Display for SingularPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularPoint::Finite(a) => write!(f, "{a}"),
            SingularPoint::Infinity => f.write_str("inf"),
            SingularPoint::Roots(p) => write!(f, "roots of {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuchsianReport {
    pub is_fuchsian: bool,
    pub singular_points: Vec<SingularPoint>,
    /// Indicial polynomial in `ν` at each point where it was computed.
    pub indicial: Vec<(SingularPoint, RationalFunction)>,
    pub failures: Vec<String>,
}

impl FuchsianReport {
    pub fn singular_points_json(&self) -> serde_json::Value {
        json!(self.singular_points.iter().map(|p| p.to_string()).collect::<Vec<_>>())
    }

    pub fn indicial_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for (p, poly) in &self.indicial {
            m.insert(p.to_string(), poly.to_json());
        }
        serde_json::Value::Object(m)
    }
}

/// The part of `p` that depends on `v`: divides out the content in `v`.
fn v_part(p: &MultiPoly, v: Symbol) -> MultiPoly {
    if p.degree_in(v) == 0 {
        return MultiPoly::one();
    }
    let c = content_in(p, v);
    p.div_exact(&c).expect("content divides")
}

fn lcm(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let g = gcd(a, b);
    &a.div_exact(&g).expect("gcd divides") * b
}

/// Pole orders and regularity at every finite point and at ∞; indicial
/// polynomials at every rational (or κ-rational) singular point.
pub fn fuchsian_check(ode: &OdeOperator) -> FuchsianReport {
    let v = ode.variable;
    let n = ode.order();
    let mut failures = Vec::new();
    let ratios: Vec<RationalFunction> =
        ode.coeffs.iter().map(|c| c.checked_div(&ode.coeffs[n]).expect("leading coefficient is nonzero")).collect();

    let dens: Vec<MultiPoly> = ratios.iter().map(|q| v_part(q.denom(), v)).collect();
    let mut all = MultiPoly::one();
    for d in &dens {
        all = lcm(&all, d);
    }
    let radical = if all.degree_in(v) == 0 {
        MultiPoly::one()
    } else {
        let g = gcd(&all, &all.derivative(v));
        v_part(&all.div_exact(&g).expect("gcd divides"), v)
    };
    for (i, d) in dens.iter().enumerate() {
        if d.degree_in(v) == 0 {
            continue;
        }
        if radical.pow((n - i) as u32).div_exact(d).is_none() {
            failures.push(format!("p_{i}/p_{n} has a pole of order above {} at a root of {d}", n - i));
        }
    }

    let mut singular_points = Vec::new();
    let mut indicial = Vec::new();
    for point in split_roots(&radical, v) {
        if let SingularPoint::Finite(a) = &point {
            if let Some(ind) = indicial_at(&ratios, v, a) {
                indicial.push((point.clone(), ind));
            }
        }
        singular_points.push(point);
    }

    match at_infinity(ode) {
        Ok(inf) => {
            let x = inf_symbol();
            let m = inf.len() - 1;
            let lead = inf[m].clone();
            let ratios: Vec<RationalFunction> = inf.iter().map(|c| c.checked_div(&lead).expect("nonzero")).collect();
            let mut singular = false;
            for (i, q) in ratios.iter().enumerate() {
                let val = valuation(q, x);
                if val < 0 {
                    singular = true;
                }
                if val < i as i64 - m as i64 {
                    failures.push(format!("at infinity the ratio p_{i}/p_{m} has a pole of order {}", -val));
                }
            }
            if singular {
                singular_points.push(SingularPoint::Infinity);
                if let Some(ind) = indicial_at(&ratios, x, &RationalFunction::zero()) {
                    indicial.push((SingularPoint::Infinity, ind));
                }
            }
        }
        Err(e) => failures.push(format!("transformation at infinity failed: {e}")),
    }

    FuchsianReport { is_fuchsian: failures.is_empty(), singular_points, indicial, failures }
}

/// Order of vanishing at `v = 0`.
fn valuation(q: &RationalFunction, v: Symbol) -> i64 {
    if q.is_zero() {
        return i64::MAX;
    }
    q.numer().min_degree_in(v) as i64 - q.denom().min_degree_in(v) as i64
}

/// Splits a square-free polynomial in `v` into rational roots (found among
/// small candidates or from linear factors) and a leftover factor.
fn split_roots(p: &MultiPoly, v: Symbol) -> Vec<SingularPoint> {
    let mut out = Vec::new();
    let mut rest = p.clone();
    let vv = MultiPoly::var(v);
    let candidates: Vec<Rational> = [0i64, 1, -1, 2, -2, 3, -3]
        .iter()
        .map(|&k| Rational::from(k))
        .chain([Rational::new(1, 2).unwrap(), Rational::new(-1, 2).unwrap()])
        .collect();
    for a in candidates {
        if rest.degree_in(v) == 0 {
            break;
        }
        let lin = &vv - &MultiPoly::constant(a.clone());
        if let Some(q) = rest.div_exact(&lin) {
            rest = q;
            out.push(SingularPoint::Finite(RationalFunction::constant(a)));
        }
    }
    while rest.degree_in(v) == 1 {
        let c = rest.coeffs_in(v);
        let root = RationalFunction::new(-&c[0], c[1].clone()).expect("leading coefficient is nonzero");
        out.push(SingularPoint::Finite(root));
        rest = MultiPoly::one();
    }
    if rest.degree_in(v) > 0 {
        out.push(SingularPoint::Roots(rest));
    }
    out
}

/// `Σ_i q_i ν(ν-1)…(ν-i+1)` with `q_i = lim (v-a)^{N-i} p_i/p_N`.
fn indicial_at(ratios: &[RationalFunction], v: Symbol, a: &RationalFunction) -> Option<RationalFunction> {
    let n = ratios.len() - 1;
    let x = Symbol::new("x_loc");
    let mut b = HashMap::new();
    b.insert(v, &RationalFunction::var(x) + a);
    let nu = RationalFunction::var(nu_symbol());
    let mut acc = RationalFunction::zero();
    let mut falling = RationalFunction::one();
    for (i, q) in ratios.iter().enumerate() {
        let shifted = q.substitute(&b).ok()?;
        let val = valuation(&shifted, x);
        let want = i as i64 - n as i64;
        if val < want {
            return None;
        }
        if val == want {
            let num = &shifted.numer().coeffs_in(x)[shifted.numer().min_degree_in(x) as usize];
            let den = &shifted.denom().coeffs_in(x)[shifted.denom().min_degree_in(x) as usize];
            let lead = RationalFunction::new(num.clone(), den.clone()).ok()?;
            acc = &acc + &(&lead * &falling);
        }
        falling = &falling * &(&nu - &RationalFunction::from_int(i as i64));
    }
    Some(acc)
}

/// Coefficients of the operator in `x = 1/v`, using `∂_v = -x² ∂_x`.
fn at_infinity(ode: &OdeOperator) -> Result<Vec<RationalFunction>, BpzError> {
    let x = inf_symbol();
    let vars = [x];
    let xv = RationalFunction::var(x);
    let dv = MultiDiffOp::first_order(&vars, x, -&(&xv * &xv));
    let mut b = HashMap::new();
    b.insert(ode.variable, xv.recip()?);
    let mut total = MultiDiffOp::zero(&vars);
    let mut power = MultiDiffOp::identity(&vars);
    for c in &ode.coeffs {
        let cx = c.substitute(&b)?;
        total = &total + &power.scale(&cx);
        power = dv.compose(&power);
    }
    let mut out = vec![RationalFunction::zero(); ode.coeffs.len()];
    for (alpha, c) in total.terms() {
        out[alpha[0] as usize] = c.clone();
    }
    Ok(out)
}

/// `ode.json` payload.
pub fn ode_json(n: u32, kappa_label: &str, ode: &OdeOperator, report: &FuchsianReport) -> serde_json::Value {
    json!({
        "n": n,
        "kappa": kappa_label,
        "coeffs": ode.coeffs.iter().map(RationalFunction::to_json).collect::<Vec<_>>(),
        "singularPoints": report.singular_points_json(),
        "indicial": report.indicial_json(),
    })
}

/// Leading-coefficient sanity data: `p_N / (-2s)^{N}` after undoing the
/// normalizer.
pub fn leading_ratio(ode: &OdeOperator) -> Result<RationalFunction, BpzError> {
    let n = ode.order() as i32;
    let s = RationalFunction::var(ode.variable);
    let raw = ode.coeffs[n as usize].checked_div(&ode.normalizer)?;
    Ok(raw.checked_div(&s.scale(&Rational::from(-2)).pow(n)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_low_orders() {
        let r = |v: &[i64]| v.iter().map(|&k| Rational::from(k)).collect::<Vec<_>>();
        assert_eq!(chebyshev(ChebyshevKind::T, 0), r(&[1]));
        assert_eq!(chebyshev(ChebyshevKind::T, 1), r(&[0, 1]));
        assert_eq!(chebyshev(ChebyshevKind::T, 2), r(&[-1, 0, 2]));
        assert_eq!(chebyshev(ChebyshevKind::U, 0), r(&[1]));
        assert_eq!(chebyshev(ChebyshevKind::U, 2), r(&[-1, 0, 4]));
    }

    #[test]
    fn positive_modes_are_rejected() {
        assert!(ell0_rs(0).is_err());
        assert!(ell0_rs(1).is_err());
    }

    #[test]
    fn euler_operator_is_fuchsian() {
        let s = s_symbol();
        let sv = RationalFunction::var(s);
        let ode = OdeOperator::from_raw(s, vec![RationalFunction::zero(), sv.clone(), &sv * &sv]).unwrap();
        let rep = fuchsian_check(&ode);
        assert!(rep.is_fuchsian, "{:?}", rep.failures);
        assert_eq!(rep.singular_points, vec![SingularPoint::Finite(RationalFunction::zero()), SingularPoint::Infinity]);
        let nu = RationalFunction::var(nu_symbol());
        assert_eq!(rep.indicial[0].1, &nu * &nu);
        assert_eq!(rep.indicial[1].1, &nu * &nu);
    }

    #[test]
    fn irregular_point_is_flagged() {
        // s^3 ∂ + 1 has an irregular singularity at 0
        let s = s_symbol();
        let sv = RationalFunction::var(s);
        let ode = OdeOperator::from_raw(s, vec![RationalFunction::one(), sv.pow(3).unwrap()]).unwrap();
        assert!(!fuchsian_check(&ode).is_fuchsian);
    }
}
