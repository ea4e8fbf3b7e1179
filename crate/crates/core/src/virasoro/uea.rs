//! Elements of U(Vir⁻) with rational-function coefficients.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::basis::{left_mul_generator, monomial_product, StandardMonomial};
use super::{tau_symbol, VirasoroError};
use crate::arith::{Rational, RationalFunction};

/// A finite combination of standard monomials; zero coefficients are never
/// stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct UEAElement {
    terms: BTreeMap<StandardMonomial, RationalFunction>,
}

impl UEAElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::monomial(StandardMonomial::identity(), RationalFunction::one())
    }

    /// `L_{-i}` for `i ≥ 1`.
    pub fn generator(i: u32) -> Self {
        Self::monomial(StandardMonomial::generator(i), RationalFunction::one())
    }

    pub fn monomial(m: StandardMonomial, c: RationalFunction) -> Self {
        let mut e = Self::zero();
        e.add_term(m, &c);
        e
    }

    /// Product of generators `L_{-n_1} … L_{-n_k}` in arbitrary order,
    /// rewritten into the standard basis.
    pub fn word(indices: &[u32]) -> Result<Self, VirasoroError> {
        let mut out = Self::identity();
        for &i in indices.iter().rev() {
            if i == 0 {
                return Err(VirasoroError::NonNegativeMode(0));
            }
            out = out.left_mul_generator(i);
        }
        Ok(out)
    }

    /// Word in modes `L_m` with arbitrary signs; only negative modes belong
    /// to U(Vir⁻).
    pub fn from_modes(modes: &[i32]) -> Result<Self, VirasoroError> {
        if let Some(&m) = modes.iter().find(|&&m| m >= 0) {
            return Err(VirasoroError::NonNegativeMode(m));
        }
        let idx: Vec<u32> = modes.iter().map(|m| m.unsigned_abs()).collect();
        Self::word(&idx)
    }

    pub fn add_term(&mut self, m: StandardMonomial, c: &RationalFunction) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<StandardMonomial, RationalFunction> {
        &self.terms
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (StandardMonomial, RationalFunction)>) -> Self {
        let mut e = Self::zero();
        for (m, c) in terms {
            e.add_term(m, &c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &StandardMonomial) -> RationalFunction {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// The set of levels carrying nonzero terms.
    pub fn levels(&self) -> BTreeSet<u32> {
        self.terms.keys().map(|m| m.level()).collect()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.levels().len() <= 1
    }

    pub fn scale(&self, c: &RationalFunction) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn left_mul_generator(&self, i: u32) -> Self {
        let mut acc: HashMap<StandardMonomial, RationalFunction> = HashMap::new();
        for (m, c) in &self.terms {
            for (u, k) in left_mul_generator(i, m).iter() {
                let v = c.scale(&Rational::from(*k));
                let e = acc.entry(u.clone()).or_default();
                *e = &*e + &v;
            }
        }
        Self::from_terms(acc)
    }

    /// Applies `f` to every coefficient.
    pub fn map_coefficients(
        &self,
        mut f: impl FnMut(&RationalFunction) -> Result<RationalFunction, crate::arith::ArithError>,
    ) -> Result<Self, crate::arith::ArithError> {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &f(c)?);
        }
        Ok(out)
    }

    /// Substitutes a rational value for τ in every coefficient.
    pub fn specialize_tau(&self, tau: &Rational) -> Result<Self, crate::arith::ArithError> {
        let mut b = HashMap::new();
        b.insert(tau_symbol(), RationalFunction::constant(tau.clone()));
        self.map_coefficients(|c| c.substitute(&b))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| serde_json::json!([m.indices(), c.to_json()]))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, VirasoroError> {
        let bad = |msg: &str| VirasoroError::Format(msg.to_string());
        let arr = v.as_array().ok_or_else(|| bad("expected an array of terms"))?;
        let mut out = Self::zero();
        for t in arr {
            let pair = t.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("expected [indices, coefficient]"))?;
            let idx: Vec<u32> = serde_json::from_value(pair[0].clone()).map_err(|e| bad(&e.to_string()))?;
            let m = StandardMonomial::new(&idx).ok_or_else(|| bad("indices not in standard order"))?;
            let c = RationalFunction::from_json(&pair[1]).map_err(|e| bad(&e.to_string()))?;
            out.add_term(m, &c);
        }
        Ok(out)
    }

    /// LaTeX rendering, e.g. `L_{-1}^{2} - \tau L_{-2}`.
    pub fn to_latex(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let (neg, body) = latex_coefficient(c);
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono = latex_monomial(m);
            match (body.as_str(), mono.as_str()) {
                ("1", "") => out.push('1'),
                ("1", mono) => out.push_str(mono),
                (body, "") => out.push_str(body),
                (body, mono) => {
                    out.push_str(body);
                    out.push(' ');
                    out.push_str(mono);
                }
            }
        }
        out
    }
}

fn latex_monomial(m: &StandardMonomial) -> String {
    let idx = m.indices();
    let mut parts = Vec::new();
    let mut k = 0;
    while k < idx.len() {
        let i = idx[k];
        let run = idx[k..].iter().take_while(|&&j| j == i).count();
        parts.push(if run == 1 { format!("L_{{-{i}}}") } else { format!("L_{{-{i}}}^{{{run}}}") });
        k += run;
    }
    parts.join(" ")
}

/// Sign and body of a coefficient; the body is `1` for ±1.
fn latex_coefficient(c: &RationalFunction) -> (bool, String) {
    if let Some(q) = c.constant_value() {
        let neg = q.is_negative();
        let a = q.abs();
        return (neg, latex_rational(&a));
    }
    if c.numer().num_terms() == 1 && c.denom().num_terms() == 1 {
        let lc = c.numer().leading_coefficient();
        if lc.is_negative() {
            return (true, latex_poly_fraction(&(-c)));
        }
    }
    (false, latex_poly_fraction(c))
}

fn latex_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", q.numer(), q.denom())
    }
}

fn latex_poly(p: &crate::arith::MultiPoly) -> String {
    p.to_string().replace('*', " ").replace("tau", "\\tau ").replace("\\tau ^", "\\tau^").trim_end().to_string()
}

fn latex_poly_fraction(c: &RationalFunction) -> String {
    let num = latex_poly(c.numer());
    if c.is_polynomial() {
        if c.numer().num_terms() > 1 {
            return format!("\\left({num}\\right)");
        }
        return num;
    }
    format!("\\frac{{{num}}}{{{}}}", latex_poly(c.denom()))
}

/// `a · b` in the standard basis.
pub fn uea_multiply(a: &UEAElement, b: &UEAElement) -> UEAElement {
    let mut acc: HashMap<StandardMonomial, RationalFunction> = HashMap::new();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            let prod = ca * cb;
            for (u, k) in monomial_product(ma, mb) {
                let v = prod.scale(&Rational::from(k));
                let e = acc.entry(u).or_default();
                *e = &*e + &v;
            }
        }
    }
    UEAElement::from_terms(acc)
}

impl std::ops::Add for &UEAElement {
    type Output = UEAElement;
    fn add(self, rhs: &UEAElement) -> UEAElement {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl std::ops::Sub for &UEAElement {
    type Output = UEAElement;
    fn sub(self, rhs: &UEAElement) -> UEAElement {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), &-c);
        }
        out
    }
}

impl std::ops::Mul for &UEAElement {
    type Output = UEAElement;
    fn mul(self, rhs: &UEAElement) -> UEAElement {
        uea_multiply(self, rhs)
    }
}

impl fmt::Display for UEAElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if c.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "({c}) {m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for UEAElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
