use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Monomial, Rational, Symbol};

/// Sparse multivariate polynomial over the rationals.
///
/// Terms are kept in a map ordered by the graded lexicographic monomial order;
/// zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Self { terms }
    }

    pub fn var(sym: Symbol) -> Self {
        Self::monomial(Monomial::var(sym), Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, &c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: &Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().is_one())
    }

    /// The value of a constant polynomial (zero included).
    pub fn constant_value(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coefficient(&self) -> Rational {
        self.leading_term().map(|t| t.1.clone()).unwrap_or_default()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, sym: Symbol) -> u32 {
        self.terms.keys().map(|m| m.exponent(sym)).max().unwrap_or(0)
    }

    pub fn min_degree_in(&self, sym: Symbol) -> u32 {
        self.terms.keys().map(|m| m.exponent(sym)).min().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        self.terms.keys().flat_map(|m| m.symbols()).collect()
    }

    /// Gcd of all monomials appearing in the polynomial.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        it.fold(first.clone(), |g, m| g.gcd(m))
    }

    pub fn scale(&self, c: &Rational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(k, x)| (k.mul(m), x.clone())).collect() }
    }

    pub fn div_monomial(&self, m: &Monomial) -> Option<MultiPoly> {
        let mut terms = BTreeMap::new();
        for (k, x) in &self.terms {
            terms.insert(k.div(m)?, x.clone());
        }
        Some(MultiPoly { terms })
    }

    /// Divides through by the leading coefficient.
    pub fn monic(&self) -> MultiPoly {
        match self.leading_term() {
            None => MultiPoly::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => self.scale(&c.recip().expect("nonzero leading coefficient")),
        }
    }

    /// Rational content: the positive rational `c` such that `self / c` has
    /// coprime integer coefficients.
    pub fn content(&self) -> Rational {
        let mut it = self.terms.values();
        let Some(first) = it.next() else {
            return Rational::one();
        };
        it.fold(first.abs(), |g, c| g.gcd(c))
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut result = MultiPoly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn derivative(&self, sym: Symbol) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(sym);
            if e > 0 {
                out.add_term(rest.mul(&Monomial::var_pow(sym, e - 1)), &(c * Rational::from(e as i64)));
            }
        }
        out
    }

    /// Coefficients with respect to `sym`: entry `i` multiplies `sym^i`.
    pub fn coeffs_in(&self, sym: Symbol) -> Vec<MultiPoly> {
        let deg = self.degree_in(sym) as usize;
        let mut out = vec![MultiPoly::zero(); if self.is_zero() { 0 } else { deg + 1 }];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(sym);
            out[e as usize].terms.insert(rest, c.clone());
        }
        out
    }

    pub fn from_coeffs_in(sym: Symbol, coeffs: &[MultiPoly]) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (i, c) in coeffs.iter().enumerate() {
            let xi = Monomial::var_pow(sym, i as u32);
            for (m, x) in &c.terms {
                out.terms.insert(m.mul(&xi), x.clone());
            }
        }
        out
    }

    /// Substitutes polynomials for some indeterminates.
    pub fn substitute(&self, bindings: &HashMap<Symbol, MultiPoly>) -> MultiPoly {
        if bindings.is_empty() {
            return self.clone();
        }
        let mut powers: HashMap<(Symbol, u32), MultiPoly> = HashMap::new();
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let mut kept = Monomial::one();
            let mut factor = MultiPoly::constant(c.clone());
            for &(s, e) in m.iter() {
                match bindings.get(&s) {
                    Some(p) => {
                        let pe = powers.entry((s, e)).or_insert_with(|| p.pow(e));
                        factor = &factor * &*pe;
                    }
                    None => kept = kept.mul(&Monomial::var_pow(s, e)),
                }
            }
            out = &out + &factor.mul_monomial(&kept);
        }
        out
    }

    /// Evaluates with every indeterminate bound; `None` if some symbol is
    /// unbound.
    pub fn evaluate(&self, point: &HashMap<Symbol, Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(s, e) in m.iter() {
                t *= &point.get(&s)?.pow(e as i32);
            }
            acc += &t;
        }
        Some(acc)
    }

    pub fn evaluate_f64(&self, point: &HashMap<Symbol, f64>) -> Option<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.to_f64();
            for &(s, e) in m.iter() {
                t *= point.get(&s)?.powi(e as i32);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Dense coefficient vector (lowest degree first) when the polynomial
    /// involves at most the single indeterminate `sym`.
    pub fn to_dense(&self, sym: Symbol) -> Option<Vec<Rational>> {
        if self.is_zero() {
            return Some(Vec::new());
        }
        let deg = self.degree_in(sym) as usize;
        let mut out = vec![Rational::zero(); deg + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(sym);
            if !rest.is_one() {
                return None;
            }
            out[e as usize] = c.clone();
        }
        Some(out)
    }

    pub fn from_dense(sym: Symbol, coeffs: &[Rational]) -> MultiPoly {
        MultiPoly::from_terms(
            coeffs.iter().enumerate().map(|(i, c)| (Monomial::var_pow(sym, i as u32), c.clone())),
        )
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &MultiPoly) -> Option<MultiPoly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.constant_value() {
            return Some(self.scale(&c.recip().ok()?));
        }
        if d.terms.len() == 1 {
            let (m, c) = d.leading_term()?;
            let inv = c.recip().ok()?;
            return self.div_monomial(m).map(|q| q.scale(&inv));
        }
        let (dm, dc) = d.leading_term()?;
        let (dm, dc_inv) = (dm.clone(), dc.recip().ok()?);
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero();
        while let Some((rm, rc)) = rem.leading_term() {
            let qm = rm.div(&dm)?;
            let qc = rc * &dc_inv;
            for (m, c) in &d.terms {
                rem.add_term(m.mul(&qm), &(-(c * &qc)));
            }
            quot.terms.insert(qm, qc);
        }
        Some(quot)
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let (big, small) = if self.terms.len() >= rhs.terms.len() { (self, rhs) } else { (rhs, self) };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), &-c);
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        if self.is_zero() || rhs.is_zero() {
            return MultiPoly::zero();
        }
        if let Some(c) = self.constant_value() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.constant_value() {
            return self.scale(&c);
        }
        let mut acc: HashMap<Monomial, Rational> = HashMap::with_capacity(self.terms.len() * rhs.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let prod = ca * cb;
                acc.entry(ma.mul(mb)).and_modify(|x| *x += &prod).or_insert(prod);
            }
        }
        MultiPoly { terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Add for MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: MultiPoly) -> MultiPoly {
        &self + &rhs
    }
}

impl Sub for MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: MultiPoly) -> MultiPoly {
        &self - &rhs
    }
}

impl Mul for MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: MultiPoly) -> MultiPoly {
        &self * &rhs
    }
}

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

/// Highest-order term first, e.g. `3*tau^2 - 1/2*tau + 1`.
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Canonical JSON form: `[[coeff, {sym: exp, ...}], ...]`, leading term first.
impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (m, c) in self.terms.iter().rev() {
            let exps: BTreeMap<&str, u32> = m.iter().map(|&(s, e)| (s.name(), e)).collect();
            seq.serialize_element(&(c, exps))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<(Rational, BTreeMap<String, u32>)>::deserialize(deserializer)?;
        Ok(MultiPoly::from_terms(raw.into_iter().map(|(c, exps)| {
            (Monomial::from_pairs(exps.iter().map(|(s, &e)| (Symbol::new(s), e))), c)
        })))
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> MultiPoly {
        MultiPoly::var(Symbol::new("x"))
    }
    fn y() -> MultiPoly {
        MultiPoly::var(Symbol::new("y"))
    }

    #[test]
    fn arithmetic_cancels_zero_terms() {
        let p = &x() + &y();
        let q = &p - &x();
        assert_eq!(q, y());
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn exact_division() {
        let p = &(&x() + &y()) * &(&x() - &y());
        let q = p.div_exact(&(&x() - &y())).unwrap();
        assert_eq!(q, &x() + &y());
        assert!(p.div_exact(&(&x() + &MultiPoly::one())).is_none());
    }

    #[test]
    fn display_orders_terms() {
        let p = &(&x().pow(2) * &MultiPoly::constant(Rational::from(3))) - &y();
        assert_eq!(p.to_string(), "3*x^2 - y");
    }

    #[test]
    fn substitution_composes() {
        let sx = Symbol::new("x");
        let p = &x().pow(2) + &x();
        let mut b = HashMap::new();
        b.insert(sx, &y() + &MultiPoly::one());
        let got = p.substitute(&b);
        let yy = &y() + &MultiPoly::one();
        assert_eq!(got, &yy.pow(2) + &yy);
    }
}
