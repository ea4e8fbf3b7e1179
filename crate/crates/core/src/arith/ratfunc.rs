use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{gcd, ArithError, Monomial, MultiPoly, Rational, Symbol};

/// Quotient of coprime polynomials, normalized so that the denominator has
/// leading coefficient 1. Equal values have identical representations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: MultiPoly,
    den: MultiPoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn rf_arith(a: &RationalFunction, b: &RationalFunction, op: ArithOp) -> Result<RationalFunction, ArithError> {
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.checked_div(b)?,
    })
}

pub fn rf_substitute(
    a: &RationalFunction,
    bindings: &HashMap<Symbol, RationalFunction>,
) -> Result<RationalFunction, ArithError> {
    a.substitute(bindings)
}

/// Partial derivative by symbol name; the name must denote a known symbol.
pub fn rf_derivative(a: &RationalFunction, symbol: &str) -> Result<RationalFunction, ArithError> {
    let sym = Symbol::lookup(symbol).ok_or_else(|| ArithError::UnknownSymbol(symbol.to_string()))?;
    Ok(a.derivative(sym))
}

impl Default for RationalFunction {
    fn default() -> Self {
        Self::zero()
    }
}

impl RationalFunction {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self, ArithError> {
        if den.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    /// Reduces a fraction with nonzero denominator to canonical form.
    fn normalized(num: MultiPoly, den: MultiPoly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if let Some(d) = den.constant_value() {
            return Self { num: num.scale(&d.recip().expect("nonzero denominator")), den: MultiPoly::one() };
        }
        let g = gcd(&num, &den);
        if g.is_one() {
            Self::with_monic_den(num, den)
        } else {
            Self::with_monic_den(num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        }
    }

    /// Scales a coprime pair so the denominator is monic.
    fn with_monic_den(num: MultiPoly, den: MultiPoly) -> Self {
        let lc = den.leading_coefficient();
        if lc.is_one() {
            return Self { num, den };
        }
        let inv = lc.recip().expect("nonzero denominator");
        if den.is_constant() {
            return Self { num: num.scale(&inv), den: MultiPoly::one() };
        }
        Self { num: num.scale(&inv), den: den.scale(&inv) }
    }

    pub fn zero() -> Self {
        Self { num: MultiPoly::zero(), den: MultiPoly::one() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self { num: MultiPoly::constant(c), den: MultiPoly::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(Rational::from(n))
    }

    pub fn var(sym: Symbol) -> Self {
        Self { num: MultiPoly::var(sym), den: MultiPoly::one() }
    }

    pub fn var_named(name: &str) -> Self {
        Self::var(Symbol::new(name))
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        Self { num: p, den: MultiPoly::one() }
    }

    pub fn numer(&self) -> &MultiPoly {
        &self.num
    }

    pub fn denom(&self) -> &MultiPoly {
        &self.den
    }

    pub fn into_parts(self) -> (MultiPoly, MultiPoly) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.den.is_one() && self.num.is_constant()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut v = self.num.variables();
        v.extend(self.den.variables());
        v
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn recip(&self) -> Result<Self, ArithError> {
        if self.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(Self::with_monic_den(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, ArithError> {
        Ok(self * &other.recip()?)
    }

    /// Integer power; negative exponents require a nonzero base.
    pub fn pow(&self, k: i32) -> Result<Self, ArithError> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let e = k.unsigned_abs();
        Ok(Self { num: base.num.pow(e), den: base.den.pow(e) })
    }

    /// Simultaneous substitution of rational functions for symbols.
    pub fn substitute(&self, bindings: &HashMap<Symbol, RationalFunction>) -> Result<Self, ArithError> {
        let relevant: HashMap<Symbol, &RationalFunction> =
            bindings.iter().filter(|(s, _)| self.variables().contains(s)).map(|(s, v)| (*s, v)).collect();
        if relevant.is_empty() {
            return Ok(self.clone());
        }
        let num = substitute_poly(&self.num, &relevant);
        let den = substitute_poly(&self.den, &relevant);
        if den.is_zero() {
            return Err(ArithError::ZeroDenominator);
        }
        Ok(&num / &den)
    }

    pub fn derivative(&self, sym: Symbol) -> Self {
        let dn = self.num.derivative(sym);
        let dd = self.den.derivative(sym);
        if dd.is_zero() {
            return Self::normalized(dn, self.den.clone());
        }
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        Self::normalized(num, self.den.pow(2))
    }

    pub fn evaluate(&self, point: &HashMap<Symbol, Rational>) -> Result<Rational, ArithError> {
        let unbound = || {
            let missing = self.variables().into_iter().find(|s| !point.contains_key(s));
            ArithError::UnboundSymbol(missing.map_or_else(String::new, |s| s.to_string()))
        };
        let n = self.num.evaluate(point).ok_or_else(unbound)?;
        let d = self.den.evaluate(point).ok_or_else(unbound)?;
        n.checked_div(&d)
    }

    /// Floating-point evaluation; `None` if a symbol is unbound.
    pub fn evaluate_f64(&self, point: &HashMap<Symbol, f64>) -> Option<f64> {
        Some(self.num.evaluate_f64(point)? / self.den.evaluate_f64(point)?)
    }

    /// Evaluates a function of one indeterminate at a rational point.
    pub fn eval_at(&self, sym: Symbol, x: &Rational) -> Result<Rational, ArithError> {
        let mut p = HashMap::new();
        p.insert(sym, x.clone());
        self.evaluate(&p)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("rational functions serialize")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, ArithError> {
        Self::deserialize(v).map_err(|e| ArithError::Format(e.to_string()))
    }
}

fn substitute_poly(p: &MultiPoly, bindings: &HashMap<Symbol, &RationalFunction>) -> RationalFunction {
    let mut powers: HashMap<(Symbol, u32), RationalFunction> = HashMap::new();
    let mut acc = RationalFunction::zero();
    for (m, c) in p.terms() {
        let mut kept = Monomial::one();
        let mut term = RationalFunction::constant(c.clone());
        for &(s, e) in m.iter() {
            match bindings.get(&s) {
                Some(v) => {
                    let pe = powers
                        .entry((s, e))
                        .or_insert_with(|| v.pow(e as i32).expect("nonnegative power"));
                    term = &term * &*pe;
                }
                None => kept = kept.mul(&Monomial::var_pow(s, e)),
            }
        }
        if !kept.is_one() {
            term = &term * &RationalFunction::from_poly(MultiPoly::monomial(kept, Rational::one()));
        }
        acc = &acc + &term;
    }
    acc
}

impl From<Rational> for RationalFunction {
    fn from(c: Rational) -> Self {
        Self::constant(c)
    }
}

impl From<i64> for RationalFunction {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl From<MultiPoly> for RationalFunction {
    fn from(p: MultiPoly) -> Self {
        Self::from_poly(p)
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let num = &self.num + &rhs.num;
            if self.den.is_one() {
                return RationalFunction { num, den: MultiPoly::one() };
            }
            return RationalFunction::normalized(num, self.den.clone());
        }
        if self.den.is_one() {
            let num = &(&self.num * &rhs.den) + &rhs.num;
            return RationalFunction { num, den: rhs.den.clone() };
        }
        if rhs.den.is_one() {
            let num = &self.num + &(&rhs.num * &self.den);
            return RationalFunction { num, den: self.den.clone() };
        }
        // With g = gcd(b, d): a/b + c/d = (a d' + c b') / (b' d' g), and only
        // factors of g can cancel.
        let g = gcd(&self.den, &rhs.den);
        if g.is_one() {
            let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
            let den = &self.den * &rhs.den;
            return RationalFunction::with_monic_den(num, den);
        }
        let b1 = self.den.div_exact(&g).expect("gcd divides");
        let d1 = rhs.den.div_exact(&g).expect("gcd divides");
        let t = &(&self.num * &d1) + &(&rhs.num * &b1);
        if t.is_zero() {
            return RationalFunction::zero();
        }
        let h = gcd(&t, &g);
        let (t, g) = if h.is_one() {
            (t, g)
        } else {
            (t.div_exact(&h).expect("gcd divides"), g.div_exact(&h).expect("gcd divides"))
        };
        RationalFunction::with_monic_den(t, &(&b1 * &d1) * &g)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        if let Some(c) = self.constant_value() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.constant_value() {
            return self.scale(&c);
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RationalFunction { num: &self.num * &rhs.num, den: MultiPoly::one() };
        }
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let q = |p: &MultiPoly, g: &MultiPoly| if g.is_one() { p.clone() } else { p.div_exact(g).expect("gcd divides") };
        let num = &q(&self.num, &g1) * &q(&rhs.num, &g2);
        let den = &q(&self.den, &g2) * &q(&rhs.den, &g1);
        RationalFunction::with_monic_den(num, den)
    }
}

/// Panics on a zero divisor; use `checked_div` on untrusted input.
impl Div for &RationalFunction {
    type Output = RationalFunction;
    fn div(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_div(rhs).expect("division by zero rational function")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        -&self
    }
}

macro_rules! owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for RationalFunction {
            type Output = RationalFunction;
            fn $method(self, rhs: RationalFunction) -> RationalFunction {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&RationalFunction> for RationalFunction {
            type Output = RationalFunction;
            fn $method(self, rhs: &RationalFunction) -> RationalFunction {
                (&self).$method(rhs)
            }
        }
    };
}

owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);

/// `p / q` division of polynomials into a normalized fraction; panics if
/// `q` is zero.
impl Div for &MultiPoly {
    type Output = RationalFunction;
    fn div(self, rhs: &MultiPoly) -> RationalFunction {
        RationalFunction::new(self.clone(), rhs.clone()).expect("division by zero polynomial")
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        if self.num.num_terms() > 1 {
            write!(f, "({})", self.num)?;
        } else {
            write!(f, "{}", self.num)?;
        }
        if self.den.num_terms() > 1 || self.den.leading_term().is_some_and(|(m, _)| m.iter().count() > 1) {
            write!(f, "/({})", self.den)
        } else {
            write!(f, "/{}", self.den)
        }
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for RationalFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("num", &self.num)?;
        map.serialize_entry("den", &self.den)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for RationalFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            num: MultiPoly,
            den: MultiPoly,
        }
        let raw = Raw::deserialize(deserializer)?;
        RationalFunction::new(raw.num, raw.den).map_err(serde::de::Error::custom)
    }
}
