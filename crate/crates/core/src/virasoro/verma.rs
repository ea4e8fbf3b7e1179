//! Action of Virasoro modes on Verma modules.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::basis::{left_mul_generator, StandardMonomial};
use super::uea::UEAElement;
use crate::arith::{Rational, RationalFunction};

/// `a + b·h + d·c`, the shape of every structure constant of a mode acting
/// on a Verma module.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Affine {
    pub a: Rational,
    pub b: Rational,
    pub d: Rational,
}

impl Affine {
    fn constant(a: Rational) -> Self {
        Affine { a, ..Default::default() }
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero() && self.d.is_zero()
    }

    fn add_scaled(&mut self, other: &Affine, k: &Rational) {
        self.a += &(&other.a * k);
        self.b += &(&other.b * k);
        self.d += &(&other.d * k);
    }

    pub fn eval(&self, h: &Rational, c: &Rational) -> Rational {
        &self.a + &(&(&self.b * h) + &(&self.d * c))
    }

    pub fn eval_rf(&self, h: &RationalFunction, c: &RationalFunction) -> RationalFunction {
        let mut out = RationalFunction::constant(self.a.clone());
        if !self.b.is_zero() {
            out = &out + &h.scale(&self.b);
        }
        if !self.d.is_zero() {
            out = &out + &c.scale(&self.d);
        }
        out
    }
}

/// Combination of standard monomials with affine coefficients.
pub type AffineCombination = Vec<(StandardMonomial, Affine)>;

thread_local! {
    static ACTION: RefCell<HashMap<(u32, StandardMonomial), Rc<AffineCombination>>> = RefCell::new(HashMap::new());
}

fn accumulate(acc: &mut BTreeMap<StandardMonomial, Affine>, m: &StandardMonomial, v: &Affine, k: &Rational) {
    acc.entry(m.clone()).or_default().add_scaled(v, k);
}

/// `L_m (mono · v)` for `m > 0` in a Verma module with symbolic `h`, `c`.
pub fn positive_mode_action(m: u32, mono: &StandardMonomial) -> Rc<AffineCombination> {
    assert!(m > 0);
    if mono.is_identity() || m > mono.level() {
        return Rc::new(Vec::new());
    }
    let key = (m, mono.clone());
    if let Some(hit) = ACTION.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    // L_m L_{-i} R v = L_{-i} (L_m R v) + (m+i) L_{m-i} R v + δ_{m,i} (m³-m)/12 c R v
    let i = mono.indices()[0];
    let rest = StandardMonomial::new(&mono.indices()[1..]).expect("tail of a standard monomial");
    let mut acc: BTreeMap<StandardMonomial, Affine> = BTreeMap::new();
    for (t, coef) in positive_mode_action(m, &rest).iter() {
        for (u, k) in left_mul_generator(i, t).iter() {
            accumulate(&mut acc, u, coef, &Rational::from(*k));
        }
    }
    let mi = Rational::from((m + i) as i64);
    match m.cmp(&i) {
        std::cmp::Ordering::Greater => {
            for (t, coef) in positive_mode_action(m - i, &rest).iter() {
                accumulate(&mut acc, t, coef, &mi);
            }
        }
        std::cmp::Ordering::Equal => {
            let level = Affine { a: Rational::from(rest.level() as i64), b: Rational::one(), d: Rational::zero() };
            accumulate(&mut acc, &rest, &level, &mi);
            let m = m as i64;
            let central = Affine { d: Rational::new(m * m * m - m, 12).unwrap(), ..Default::default() };
            accumulate(&mut acc, &rest, &central, &Rational::one());
        }
        std::cmp::Ordering::Less => {
            for (u, k) in left_mul_generator(i - m, &rest).iter() {
                accumulate(&mut acc, u, &Affine::constant(Rational::one()), &(&mi * &Rational::from(*k)));
            }
        }
    }
    let out: AffineCombination = acc.into_iter().filter(|(_, v)| !v.is_zero()).collect();
    let out = Rc::new(out);
    ACTION.with(|c| c.borrow_mut().insert(key, out.clone()));
    out
}

/// A vector `Σ coeff · (monomial · v)` of the Verma module `M(c, h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VermaVector {
    pub central_charge: RationalFunction,
    pub highest_weight: RationalFunction,
    pub terms: BTreeMap<StandardMonomial, RationalFunction>,
}

impl VermaVector {
    /// `a · v` for the highest-weight vector `v` of `M(c, h)`.
    pub fn from_element(a: &UEAElement, c: RationalFunction, h: RationalFunction) -> Self {
        VermaVector { central_charge: c, highest_weight: h, terms: a.terms().clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn levels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().map(|m| m.level()).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// The action of `L_m` on a Verma-module vector, for any integer `m`.
pub fn verma_action(m: i32, w: &VermaVector) -> VermaVector {
    let mut out: BTreeMap<StandardMonomial, RationalFunction> = BTreeMap::new();
    let mut add = |k: StandardMonomial, v: RationalFunction| {
        if v.is_zero() {
            return;
        }
        let e = out.entry(k).or_default();
        *e = &*e + &v;
    };
    match m.cmp(&0) {
        std::cmp::Ordering::Greater => {
            for (mono, coef) in &w.terms {
                let action = positive_mode_action(m as u32, mono);
                if action.is_empty() {
                    continue;
                }
                let ch = coef * &w.highest_weight;
                let cc = coef * &w.central_charge;
                for (t, aff) in action.iter() {
                    let mut v = coef.scale(&aff.a);
                    if !aff.b.is_zero() {
                        v = &v + &ch.scale(&aff.b);
                    }
                    if !aff.d.is_zero() {
                        v = &v + &cc.scale(&aff.d);
                    }
                    add(t.clone(), v);
                }
            }
        }
        std::cmp::Ordering::Equal => {
            for (mono, coef) in &w.terms {
                let weight = &w.highest_weight + &RationalFunction::from_int(mono.level() as i64);
                add(mono.clone(), coef * &weight);
            }
        }
        std::cmp::Ordering::Less => {
            for (mono, coef) in &w.terms {
                for (t, k) in left_mul_generator(m.unsigned_abs(), mono).iter() {
                    add(t.clone(), coef.scale(&Rational::from(*k)));
                }
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    VermaVector { central_charge: w.central_charge.clone(), highest_weight: w.highest_weight.clone(), terms: out }
}

/// Whether `a · v` is annihilated by `L_1` and `L_2` in `M(c, h)`.
pub fn is_singular(a: &UEAElement, c: &RationalFunction, h: &RationalFunction) -> bool {
    let w = VermaVector::from_element(a, c.clone(), h.clone());
    verma_action(1, &w).is_zero() && verma_action(2, &w).is_zero()
}
