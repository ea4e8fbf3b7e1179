//! Linear differential operators with rational-function coefficients in
//! normal form (coefficients to the left of all derivatives).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::arith::{Rational, RationalFunction, Symbol};

/// `Σ_α c_α ∂^α` over a fixed list of variables; `α` is a multi-index
/// aligned with `vars`. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq)]
pub struct MultiDiffOp {
    vars: Vec<Symbol>,
    terms: BTreeMap<Vec<u32>, RationalFunction>,
}

/// The two-variable `(r, s)` operators of the bulk-spectator reduction.
pub type DiffOpRS = MultiDiffOp;

fn binomial(n: u32, k: u32) -> Rational {
    let mut acc = Rational::one();
    for i in 0..k {
        acc = &acc * &Rational::new((n - i) as i64, (i + 1) as i64).unwrap();
    }
    acc
}

impl MultiDiffOp {
    pub fn zero(vars: &[Symbol]) -> Self {
        MultiDiffOp { vars: vars.to_vec(), terms: BTreeMap::new() }
    }

    /// Multiplication by `f`.
    pub fn multiplication(vars: &[Symbol], f: RationalFunction) -> Self {
        let mut op = Self::zero(vars);
        op.add_term(vec![0; vars.len()], &f);
        op
    }

    pub fn identity(vars: &[Symbol]) -> Self {
        Self::multiplication(vars, RationalFunction::one())
    }

    /// `f ∂_v`.
    pub fn first_order(vars: &[Symbol], v: Symbol, f: RationalFunction) -> Self {
        let mut op = Self::zero(vars);
        let mut idx = vec![0; vars.len()];
        idx[op.position(v)] = 1;
        op.add_term(idx, &f);
        op
    }

    fn position(&self, v: Symbol) -> usize {
        self.vars.iter().position(|&w| w == v).unwrap_or_else(|| panic!("{} is not an operator variable", v.name()))
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, RationalFunction> {
        &self.terms
    }

    pub fn coefficient(&self, alpha: &[u32]) -> RationalFunction {
        self.terms.get(alpha).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|a| a.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, c: &RationalFunction) {
        debug_assert_eq!(alpha.len(), self.vars.len());
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(alpha) {
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

    /// Left multiplication by a function.
    pub fn scale(&self, f: &RationalFunction) -> Self {
        let mut out = Self::zero(&self.vars);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), &(c * f));
        }
        out
    }

    /// `self ∘ other`, using `∂^α ∘ b = Σ_{γ ≤ α} C(α, γ) (∂^{α-γ} b) ∂^γ`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.vars, other.vars, "operators over different variables");
        let mut out = Self::zero(&self.vars);
        let mut derivs: HashMap<(Vec<u32>, Vec<u32>), RationalFunction> = HashMap::new();
        for (alpha, a) in &self.terms {
            for (beta, b) in &other.terms {
                for gamma in sub_indices(alpha) {
                    let diff: Vec<u32> = alpha.iter().zip(&gamma).map(|(x, y)| x - y).collect();
                    let db = derivs
                        .entry((beta.clone(), diff.clone()))
                        .or_insert_with(|| self.differentiate(b, &diff))
                        .clone();
                    if db.is_zero() {
                        continue;
                    }
                    let mut k = Rational::one();
                    for (&x, &y) in alpha.iter().zip(&gamma) {
                        k = &k * &binomial(x, y);
                    }
                    let idx: Vec<u32> = gamma.iter().zip(beta).map(|(x, y)| x + y).collect();
                    out.add_term(idx, &(a * &db).scale(&k));
                }
            }
        }
        out
    }

    fn differentiate(&self, f: &RationalFunction, alpha: &[u32]) -> RationalFunction {
        let mut g = f.clone();
        for (v, &k) in self.vars.iter().zip(alpha) {
            for _ in 0..k {
                if g.is_zero() {
                    return g;
                }
                g = g.derivative(*v);
            }
        }
        g
    }

    /// Applies the operator to a function.
    pub fn apply(&self, f: &RationalFunction) -> RationalFunction {
        let mut acc = RationalFunction::zero();
        for (a, c) in &self.terms {
            acc = &acc + &(c * &self.differentiate(f, a));
        }
        acc
    }

    /// Substitutes rational functions for symbols in the coefficients.
    pub fn map_coefficients(
        &self,
        mut f: impl FnMut(&RationalFunction) -> Result<RationalFunction, crate::arith::ArithError>,
    ) -> Result<Self, crate::arith::ArithError> {
        let mut out = Self::zero(&self.vars);
        for (a, c) in &self.terms {
            out.add_term(a.clone(), &f(c)?);
        }
        Ok(out)
    }
}

impl std::ops::Add for &MultiDiffOp {
    type Output = MultiDiffOp;
    fn add(self, rhs: &MultiDiffOp) -> MultiDiffOp {
        assert_eq!(self.vars, rhs.vars, "operators over different variables");
        let mut out = self.clone();
        for (a, c) in &rhs.terms {
            out.add_term(a.clone(), c);
        }
        out
    }
}

impl std::ops::Sub for &MultiDiffOp {
    type Output = MultiDiffOp;
    fn sub(self, rhs: &MultiDiffOp) -> MultiDiffOp {
        self + &rhs.scale(&RationalFunction::from_int(-1))
    }
}

/// All multi-indices `γ ≤ α` componentwise.
fn sub_indices(alpha: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(alpha.len())];
    for &a in alpha {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=a).map(move |g| {
                    let mut q = p.clone();
                    q.push(g);
                    q
                })
            })
            .collect();
    }
    out
}

impl fmt::Display for MultiDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (a, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})")?;
            for (v, &e) in self.vars.iter().zip(a) {
                match e {
                    0 => {}
                    1 => write!(f, " d_{}", v.name())?,
                    _ => write!(f, " d_{}^{e}", v.name())?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
