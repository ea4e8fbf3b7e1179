//! Second-order BPZ systems on the boundary of the half-plane, the product
//! solution `Z_0`, and the fused operators acting on spectator points.

use std::collections::HashMap;

use super::diffop::MultiDiffOp;
use super::BpzError;
use crate::arith::{MultiPoly, Rational, RationalFunction, Symbol};
use crate::virasoro::{kac_weight, singular_vector, tau, tau_symbol, KacLabel, StandardMonomial};

/// Variables `x_1…x_r`, `y_1…y_s`, `z_1…z_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub x: Vec<Symbol>,
    pub y: Vec<Symbol>,
    pub z: Vec<Symbol>,
}

impl Layout {
    pub fn new(r: usize, s: usize, n: usize) -> Self {
        let mk = |p: &str, k: usize| (1..=k).map(|i| Symbol::new(&format!("{p}{i}"))).collect();
        Layout { x: mk("x", r), y: mk("y", s), z: mk("z", n) }
    }

    pub fn all(&self) -> Vec<Symbol> {
        self.x.iter().chain(&self.y).chain(&self.z).copied().collect()
    }
}

/// Weight `h_k` and exponents `a_k`, `b_k` of one spectator point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectator {
    pub h: RationalFunction,
    pub a: RationalFunction,
    pub b: RationalFunction,
}

impl Spectator {
    pub fn zero() -> Self {
        Spectator { h: RationalFunction::zero(), a: RationalFunction::zero(), b: RationalFunction::zero() }
    }

    /// The solution of the exponent constraints with a given `a`:
    /// `b = -a/τ`, `h = a(a-1)/τ + a`.
    pub fn from_a(a: RationalFunction) -> Self {
        let t = tau();
        let b = -&a.checked_div(&t).expect("τ is nonzero");
        let am1 = &a - &RationalFunction::one();
        let h = &(&a * &am1).checked_div(&t).expect("τ is nonzero") + &a;
        Spectator { h, a, b }
    }

    /// Checks the three exponent equations exactly.
    pub fn check(&self, k: usize) -> Result<(), BpzError> {
        let t = tau();
        let one = RationalFunction::one();
        let eq1 = &(&self.a * &(&self.a - &one)) + &(&t * &(&self.a - &self.h));
        let eq2 = &(&self.b * &(&self.b - &one)) + &(&self.b - &self.h).checked_div(&t)?;
        let eq3 = &self.a + &(&t * &self.b);
        for (name, e) in [("a(a-1) + τ(a-h) = 0", eq1), ("b(b-1) + (b-h)/τ = 0", eq2), ("a + τb = 0", eq3)] {
            if !e.is_zero() {
                return Err(BpzError::Constraint { k: k + 1, equation: name.to_string() });
            }
        }
        Ok(())
    }
}

/// Second-order operators `D^i_{2,1}` (at `x_i`) and `D^j_{1,2}` (at `y_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct BpzSystem {
    pub layout: Layout,
    pub d21: Vec<MultiDiffOp>,
    pub d12: Vec<MultiDiffOp>,
}

fn second_order_at(
    vars: &[Symbol],
    seed: Symbol,
    prefactor: &RationalFunction,
    others: &[(Symbol, RationalFunction)],
) -> Result<MultiDiffOp, BpzError> {
    let mut idx = vec![0u32; vars.len()];
    idx[vars.iter().position(|&v| v == seed).expect("seed is a variable")] = 2;
    let mut op = MultiDiffOp::zero(vars);
    op.add_term(idx, &RationalFunction::one());
    let p = RationalFunction::var(seed);
    for (w, h) in others {
        // prefactor · (1/(w - p) ∂_w - h/(w - p)²)
        let inv = (&RationalFunction::var(*w) - &p).recip()?;
        op = &op + &MultiDiffOp::first_order(vars, *w, prefactor * &inv);
        op = &op - &MultiDiffOp::multiplication(vars, &(prefactor * h) * &(&inv * &inv));
    }
    Ok(op)
}

pub fn build_bpz_system(r: usize, s: usize, spectators: &[Spectator]) -> Result<BpzSystem, BpzError> {
    let layout = Layout::new(r, s, spectators.len());
    let vars = layout.all();
    let t = tau();
    let h21 = kac_weight(KacLabel::new(2, 1)?, &t)?;
    let h12 = kac_weight(KacLabel::new(1, 2)?, &t)?;
    let weights: Vec<(Symbol, RationalFunction)> = layout
        .x
        .iter()
        .map(|&v| (v, h21.clone()))
        .chain(layout.y.iter().map(|&v| (v, h12.clone())))
        .chain(layout.z.iter().zip(spectators).map(|(&v, sp)| (v, sp.h.clone())))
        .collect();
    let others = |seed: Symbol| weights.iter().filter(|(v, _)| *v != seed).cloned().collect::<Vec<_>>();
    let inv = t.recip()?;
    let d21 = layout.x.iter().map(|&x| second_order_at(&vars, x, &t, &others(x))).collect::<Result<_, _>>()?;
    let d12 = layout.y.iter().map(|&y| second_order_at(&vars, y, &inv, &others(y))).collect::<Result<_, _>>()?;
    Ok(BpzSystem { layout, d21, d12 })
}

/// `Π L_i^{e_i}` for affine forms `L_i` and exponents `e_i` in `Q(τ)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PowerProduct {
    factors: Vec<(MultiPoly, RationalFunction)>,
}

impl PowerProduct {
    pub fn one() -> Self {
        Self::default()
    }

    /// Multiplies by `form^exponent`, merging with an equal form.
    pub fn push(&mut self, form: MultiPoly, exponent: RationalFunction) {
        assert!(form.total_degree() <= 1, "factors must be affine");
        if exponent.is_zero() || form.is_constant() {
            return;
        }
        if let Some(pos) = self.factors.iter().position(|(f, _)| *f == form) {
            let e = &self.factors[pos].1 + &exponent;
            if e.is_zero() {
                self.factors.remove(pos);
            } else {
                self.factors[pos].1 = e;
            }
        } else {
            self.factors.push((form, exponent));
        }
    }

    pub fn factors(&self) -> &[(MultiPoly, RationalFunction)] {
        &self.factors
    }

    /// Sets the given variables to zero and drops factors that become
    /// constant, i.e. the leading coefficient as those points merge at 0.
    pub fn collapse_to_origin(&self, vars: &[Symbol]) -> PowerProduct {
        let b: HashMap<Symbol, MultiPoly> = vars.iter().map(|&v| (v, MultiPoly::zero())).collect();
        let mut out = PowerProduct::one();
        for (f, e) in &self.factors {
            out.push(f.substitute(&b), e.clone());
        }
        out
    }

    /// `∂_v log F`.
    pub fn log_derivative(&self, v: Symbol) -> RationalFunction {
        let mut acc = RationalFunction::zero();
        for (f, e) in &self.factors {
            let df = f.derivative(v);
            if df.is_zero() {
                continue;
            }
            acc = &acc + &(e * &(&RationalFunction::from_poly(df) / &RationalFunction::from_poly(f.clone())));
        }
        acc
    }

    pub fn same_factors(&self, other: &PowerProduct) -> bool {
        self.factors.len() == other.factors.len() && self.factors.iter().all(|x| other.factors.contains(x))
    }
}

/// A fraction `num / Π basis_j^{den_j}` over a shared list of irreducible
/// denominators. Sums and products never need a polynomial gcd.
#[derive(Clone)]
struct Factored {
    num: MultiPoly,
    den: Vec<u32>,
}

struct Basis {
    forms: Vec<MultiPoly>,
}

impl Basis {
    fn pad(&self, f: &mut Factored) {
        f.den.resize(self.forms.len(), 0);
    }

    /// Splits the denominator of `rf` over the basis, growing the basis
    /// with any leftover factor.
    fn import(&mut self, rf: &RationalFunction) -> Factored {
        let mut rest = rf.denom().clone();
        let mut den = vec![0u32; self.forms.len()];
        for (j, form) in self.forms.iter().enumerate() {
            while !rest.is_constant() {
                match rest.div_exact(form) {
                    Some(q) => {
                        rest = q;
                        den[j] += 1;
                    }
                    None => break,
                }
            }
        }
        let mut num = rf.numer().clone();
        if let Some(c) = rest.constant_value() {
            num = num.scale(&c.recip().expect("denominator is nonzero"));
        } else {
            self.forms.push(rest);
            den.push(1);
        }
        Factored { num, den }
    }

    fn add(&self, a: &Factored, b: &Factored) -> Factored {
        let (mut a, mut b) = (a.clone(), b.clone());
        self.pad(&mut a);
        self.pad(&mut b);
        let mut na = a.num;
        let mut nb = b.num;
        let mut den = Vec::with_capacity(self.forms.len());
        for (j, form) in self.forms.iter().enumerate() {
            let m = a.den[j].max(b.den[j]);
            if a.den[j] < m {
                na = &na * &form.pow(m - a.den[j]);
            }
            if b.den[j] < m {
                nb = &nb * &form.pow(m - b.den[j]);
            }
            den.push(m);
        }
        Factored { num: &na + &nb, den }
    }

    fn mul(&self, a: &Factored, b: &Factored) -> Factored {
        let (mut a, mut b) = (a.clone(), b.clone());
        self.pad(&mut a);
        self.pad(&mut b);
        Factored { num: &a.num * &b.num, den: a.den.iter().zip(&b.den).map(|(x, y)| x + y).collect() }
    }

    fn derivative(&self, a: &Factored, v: Symbol) -> Factored {
        let mut a = a.clone();
        self.pad(&mut a);
        // d(N/Πf^k) = (N' Πf - N Σ k_j f_j' Π_{i≠j} f_i) / Π f^{k+1}, over present f
        let present: Vec<usize> = (0..self.forms.len()).filter(|&j| a.den[j] > 0).collect();
        let prod = |skip: Option<usize>| {
            present
                .iter()
                .filter(|&&j| Some(j) != skip)
                .fold(MultiPoly::one(), |acc, &j| &acc * &self.forms[j])
        };
        let mut num = &a.num.derivative(v) * &prod(None);
        for &j in &present {
            let df = self.forms[j].derivative(v);
            if df.is_zero() {
                continue;
            }
            let t = &(&a.num * &df) * &prod(Some(j));
            num = &num - &t.scale(&Rational::from(a.den[j] as i64));
        }
        let mut den = a.den;
        for &j in &present {
            den[j] += 1;
        }
        Factored { num, den }
    }

    fn export(&self, a: &Factored) -> RationalFunction {
        if a.num.is_zero() {
            return RationalFunction::zero();
        }
        let den = a.den.iter().zip(&self.forms).fold(MultiPoly::one(), |acc, (&k, f)| &acc * &f.pow(k));
        RationalFunction::new(a.num.clone(), den).expect("basis forms are nonzero")
    }
}

/// `(op F)/F` as an exact rational function; zero certifies `op F = 0`.
pub fn apply_to_powerproduct(op: &MultiDiffOp, f: &PowerProduct) -> RationalFunction {
    let vars = op.vars().to_vec();
    let mut basis = Basis { forms: vec![MultiPoly::var(tau_symbol())] };
    for (form, _) in &f.factors {
        basis.forms.push(form.clone());
    }
    // ∂_v log F = Σ e_i (∂_v L_i) / L_i
    let mut logs = Vec::with_capacity(vars.len());
    for &v in &vars {
        let mut acc = Factored { num: MultiPoly::zero(), den: vec![] };
        for (j, (form, e)) in f.factors.iter().enumerate() {
            let df = form.derivative(v);
            if df.is_zero() {
                continue;
            }
            let mut term = basis.import(&(e * &RationalFunction::from_poly(df)));
            basis.pad(&mut term);
            term.den[j + 1] += 1;
            acc = basis.add(&acc, &term);
        }
        logs.push(acc);
    }
    // Q_α = (∂^α F)/F with Q_{α+e_v} = ∂_v Q_α + (∂_v log F) Q_α
    let mut memo: HashMap<Vec<u32>, Factored> = HashMap::new();
    memo.insert(vec![0; vars.len()], Factored { num: MultiPoly::one(), den: vec![] });
    fn q(
        alpha: &[u32],
        vars: &[Symbol],
        logs: &[Factored],
        basis: &Basis,
        memo: &mut HashMap<Vec<u32>, Factored>,
    ) -> Factored {
        if let Some(v) = memo.get(alpha) {
            return v.clone();
        }
        let i = alpha.iter().position(|&a| a > 0).expect("nonzero multi-index");
        let mut prev = alpha.to_vec();
        prev[i] -= 1;
        let p = q(&prev, vars, logs, basis, memo);
        let out = basis.add(&basis.derivative(&p, vars[i]), &basis.mul(&logs[i], &p));
        memo.insert(alpha.to_vec(), out.clone());
        out
    }
    let mut acc = Factored { num: MultiPoly::zero(), den: vec![] };
    for (alpha, c) in op.terms() {
        let c = basis.import(c);
        let qa = q(alpha, &vars, &logs, &basis, &mut memo);
        acc = basis.add(&acc, &basis.mul(&c, &qa));
    }
    basis.export(&acc)
}

fn diff(a: Symbol, b: Symbol) -> MultiPoly {
    &MultiPoly::var(a) - &MultiPoly::var(b)
}

/// The product solution `Z_0`, after checking the exponent equations.
pub fn z0_build(r: usize, s: usize, spectators: &[Spectator]) -> Result<PowerProduct, BpzError> {
    for (k, sp) in spectators.iter().enumerate() {
        sp.check(k)?;
    }
    let layout = Layout::new(r, s, spectators.len());
    let t = tau();
    let half = Rational::new(1, 2).unwrap();
    let mut z = PowerProduct::one();
    for j in 0..r {
        for i in 0..j {
            z.push(diff(layout.x[j], layout.x[i]), t.scale(&half));
        }
    }
    for j in 0..s {
        for i in 0..j {
            z.push(diff(layout.y[j], layout.y[i]), t.recip()?.scale(&half));
        }
    }
    for &x in &layout.x {
        for &y in &layout.y {
            z.push(diff(y, x), RationalFunction::constant(-&half));
        }
    }
    for (k, sp) in spectators.iter().enumerate() {
        let zk = layout.z[k];
        for &x in &layout.x {
            z.push(diff(zk, x), sp.a.clone());
        }
        for &y in &layout.y {
            z.push(diff(zk, y), sp.b.clone());
        }
    }
    push_spectator_pairs(&mut z, &layout, spectators);
    Ok(z)
}

fn push_spectator_pairs(z: &mut PowerProduct, layout: &Layout, spectators: &[Spectator]) {
    let t2 = tau().scale(&Rational::from(2));
    for k2 in 0..spectators.len() {
        for k1 in 0..k2 {
            let e = &t2 * &(&spectators[k1].b * &spectators[k2].b);
            z.push(diff(layout.z[k2], layout.z[k1]), e);
        }
    }
}

/// `Z̄_0 = Π z_k^{(s - rτ) b_k} Π (z_{k'} - z_k)^{2τ b_k b_{k'}}`.
pub fn z0_bar(r: usize, s: usize, spectators: &[Spectator]) -> PowerProduct {
    let layout = Layout::new(0, 0, spectators.len());
    let t = tau();
    let factor = &RationalFunction::from_int(s as i64) - &t.scale(&Rational::from(r as i64));
    let mut z = PowerProduct::one();
    for (k, sp) in spectators.iter().enumerate() {
        z.push(MultiPoly::var(layout.z[k]), &factor * &sp.b);
    }
    push_spectator_pairs(&mut z, &layout, spectators);
    z
}

/// `ℓ_m = Σ_k (-z_k^{m+1} ∂_{z_k} - h_k (m+1) z_k^m)`.
pub fn ell_spectators(m: i32, layout: &Layout, weights: &[RationalFunction]) -> Result<MultiDiffOp, BpzError> {
    let vars = layout.z.clone();
    let mut op = MultiDiffOp::zero(&vars);
    for (&zk, h) in layout.z.iter().zip(weights) {
        let zv = RationalFunction::var(zk);
        op = &op + &MultiDiffOp::first_order(&vars, zk, -&zv.pow(m + 1)?);
        let pot = &h.scale(&Rational::from(m as i64 + 1)) * &zv.pow(m)?;
        op = &op - &MultiDiffOp::multiplication(&vars, pot);
    }
    Ok(op)
}

/// `D_{r+1,s+1}` acting on the spectator variables.
pub fn compile_d_multi(r: u32, s: u32, weights: &[RationalFunction]) -> Result<MultiDiffOp, BpzError> {
    let layout = Layout::new(0, 0, weights.len());
    let delta = singular_vector(KacLabel::new(r + 1, s + 1)?)?;
    let level = (r + 1) * (s + 1);
    let gens: Vec<MultiDiffOp> =
        (1..=level as i32).map(|m| ell_spectators(-m, &layout, weights)).collect::<Result<_, _>>()?;
    let mut memo: HashMap<StandardMonomial, MultiDiffOp> = HashMap::new();
    memo.insert(StandardMonomial::identity(), MultiDiffOp::identity(&layout.z));
    let mut total = MultiDiffOp::zero(&layout.z);
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
        total = &total + &memo[mono].scale(coef);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seed_operator_is_a_pure_second_derivative() {
        let sys = build_bpz_system(1, 0, &[]).unwrap();
        let x1 = Symbol::new("x1");
        assert_eq!(sys.d21.len(), 1);
        assert_eq!(sys.d21[0].terms().len(), 1);
        assert_eq!(sys.d21[0].coefficient(&[2]), RationalFunction::one());
        assert_eq!(sys.layout.x, vec![x1]);
    }

    #[test]
    fn constraint_violation_names_the_equation() {
        let bad = Spectator { h: RationalFunction::zero(), a: RationalFunction::one(), b: RationalFunction::zero() };
        let err = z0_build(1, 0, &[bad]).unwrap_err();
        assert!(matches!(err, BpzError::Constraint { k: 1, .. }), "{err}");
    }
}
