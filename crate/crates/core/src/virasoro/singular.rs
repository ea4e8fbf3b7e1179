//! Singular vectors `Δ_{r,s}` from the `L_1`, `L_2` annihilation system, and
//! the Benoit–Saint-Aubin closed form for `s = 1`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;

use super::basis::{partitions, StandardMonomial};
use super::modp::{crt, large_prime, rational_reconstruct, solve_mod, NewtonInterpolator, PrimeField};
use super::uea::UEAElement;
use super::verma::{is_singular, positive_mode_action, Affine};
use super::{central_charge, kac_weight, tau, KacLabel, VirasoroError};
use crate::arith::{MultiPoly, Rational, RationalFunction};

/// Column layout of the annihilation system at level `n`: unknowns are the
/// coefficients of every level-`n` monomial, equations are the components
/// of `L_1 Δ v` at level `n-1` and of `L_2 Δ v` at level `n-2`.
struct System {
    unknowns: Vec<StandardMonomial>,
    /// `rows[e]` lists `(unknown index, structure constant)`.
    rows: Vec<Vec<(usize, Affine)>>,
}

impl System {
    fn build(level: u32) -> System {
        let unknowns = partitions(level);
        let mut row_index: HashMap<(u32, StandardMonomial), usize> = HashMap::new();
        let mut rows: Vec<Vec<(usize, Affine)>> = Vec::new();
        for m in [1u32, 2] {
            if m > level {
                continue;
            }
            for t in partitions(level - m) {
                row_index.insert((m, t), rows.len());
                rows.push(Vec::new());
            }
            for (j, u) in unknowns.iter().enumerate() {
                for (t, aff) in positive_mode_action(m, u).iter() {
                    let r = row_index[&(m, t.clone())];
                    rows[r].push((j, aff.clone()));
                }
            }
        }
        System { unknowns, rows }
    }

    /// Index of `L_{-1}^n`, whose coefficient is pinned to 1.
    fn pinned(&self) -> usize {
        0
    }

    fn solve_mod(&self, f: &PrimeField, h: u64, c: u64) -> Option<Vec<u64>> {
        let n = self.unknowns.len();
        let pin = self.pinned();
        let mut mat = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut dense = vec![0u64; n];
            let mut rhs = 0u64;
            for (j, aff) in row {
                let v = f.add(
                    f.from_rational(&aff.a)?,
                    f.add(f.mul(f.from_rational(&aff.b)?, h), f.mul(f.from_rational(&aff.d)?, c)),
                );
                if *j == pin {
                    rhs = f.sub(rhs, v);
                } else {
                    dense[if *j < pin { *j } else { *j - 1 }] = v;
                }
            }
            dense[n - 1] = rhs;
            mat.push(dense);
        }
        solve_mod(f, mat, n - 1)
    }

    /// Exact solve at rational `h`, `c`; errors describe resonances.
    fn solve_rational(&self, h: &Rational, c: &Rational) -> Result<Vec<Rational>, String> {
        let n = self.unknowns.len();
        let pin = self.pinned();
        let mut mat: Vec<Vec<Rational>> = self
            .rows
            .iter()
            .map(|row| {
                let mut dense = vec![Rational::zero(); n];
                for (j, aff) in row {
                    let v = aff.eval(h, c);
                    if *j == pin {
                        dense[n - 1] = &dense[n - 1] - &v;
                    } else {
                        let k = if *j < pin { *j } else { *j - 1 };
                        dense[k] = &dense[k] + &v;
                    }
                }
                dense
            })
            .collect();
        let ncols = n - 1;
        let mut prow = 0;
        let mut pivots = Vec::new();
        for col in 0..ncols {
            let Some(r) = (prow..mat.len()).find(|&r| !mat[r][col].is_zero()) else {
                return Err(format!("non-unique solution: free coefficient at {}", self.unknowns[col + 1]));
            };
            mat.swap(prow, r);
            let inv = mat[prow][col].recip().expect("nonzero pivot");
            for x in mat[prow][col..].iter_mut() {
                *x = &*x * &inv;
            }
            let pivot = mat[prow].clone();
            for (r, row) in mat.iter_mut().enumerate() {
                if r == prow || row[col].is_zero() {
                    continue;
                }
                let k = row[col].clone();
                for j in col..=ncols {
                    if !pivot[j].is_zero() {
                        row[j] = &row[j] - &(&k * &pivot[j]);
                    }
                }
            }
            pivots.push(prow);
            prow += 1;
        }
        if mat[prow..].iter().any(|row| !row[ncols].is_zero()) {
            return Err("inconsistent system: no singular vector with unit L_{-1} coefficient".into());
        }
        let mut out = vec![Rational::one()];
        out.extend(pivots.iter().map(|&r| mat[r][ncols].clone()));
        Ok(out)
    }
}

fn cache() -> &'static Mutex<HashMap<KacLabel, UEAElement>> {
    static CACHE: OnceLock<Mutex<HashMap<KacLabel, UEAElement>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Δ_{r,s}` with symbolic τ, normalized so the coefficient of
/// `L_{-1}^{rs}` is 1.
///
/// The system is solved at many sample values of τ modulo word-size primes;
/// each coefficient is reconstructed as a Laurent polynomial and the result
/// is certified by exact symbolic `L_1`, `L_2` annihilation.
pub fn singular_vector(label: KacLabel) -> Result<UEAElement, VirasoroError> {
    if let Some(hit) = cache().lock().expect("cache poisoned").get(&label) {
        return Ok(hit.clone());
    }
    let v = compute_symbolic(label)?;
    cache().lock().expect("cache poisoned").insert(label, v.clone());
    Ok(v)
}

fn compute_symbolic(label: KacLabel) -> Result<UEAElement, VirasoroError> {
    let level = label.level();
    if level == 1 {
        return Ok(UEAElement::generator(1));
    }
    let sys = System::build(level);
    let nunk = sys.unknowns.len() - 1;
    // Coefficients are Laurent polynomials; τ^shift times each is a
    // polynomial.
    let shift = level;
    let max_points = (4 * level + 8) as usize;
    let r = BigInt::from(label.r);
    let s = BigInt::from(label.s);

    let mut modulus = BigInt::from(1);
    let mut residues: Vec<Vec<BigInt>> = Vec::new();
    let mut candidate: Option<Vec<Vec<Rational>>> = None;
    for k in 0..8 {
        let f = PrimeField::new(large_prime(k));
        let images = interpolate_mod(&sys, &f, &r, &s, shift, nunk, max_points)
            .ok_or_else(|| VirasoroError::Reconstruction(label, "interpolation did not stabilize".into()))?;
        if let Some(cand) = &candidate {
            if agrees_mod(cand, &images, &f) {
                return finish(label, &sys, cand, shift);
            }
        }
        // Fold the new images into the running CRT residues.
        let width = images.iter().map(Vec::len).max().unwrap_or(0).max(residues.first().map_or(0, Vec::len));
        if residues.is_empty() {
            residues = images
                .iter()
                .map(|v| (0..width).map(|i| BigInt::from(v.get(i).copied().unwrap_or(0))).collect())
                .collect();
        } else {
            for (res, img) in residues.iter_mut().zip(&images) {
                res.resize(width, BigInt::from(0));
                for (i, a) in res.iter_mut().enumerate() {
                    *a = crt(a, &modulus, img.get(i).copied().unwrap_or(0), f.p);
                }
            }
        }
        modulus *= BigInt::from(f.p);
        candidate = residues
            .iter()
            .map(|res| res.iter().map(|a| rational_reconstruct(a, &modulus)).collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>();
    }
    Err(VirasoroError::Reconstruction(label, "coefficients did not stabilize over the prime sequence".into()))
}

/// Images modulo `f.p` of the polynomial `τ^shift · x_j(τ)` for every
/// unknown `j`, lowest degree first.
fn interpolate_mod(
    sys: &System,
    f: &PrimeField,
    r: &BigInt,
    s: &BigInt,
    shift: u32,
    nunk: usize,
    max_points: usize,
) -> Option<Vec<Vec<u64>>> {
    let mut interp = NewtonInterpolator::new(*f, nunk);
    let (rm, sm) = (f.from_bigint(r), f.from_bigint(s));
    let inv4 = f.inv(4);
    let mut stable = 0;
    let mut x = 1u64;
    while interp.len() < max_points {
        x += 1;
        // c = 13 - 6(τ + 1/τ), h = ((rτ - s)² - (τ - 1)²) / (4τ)
        let xinv = f.inv(x);
        let c = f.sub(13, f.mul(6, f.add(x, xinv)));
        let a = f.sub(f.mul(rm, x), sm);
        let b = f.sub(x, 1);
        let h = f.mul(f.sub(f.mul(a, a), f.mul(b, b)), f.mul(inv4, xinv));
        let Some(sol) = sys.solve_mod(f, h, c) else {
            continue;
        };
        let scale = f.pow(x, shift as u64);
        let values: Vec<u64> = sol.iter().map(|&v| f.mul(v, scale)).collect();
        let predicted = !interp.is_empty() && (0..nunk).all(|j| interp.eval(j, x) == values[j]);
        stable = if predicted { stable + 1 } else { 0 };
        interp.push(x, &values);
        if stable >= 3 {
            return Some((0..nunk).map(|j| interp.monomial_coefficients(j)).collect());
        }
    }
    None
}

fn agrees_mod(cand: &[Vec<Rational>], images: &[Vec<u64>], f: &PrimeField) -> bool {
    cand.iter().zip(images).all(|(c, img)| {
        let n = c.len().max(img.len());
        (0..n).all(|i| {
            let want = img.get(i).copied().unwrap_or(0);
            match c.get(i) {
                Some(q) => f.from_rational(q) == Some(want),
                None => want == 0,
            }
        })
    })
}

fn finish(label: KacLabel, sys: &System, coeffs: &[Vec<Rational>], shift: u32) -> Result<UEAElement, VirasoroError> {
    let t = tau();
    let t_sym = super::tau_symbol();
    let den = MultiPoly::monomial(crate::arith::Monomial::var_pow(t_sym, shift), Rational::one());
    let mut out = UEAElement::monomial(sys.unknowns[0].clone(), RationalFunction::one());
    for (j, poly) in coeffs.iter().enumerate() {
        let num = MultiPoly::from_dense(t_sym, poly);
        let c = RationalFunction::new(num, den.clone()).expect("monomial denominator");
        out.add_term(sys.unknowns[j + 1].clone(), &c);
    }
    let c = central_charge(&t)?;
    let h = kac_weight(label, &t)?;
    if !is_singular(&out, &c, &h) {
        return Err(VirasoroError::Reconstruction(label, "reconstructed vector fails L1/L2 annihilation".into()));
    }
    Ok(out)
}

/// `Δ_{r,s}` at a specialized rational τ, solved directly over ℚ.
pub fn singular_vector_at(label: KacLabel, tau_value: &Rational) -> Result<UEAElement, VirasoroError> {
    if tau_value.is_zero() {
        return Err(VirasoroError::ZeroTau);
    }
    let level = label.level();
    let t = RationalFunction::constant(tau_value.clone());
    let c = central_charge(&t)?.constant_value().expect("constant");
    let h = kac_weight(label, &t)?.constant_value().expect("constant");
    if level == 1 {
        return Ok(UEAElement::generator(1));
    }
    let sys = System::build(level);
    let sol = sys
        .solve_rational(&h, &c)
        .map_err(|detail| VirasoroError::Resonance { label, tau: tau_value.clone(), detail })?;
    Ok(UEAElement::from_terms(
        sys.unknowns.iter().cloned().zip(sol.into_iter().map(RationalFunction::constant)),
    ))
}

/// Benoit–Saint-Aubin form of `Δ_{r,1}`: a sum over compositions
/// `(n_1, …, n_k)` of `r`, normal-ordered.
pub fn bsa_vector(r: u32) -> Result<UEAElement, VirasoroError> {
    if r == 0 {
        return Err(VirasoroError::InvalidLabel(0, 1));
    }
    let t = tau();
    let mut fact = Rational::one();
    for i in 1..r as i64 {
        fact = &fact * &Rational::from(i);
    }
    let numer = &fact * &fact;
    let mut out = UEAElement::zero();
    // Compositions correspond to subsets of the r-1 cut points.
    for mask in 0u32..(1 << (r - 1)) {
        let mut parts = Vec::new();
        let mut last = 0;
        for cut in 1..r {
            if mask & (1 << (cut - 1)) != 0 {
                parts.push(cut - last);
                last = cut;
            }
        }
        parts.push(r - last);
        let k = parts.len() as i32;
        let mut denom = Rational::one();
        let mut partial = 0;
        for &n in &parts[..parts.len() - 1] {
            partial += n;
            denom = &denom * &Rational::from((partial * (r - partial)) as i64);
        }
        let scalar = &numer / &denom;
        let coef = (-&t).pow(r as i32 - k).expect("nonnegative power").scale(&scalar);
        let word = UEAElement::word(&parts)?;
        out = &out + &word.scale(&coef);
    }
    Ok(out)
}
