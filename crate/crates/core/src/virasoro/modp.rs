//! Word-size prime-field arithmetic used to solve the singular-vector
//! systems at many sample points before exact reconstruction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::Rational;

#[derive(Clone, Copy, Debug)]
pub struct PrimeField {
    pub p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Self {
        PrimeField { p }
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.p as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.p - (b - a)
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// Inverse of a nonzero element.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        self.pow(a, self.p - 2)
    }

    pub fn from_bigint(&self, x: &BigInt) -> u64 {
        let m = BigInt::from(self.p);
        let r = x.mod_floor(&m);
        u64::try_from(r).expect("reduced residue fits")
    }

    /// Image of a rational, or `None` if `p` divides the denominator.
    pub fn from_rational(&self, q: &Rational) -> Option<u64> {
        let d = self.from_bigint(q.denom());
        if d == 0 {
            return None;
        }
        Some(self.mul(self.from_bigint(q.numer()), self.inv(d)))
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let f = PrimeField::new(n);
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = f.pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = f.mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The `k`-th prime below `2^62`, counting down.
pub fn large_prime(k: usize) -> u64 {
    let mut n = (1u64 << 62) - 1;
    let mut found = 0;
    loop {
        if is_prime(n) {
            if found == k {
                return n;
            }
            found += 1;
        }
        n -= 2;
    }
}

/// Solves `A x = b` over the field; `None` when the system is singular or
/// inconsistent. `rows` are augmented `[A | b]` with `ncols` unknowns.
pub fn solve_mod(f: &PrimeField, mut rows: Vec<Vec<u64>>, ncols: usize) -> Option<Vec<u64>> {
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(ncols);
    for col in 0..ncols {
        let Some(r) = (pivot_row..rows.len()).find(|&r| rows[r][col] != 0) else {
            return None;
        };
        rows.swap(pivot_row, r);
        let inv = f.inv(rows[pivot_row][col]);
        for x in rows[pivot_row][col..].iter_mut() {
            *x = f.mul(*x, inv);
        }
        let prow = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pivot_row || row[col] == 0 {
                continue;
            }
            let k = row[col];
            for j in col..=ncols {
                row[j] = f.sub(row[j], f.mul(k, prow[j]));
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    if rows[pivot_row..].iter().any(|row| row[ncols] != 0) {
        return None;
    }
    Some(pivots.iter().map(|&r| rows[r][ncols]).collect())
}

/// Incremental Newton interpolation of several polynomials sharing nodes.
pub struct NewtonInterpolator {
    field: PrimeField,
    nodes: Vec<u64>,
    /// `coeffs[i]` holds the divided differences of polynomial `i`.
    coeffs: Vec<Vec<u64>>,
}

impl NewtonInterpolator {
    pub fn new(field: PrimeField, count: usize) -> Self {
        NewtonInterpolator { field, nodes: Vec::new(), coeffs: vec![Vec::new(); count] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eval(&self, i: usize, x: u64) -> u64 {
        let f = &self.field;
        let c = &self.coeffs[i];
        let mut acc = 0u64;
        for k in (0..c.len()).rev() {
            acc = f.add(f.mul(acc, f.sub(x, self.nodes[k])), c[k]);
        }
        acc
    }

    /// Adds a node with the values of every polynomial there.
    pub fn push(&mut self, x: u64, values: &[u64]) {
        let f = self.field;
        // Newton coefficient for the new node: (y - P(x)) / Π (x - x_j).
        let mut denom = 1u64;
        for &xj in &self.nodes {
            denom = f.mul(denom, f.sub(x, xj));
        }
        let dinv = f.inv(denom);
        for (i, &y) in values.iter().enumerate() {
            let p = self.eval(i, x);
            let c = f.mul(f.sub(y, p), dinv);
            self.coeffs[i].push(c);
        }
        self.nodes.push(x);
    }

    /// Monomial-basis coefficients (lowest degree first) of polynomial `i`.
    pub fn monomial_coefficients(&self, i: usize) -> Vec<u64> {
        let f = &self.field;
        let c = &self.coeffs[i];
        let mut poly: Vec<u64> = Vec::new();
        for k in (0..c.len()).rev() {
            // poly = poly * (x - x_k) + c_k
            let mut next = vec![0u64; poly.len() + 1];
            for (j, &a) in poly.iter().enumerate() {
                next[j + 1] = f.add(next[j + 1], a);
                next[j] = f.sub(next[j], f.mul(a, self.nodes[k]));
            }
            next[0] = f.add(next[0], c[k]);
            poly = next;
        }
        while poly.last() == Some(&0) {
            poly.pop();
        }
        poly
    }
}

/// Combines residues `a mod m` and `b mod p` into a residue modulo `m·p`.
pub fn crt(a: &BigInt, m: &BigInt, b: u64, p: u64) -> BigInt {
    let pb = BigInt::from(p);
    let f = PrimeField::new(p);
    let am = f.from_bigint(a);
    let minv = f.inv(f.from_bigint(m));
    let t = f.mul(f.sub(b, am), minv);
    let r = a + m * BigInt::from(t);
    r.mod_floor(&(m * &pb))
}

/// Wang's rational reconstruction: `n/d ≡ a (mod m)` with
/// `|n|, d ≤ sqrt(m/2)`.
pub fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<Rational> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if !r1.gcd(&t1).is_one() {
        return None;
    }
    Rational::new(r1, t1).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_are_prime() {
        let p = large_prime(0);
        assert!(p > 1 << 61);
        assert!(is_prime(p));
        assert!(!is_prime(p - 2) || large_prime(1) == p - 2);
    }

    #[test]
    fn reconstructs_small_fractions() {
        let p = large_prime(0);
        let f = PrimeField::new(p);
        let q = Rational::new(-37, 120).unwrap();
        let img = f.from_rational(&q).unwrap();
        let got = rational_reconstruct(&BigInt::from(img), &BigInt::from(p)).unwrap();
        assert_eq!(got, q);
    }

    #[test]
    fn interpolates_polynomials() {
        let f = PrimeField::new(large_prime(0));
        let mut it = NewtonInterpolator::new(f, 1);
        // 3x^2 - 2x + 5
        for x in 1..=4u64 {
            let y = f.add(f.sub(f.mul(3, f.mul(x, x)), f.mul(2, x)), 5);
            it.push(x, &[y]);
        }
        assert_eq!(it.monomial_coefficients(0), vec![5, f.p - 2, 3]);
    }
}
