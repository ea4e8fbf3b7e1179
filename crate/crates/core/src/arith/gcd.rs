//! Polynomial greatest common divisors over the rationals.
//!
//! Univariate inputs use the monic Euclidean algorithm on dense coefficient
//! vectors. Multivariate inputs recurse on content and primitive part with
//! respect to a chosen main variable, running a primitive pseudo-remainder
//! sequence over the remaining variables.

use super::{MultiPoly, Rational, Symbol};

/// Monic gcd (leading coefficient 1 in the graded lexicographic order).
/// `gcd(0, 0) = 0`.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.gcd(&mb);
    let a1 = a.div_monomial(&ma).expect("monomial content divides");
    let b1 = b.div_monomial(&mb).expect("monomial content divides");
    gcd_reduced(&a1, &b1).mul_monomial(&mg).monic()
}

/// Gcd of polynomials that are not divisible by any indeterminate.
fn gcd_reduced(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one();
    }
    if a == b {
        return a.monic();
    }
    let va = a.variables();
    let vb = b.variables();
    if va.len() == 1 && va == vb {
        let x = *va.iter().next().unwrap();
        let g = gcd_dense(a.to_dense(x).unwrap(), b.to_dense(x).unwrap());
        return MultiPoly::from_dense(x, &g);
    }
    // An indeterminate occurring in only one argument can be eliminated by
    // taking the content with respect to it.
    if let Some(&x) = va.difference(&vb).next() {
        let c = content_in(a, x);
        return gcd(&c, b);
    }
    if let Some(&x) = vb.difference(&va).next() {
        let c = content_in(b, x);
        return gcd(a, &c);
    }
    // Cheap divisibility test before running a full remainder sequence.
    let (small, large) = if a.total_degree() <= b.total_degree() { (a, b) } else { (b, a) };
    if large.div_exact(small).is_some() {
        return small.monic();
    }
    let x = *va.iter().min_by_key(|&&s| a.degree_in(s).max(b.degree_in(s))).unwrap();
    let ca = content_in(a, x);
    let cb = content_in(b, x);
    let c = gcd(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let g = primitive_prs(&pa, &pb, x);
    (&c * &g).monic()
}

/// Gcd of the coefficients of `p` viewed as a polynomial in `x`.
pub fn content_in(p: &MultiPoly, x: Symbol) -> MultiPoly {
    let coeffs = p.coeffs_in(x);
    let mut nonzero: Vec<&MultiPoly> = coeffs.iter().filter(|c| !c.is_zero()).collect();
    nonzero.sort_by_key(|c| (c.total_degree(), c.num_terms()));
    let mut g = MultiPoly::zero();
    for c in nonzero {
        g = gcd(&g, c);
        if g.is_constant() {
            return MultiPoly::one();
        }
    }
    g
}

fn primitive_prs(a: &MultiPoly, b: &MultiPoly, x: Symbol) -> MultiPoly {
    let mut f = a.coeffs_in(x);
    let mut g = b.coeffs_in(x);
    if f.len() < g.len() {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        if g.is_empty() {
            break;
        }
        if g.len() == 1 {
            // Primitive inputs with a remainder constant in x are coprime.
            return MultiPoly::one();
        }
        let r = pseudo_remainder(&f, &g);
        f = g;
        g = primitive_part(r);
    }
    let pp = primitive_part(f);
    MultiPoly::from_coeffs_in(x, &pp).monic()
}

fn trim(v: &mut Vec<MultiPoly>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

fn pseudo_remainder(f: &[MultiPoly], g: &[MultiPoly]) -> Vec<MultiPoly> {
    let mut r = f.to_vec();
    let lg = g.last().unwrap();
    trim(&mut r);
    while r.len() >= g.len() {
        let lr = r.last().unwrap().clone();
        let shift = r.len() - g.len();
        for c in r.iter_mut() {
            *c = &*c * lg;
        }
        for (i, gc) in g.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &(&lr * gc);
        }
        trim(&mut r);
    }
    r
}

fn primitive_part(mut v: Vec<MultiPoly>) -> Vec<MultiPoly> {
    trim(&mut v);
    if v.is_empty() {
        return v;
    }
    let mut order: Vec<usize> = (0..v.len()).filter(|&i| !v[i].is_zero()).collect();
    order.sort_by_key(|&i| (v[i].total_degree(), v[i].num_terms()));
    let mut g = MultiPoly::zero();
    for &i in &order {
        g = gcd(&g, &v[i]);
        if g.is_constant() {
            break;
        }
    }
    if !g.is_constant() {
        for c in v.iter_mut() {
            *c = c.div_exact(&g).expect("content divides");
        }
    }
    // Keep the rational coefficients small.
    let mut content: Option<Rational> = None;
    for c in v.iter().filter(|c| !c.is_zero()) {
        let k = c.content();
        content = Some(match content {
            None => k,
            Some(q) => q.gcd(&k),
        });
    }
    if let Some(k) = content {
        if !k.is_one() {
            let inv = k.recip().expect("nonzero content");
            for c in v.iter_mut() {
                *c = c.scale(&inv);
            }
        }
    }
    v
}

/// Monic gcd of dense univariate polynomials (lowest degree first).
pub fn gcd_dense(a: Vec<Rational>, b: Vec<Rational>) -> Vec<Rational> {
    let mut a = dense_monic(a);
    let mut b = dense_monic(b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        let r = dense_rem(&a, &b);
        a = b;
        b = dense_monic(r);
    }
    a
}

fn dense_trim(mut v: Vec<Rational>) -> Vec<Rational> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn dense_monic(v: Vec<Rational>) -> Vec<Rational> {
    let v = dense_trim(v);
    match v.last() {
        None => v,
        Some(l) if l.is_one() => v,
        Some(l) => {
            let inv = l.recip().unwrap();
            v.iter().map(|c| c * &inv).collect()
        }
    }
}

/// Remainder of `a` modulo the monic polynomial `b`.
fn dense_rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = r.pop().unwrap();
        if lead.is_zero() {
            continue;
        }
        let shift = r.len() - db;
        for i in 0..db {
            let t = &lead * &b[i];
            r[shift + i] -= &t;
        }
    }
    dense_trim(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> MultiPoly {
        MultiPoly::var(Symbol::new(name))
    }
    fn k(n: i64) -> MultiPoly {
        MultiPoly::constant(Rational::from(n))
    }

    #[test]
    fn univariate_gcd() {
        let t = v("tau");
        let a = &(&t - &k(1)) * &(&t + &k(2));
        let b = &(&t - &k(1)) * &(&t + &k(3));
        assert_eq!(gcd(&a, &b), &t - &k(1));
    }

    #[test]
    fn multivariate_gcd_recovers_common_factor() {
        let (x, y, z) = (v("x"), v("y"), v("z"));
        let common = &(&(&x * &y) + &z) + &k(3);
        let a = &common * &(&x.pow(2) - &y);
        let b = &common * &(&(&y * &z) + &x);
        let g = gcd(&a, &b);
        assert_eq!(g, common.monic());
    }

    #[test]
    fn monomial_factors_are_extracted() {
        let (x, y) = (v("x"), v("y"));
        let a = &x.pow(3) * &(&y + &k(1));
        let b = &(&x.pow(2) * &y) * &(&y + &k(1));
        assert_eq!(gcd(&a, &b), &x.pow(2) * &(&y + &k(1)));
    }

    #[test]
    fn coprime_inputs() {
        let (x, y) = (v("x"), v("y"));
        assert!(gcd(&(&x + &y), &(&x - &y)).is_one());
    }
}
