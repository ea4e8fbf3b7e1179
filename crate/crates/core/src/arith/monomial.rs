use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use super::Symbol;

/// Power product of indeterminates, stored sparsely as `(symbol, exponent)`
/// pairs sorted by symbol with strictly positive exponents.
///
/// `Ord` is the graded lexicographic order over the symbol order.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(SmallVec<[(Symbol, u32); 4]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(sym: Symbol) -> Self {
        Self::var_pow(sym, 1)
    }

    pub fn var_pow(sym: Symbol, exp: u32) -> Self {
        let mut v = SmallVec::new();
        if exp > 0 {
            v.push((sym, exp));
        }
        Monomial(v)
    }

    /// Builds from arbitrary pairs; merges duplicates and drops zero exponents.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Symbol, u32)>) -> Self {
        let mut v: SmallVec<[(Symbol, u32); 4]> = pairs.into_iter().filter(|p| p.1 > 0).collect();
        v.sort_by_key(|a| a.0);
        let mut out: SmallVec<[(Symbol, u32); 4]> = SmallVec::new();
        for (s, e) in v {
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 += e,
                _ => out.push((s, e)),
            }
        }
        Monomial(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|p| p.1).sum()
    }

    pub fn exponent(&self, sym: Symbol) -> u32 {
        self.0.iter().find(|p| p.0 == sym).map_or(0, |p| p.1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Symbol, u32)> {
        self.0.iter()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.iter().map(|p| p.0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out: SmallVec<[(Symbol, u32); 4]> = SmallVec::new();
        let mut j = 0;
        let b = &other.0;
        for &(s, e) in self.0.iter() {
            if j < b.len() && b[j].0 < s {
                return None;
            }
            if j < b.len() && b[j].0 == s {
                if b[j].1 > e {
                    return None;
                }
                if e > b[j].1 {
                    out.push((s, e - b[j].1));
                }
                j += 1;
            } else {
                out.push((s, e));
            }
        }
        if j < b.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum (the monomial gcd).
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = SmallVec::new();
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1.min(b[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Monomial(out)
    }

    /// Removes `sym`, returning its exponent and the remaining monomial.
    pub fn split_off(&self, sym: Symbol) -> (u32, Monomial) {
        let mut e = 0;
        let mut out = SmallVec::new();
        for &(s, x) in self.0.iter() {
            if s == sym {
                e = x;
            } else {
                out.push((s, x));
            }
        }
        (e, Monomial(out))
    }

    pub fn with_exponent(&self, sym: Symbol, exp: u32) -> Monomial {
        let (_, rest) = self.split_off(sym);
        rest.mul(&Monomial::var_pow(sym, exp))
    }

    pub fn pow(&self, k: u32) -> Monomial {
        Monomial(self.0.iter().map(|&(s, e)| (s, e * k)).filter(|p| p.1 > 0).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (a, b) = (&self.0, &other.0);
        let n = a.len().min(b.len());
        for k in 0..n {
            if a[k].0 != b[k].0 {
                // The monomial containing the earlier symbol has a positive
                // exponent where the other has zero.
                return if a[k].0 < b[k].0 { Ordering::Greater } else { Ordering::Less };
            }
            match a[k].1.cmp(&b[k].1) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        a.len().cmp(&b.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, (s, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        let (x, y) = (Symbol::new("x"), Symbol::new("y"));
        let m = |a, b| Monomial::from_pairs([(x, a), (y, b)]);
        // total degree dominates
        assert!(m(0, 3) > m(2, 0));
        // x is the more significant variable
        assert!(m(2, 1) > m(1, 2));
        assert!(m(1, 0) > m(0, 1));
        assert!(m(0, 0) < m(0, 1));
    }

    #[test]
    fn division_and_gcd() {
        let (x, y) = (Symbol::new("x"), Symbol::new("y"));
        let a = Monomial::from_pairs([(x, 3), (y, 1)]);
        let b = Monomial::from_pairs([(x, 1), (y, 1)]);
        assert_eq!(a.div(&b), Some(Monomial::var_pow(x, 2)));
        assert_eq!(b.div(&a), None);
        assert_eq!(a.gcd(&Monomial::var_pow(y, 4)), Monomial::var(y));
    }
}
