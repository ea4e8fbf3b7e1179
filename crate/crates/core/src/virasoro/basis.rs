//! Standard basis of U(Vir⁻) and its integer structure constants.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// A standard monomial `L_{-i_k} … L_{-i_1}` with `i_1 ≤ … ≤ i_k`, stored
/// left to right as `[i_k, …, i_1]` (non-increasing).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(into = "Vec<u32>", try_from = "Vec<u32>")]
pub struct StandardMonomial(SmallVec<[u32; 8]>);

impl StandardMonomial {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Validates the weakly decreasing, positive layout.
    pub fn new(indices: &[u32]) -> Option<Self> {
        if indices.contains(&0) || indices.windows(2).any(|w| w[0] < w[1]) {
            return None;
        }
        Some(Self(indices.iter().copied().collect()))
    }

    /// `L_{-1}^n`.
    pub fn l1_power(n: u32) -> Self {
        Self(std::iter::repeat_n(1, n as usize).collect())
    }

    pub fn generator(i: u32) -> Self {
        Self(std::iter::once(i).collect())
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn level(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    fn prepend(&self, i: u32) -> Self {
        let mut v = SmallVec::with_capacity(self.0.len() + 1);
        v.push(i);
        v.extend_from_slice(&self.0);
        Self(v)
    }

    fn tail(&self) -> Self {
        Self(self.0[1..].iter().copied().collect())
    }
}

impl From<StandardMonomial> for Vec<u32> {
    fn from(m: StandardMonomial) -> Vec<u32> {
        m.0.to_vec()
    }
}

impl TryFrom<Vec<u32>> for StandardMonomial {
    type Error = String;
    fn try_from(v: Vec<u32>) -> Result<Self, String> {
        StandardMonomial::new(&v).ok_or_else(|| format!("not a standard monomial: {v:?}"))
    }
}

impl fmt::Display for StandardMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let mut first = true;
        let mut k = 0;
        while k < self.0.len() {
            let i = self.0[k];
            let run = self.0[k..].iter().take_while(|&&j| j == i).count();
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            if run == 1 {
                write!(f, "L-{i}")?;
            } else {
                write!(f, "L-{i}^{run}")?;
            }
            k += run;
        }
        Ok(())
    }
}

impl fmt::Debug for StandardMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All standard monomials of level `n`, in ascending `Ord` order (so
/// `L_{-1}^n` comes first).
pub fn partitions(n: u32) -> Vec<StandardMonomial> {
    fn rec(rest: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<StandardMonomial>) {
        if rest == 0 {
            out.push(StandardMonomial(prefix.iter().copied().collect()));
            return;
        }
        for i in 1..=max.min(rest) {
            prefix.push(i);
            rec(rest - i, i, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Integer-weighted combination of standard monomials.
pub type IntCombination = Vec<(StandardMonomial, i64)>;

thread_local! {
    static LEFT_MUL: RefCell<HashMap<(u32, StandardMonomial), Rc<IntCombination>>> = RefCell::new(HashMap::new());
}

/// `L_{-j} · m` rewritten in the standard basis.
pub fn left_mul_generator(j: u32, m: &StandardMonomial) -> Rc<IntCombination> {
    if m.0.first().is_none_or(|&top| j >= top) {
        return Rc::new(vec![(m.prepend(j), 1)]);
    }
    let key = (j, m.clone());
    if let Some(hit) = LEFT_MUL.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    // L_{-j} L_{-i} X = L_{-i} (L_{-j} X) + (i - j) L_{-(i+j)} X  for j < i.
    let i = m.0[0];
    let x = m.tail();
    let mut acc: HashMap<StandardMonomial, i64> = HashMap::new();
    for (t, c) in left_mul_generator(j, &x).iter() {
        for (u, d) in left_mul_generator(i, t).iter() {
            *acc.entry(u.clone()).or_insert(0) += c * d;
        }
    }
    let k = (i - j) as i64;
    for (u, d) in left_mul_generator(i + j, &x).iter() {
        *acc.entry(u.clone()).or_insert(0) += k * d;
    }
    let mut out: IntCombination = acc.into_iter().filter(|(_, c)| *c != 0).collect();
    out.sort();
    let out = Rc::new(out);
    LEFT_MUL.with(|c| c.borrow_mut().insert(key, out.clone()));
    out
}

/// Product of two standard monomials in the standard basis.
pub fn monomial_product(a: &StandardMonomial, b: &StandardMonomial) -> IntCombination {
    let mut cur: HashMap<StandardMonomial, i64> = HashMap::new();
    cur.insert(b.clone(), 1);
    for &j in a.0.iter().rev() {
        let mut next: HashMap<StandardMonomial, i64> = HashMap::new();
        for (m, c) in cur {
            for (u, d) in left_mul_generator(j, &m).iter() {
                *next.entry(u.clone()).or_insert(0) += c * d;
            }
        }
        next.retain(|_, c| *c != 0);
        cur = next;
    }
    let mut out: IntCombination = cur.into_iter().collect();
    out.sort();
    out
}
