//! Algebraic fusion of a `(2,1)` insertion with a degenerate field: the
//! descendant series forced by the `(2,1)` null vector at the moving point,
//! its image under the lifted `Δ_{r,s}`, and certification of the first
//! nonzero elimination output.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::arith::{Rational, RationalFunction};
use crate::virasoro::{
    central_charge, is_singular, kac_weight, singular_vector, tau, tau_symbol, KacLabel, StandardMonomial,
    UEAElement, VirasoroError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error(transparent)]
    Virasoro(#[from] VirasoroError),
    #[error(transparent)]
    Arith(#[from] crate::arith::ArithError),
    #[error("resonance: r(α+{k}) vanishes")]
    Resonance { k: u32 },
    #[error("fusion of {label} with sign {sign} has no valid target label")]
    NoTarget { label: KacLabel, sign: Sign },
    #[error("no nonzero P_k for k ≤ {kmax}")]
    AllZero { kmax: u32 },
    #[error("P_{k} is not annihilated by L_1 and L_2 in the target Verma module")]
    CertificateFailed { k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl std::str::FromStr for Sign {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            _ => Err(format!("unknown sign {s:?}; expected plus or minus")),
        }
    }
}

/// `α± = (1-τ)/2 ± (rτ-s)/2`, the two roots of
/// `r(ν) = ν(ν-1) + τν - τ h_{r,s}`.
pub fn indicial_roots(label: KacLabel) -> (RationalFunction, RationalFunction) {
    let t = tau();
    (alpha(label, Sign::Plus, &t), alpha(label, Sign::Minus, &t))
}

fn alpha(label: KacLabel, sign: Sign, t: &RationalFunction) -> RationalFunction {
    let half = Rational::new(1, 2).unwrap();
    let base = (&RationalFunction::one() - t).scale(&half);
    let shift = (&t.scale(&Rational::from(label.r as i64)) - &RationalFunction::from_int(label.s as i64))
        .scale(&(&half * &Rational::from(sign.factor())));
    &base + &shift
}

/// Parameters of one fusion computation. `tau` is either the symbol τ, a
/// rational constant, or `1/τ` for the dual insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionContext {
    pub label: KacLabel,
    pub sign: Sign,
    pub tau: RationalFunction,
    pub alpha: RationalFunction,
    /// Weight of the inserted `(2,1)` field, used by the lifted action.
    pub h: RationalFunction,
    /// `h_{r,s}`, entering `r(ν)`.
    pub h_tilde: RationalFunction,
}

impl FusionContext {
    pub fn new(label: KacLabel, sign: Sign) -> Result<Self, FusionError> {
        Self::with_tau(label, sign, tau())
    }

    pub fn at(label: KacLabel, sign: Sign, tau_value: &Rational) -> Result<Self, FusionError> {
        Self::with_tau(label, sign, RationalFunction::constant(tau_value.clone()))
    }

    pub fn with_tau(label: KacLabel, sign: Sign, tau: RationalFunction) -> Result<Self, FusionError> {
        let h = kac_weight(KacLabel::new(2, 1)?, &tau)?;
        let h_tilde = kac_weight(label, &tau)?;
        let alpha = alpha(label, sign, &tau);
        Ok(FusionContext { label, sign, tau, alpha, h, h_tilde })
    }

    /// `r(ν) = ν(ν-1) + τν - τ h̃`.
    pub fn r_poly(&self, nu: &RationalFunction) -> RationalFunction {
        let one = RationalFunction::one();
        &(&(nu * &(nu - &one)) + &(&self.tau * nu)) - &(&self.tau * &self.h_tilde)
    }

    pub fn target(&self) -> Result<KacLabel, FusionError> {
        let r = self.label.r as i64 + self.sign.factor();
        if r < 1 {
            return Err(FusionError::NoTarget { label: self.label, sign: self.sign });
        }
        Ok(KacLabel::new(r as u32, self.label.s)?)
    }

    fn shifted(&self, k: i64) -> RationalFunction {
        &self.alpha + &RationalFunction::from_int(k)
    }

    /// `Δ_{r,s}` with τ replaced by this context's parameter.
    fn delta(&self, label: KacLabel) -> Result<UEAElement, FusionError> {
        let d = singular_vector(label)?;
        if self.tau == tau() {
            return Ok(d);
        }
        let mut b = HashMap::new();
        b.insert(tau_symbol(), self.tau.clone());
        Ok(d.map_coefficients(|c| c.substitute(&b))?)
    }

    fn to_json(&self) -> serde_json::Value {
        json!({
            "label": [self.label.r, self.label.s],
            "sign": self.sign,
            "tau": self.tau.to_json(),
            "alpha": self.alpha.to_json(),
            "h": self.h.to_json(),
            "hTilde": self.h_tilde.to_json(),
        })
    }
}

/// `R_0, …, R_K` with `v_k = R_k v_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionSeries {
    pub context: FusionContext,
    pub coefficients: Vec<UEAElement>,
}

/// Solves `r(α+k) R_k = τ (L_{-1} R_{k-1} + Σ_{j=2}^{k} L_{-j} R_{k-j})`.
pub fn descendants(context: &FusionContext, k_max: u32) -> Result<FusionSeries, FusionError> {
    let mut rk = vec![UEAElement::identity()];
    for k in 1..=k_max {
        let rr = context.r_poly(&context.shifted(k as i64));
        if rr.is_zero() {
            return Err(FusionError::Resonance { k });
        }
        let mut acc = UEAElement::zero();
        for j in 1..=k {
            acc = &acc + &rk[(k - j) as usize].left_mul_generator(j);
        }
        rk.push(acc.scale(&context.tau.checked_div(&rr)?));
    }
    Ok(FusionSeries { context: context.clone(), coefficients: rk })
}

/// Coefficients of `t^{α+e}`, keyed by `e`.
type Graded = BTreeMap<i64, UEAElement>;

/// `hat-L_{-j}` on `Σ_e X_e t^{α+e}`, dropping exponents above `keep`.
fn hat_generator(ctx: &FusionContext, j: u32, x: &Graded, keep: i64) -> Graded {
    let mut out = Graded::new();
    let weight = ctx.h.scale(&Rational::from(1 - j as i64));
    for (&e, v) in x {
        if e <= keep {
            let lv = v.left_mul_generator(j);
            if !lv.is_zero() {
                let slot = out.entry(e).or_default();
                *slot = &*slot + &lv;
            }
        }
        let e2 = e - j as i64;
        if e2 <= keep {
            let k = &ctx.shifted(e) + &weight;
            let slot = out.entry(e2).or_default();
            *slot = &*slot - &v.scale(&k);
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Applies the lift of `a` (homogeneous of level `n`) to the series and
/// returns `P_0, …, P_K`, where `P_k` is the coefficient of `t^{α-n+k}` and
/// `K` is the series length minus one.
pub fn hat_apply(a: &UEAElement, series: &FusionSeries) -> Vec<UEAElement> {
    let ctx = &series.context;
    let k_max = series.coefficients.len() as i64 - 1;
    let n = a.levels().into_iter().max().unwrap_or(0) as i64;
    let start: Graded = series.coefficients.iter().enumerate().map(|(k, r)| (k as i64, r.clone())).collect();
    // Results for each suffix L_{-i_m} … L_{-i_1} of the monomials, shared
    // between monomials with a common tail.
    let mut memo: HashMap<StandardMonomial, Graded> = HashMap::new();
    memo.insert(StandardMonomial::identity(), start);
    let mut totals: BTreeMap<i64, UEAElement> = BTreeMap::new();
    for (mono, coef) in a.terms() {
        let idx = mono.indices();
        for m in (0..idx.len()).rev() {
            let suffix = StandardMonomial::new(&idx[m..]).expect("suffix of a standard monomial");
            if memo.contains_key(&suffix) {
                continue;
            }
            let prev = StandardMonomial::new(&idx[m + 1..]).expect("suffix of a standard monomial");
            // Later generators can only lower exponents, so anything above
            // K - level(suffix) never reaches P_0..P_K.
            let keep = k_max - suffix.level() as i64;
            let next = hat_generator(ctx, idx[m], &memo[&prev], keep);
            memo.insert(suffix, next);
        }
        for (e, v) in &memo[mono] {
            let k = e + n;
            if (0..=k_max).contains(&k) {
                let slot = totals.entry(k).or_default();
                *slot = &*slot + &v.scale(coef);
            }
        }
    }
    (0..=k_max).map(|k| totals.remove(&k).unwrap_or_default()).collect()
}

/// Outcome of the elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationResult {
    pub context: FusionContext,
    pub series: FusionSeries,
    pub all_p: Vec<UEAElement>,
    pub k_star: u32,
    pub p_k: UEAElement,
    pub target: KacLabel,
    /// `λ` with `P_{k*} = λ Δ_target`, when `k*` is the target level.
    pub proportionality_constant: Option<RationalFunction>,
    pub certificate: bool,
}

impl EliminationResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "context": self.context.to_json(),
            "Rk": self.series.coefficients.iter().map(UEAElement::to_json).collect::<Vec<_>>(),
            "Pk": self.all_p.iter().map(UEAElement::to_json).collect::<Vec<_>>(),
            "kStar": self.k_star,
            "constant": self.proportionality_constant.as_ref().map(RationalFunction::to_json),
            "certificate": self.certificate,
        })
    }
}

pub fn default_kmax(label: KacLabel) -> u32 {
    (label.r + 1) * label.s + 2
}

/// Fuses `Δ_{r,s}` with the `(2,1)` insertion, symbolic τ.
pub fn fuse(label: KacLabel, sign: Sign, k_max: u32) -> Result<EliminationResult, FusionError> {
    fuse_in(&FusionContext::new(label, sign)?, k_max)
}

/// Fusion with the `(1,2)` insertion: the transposed computation with
/// `τ ↦ 1/τ`, reported for the target `(r, s±1)`.
pub fn fuse_dual(label: KacLabel, sign: Sign, k_max: u32) -> Result<EliminationResult, FusionError> {
    let inv = tau().recip()?;
    let mut res = fuse_in(&FusionContext::with_tau(label.transpose(), sign, inv)?, k_max)?;
    res.target = res.target.transpose();
    Ok(res)
}

/// Runs the elimination in an arbitrary context. The series is first built
/// only up to the target level, then extended to `k_max` if needed.
pub fn fuse_in(ctx: &FusionContext, k_max: u32) -> Result<EliminationResult, FusionError> {
    let target = ctx.target()?;
    let delta = ctx.delta(ctx.label)?;
    let mut attempts = vec![target.level().min(k_max)];
    if k_max > attempts[0] {
        attempts.push(k_max);
    }
    for k in attempts {
        let series = descendants(ctx, k)?;
        let all_p = hat_apply(&delta, &series);
        let Some(k_star) = all_p.iter().position(|p| !p.is_zero()) else {
            continue;
        };
        let p_k = all_p[k_star].clone();
        let k_star = k_star as u32;
        let c = central_charge(&ctx.tau)?;
        let h_target = kac_weight(target, &ctx.tau)?;
        let certificate = is_singular(&p_k, &c, &h_target);
        if !certificate {
            return Err(FusionError::CertificateFailed { k: k_star });
        }
        let proportionality_constant = if k_star == target.level() {
            let d = ctx.delta(target)?;
            let lambda = p_k.coefficient(&StandardMonomial::l1_power(k_star));
            (d.scale(&lambda) == p_k).then_some(lambda)
        } else {
            None
        };
        let all_p = all_p[..=k_star as usize].to_vec();
        return Ok(EliminationResult {
            context: ctx.clone(),
            series,
            all_p,
            k_star,
            p_k,
            target,
            proportionality_constant,
            certificate,
        });
    }
    Err(FusionError::AllZero { kmax: k_max })
}
