//! The universal enveloping algebra of Vir⁻, Verma-module actions, Kac
//! data and singular vectors.

mod basis;
mod modp;
mod singular;
mod uea;
mod verma;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use basis::{monomial_product, partitions, StandardMonomial};
pub use singular::{bsa_vector, singular_vector, singular_vector_at};
pub use uea::{uea_multiply, UEAElement};
pub use verma::{is_singular, positive_mode_action, verma_action, Affine, VermaVector};

use crate::arith::{ArithError, Rational, RationalFunction, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VirasoroError {
    #[error("Kac labels must be positive, got ({0},{1})")]
    InvalidLabel(u32, u32),
    #[error("τ must be nonzero")]
    ZeroTau,
    #[error("mode L_{0} is not in Vir⁻; use verma_action for non-negative modes")]
    NonNegativeMode(i32),
    #[error("resonance for Δ_{label} at τ = {tau}: {detail}")]
    Resonance { label: KacLabel, tau: Rational, detail: String },
    #[error("reconstruction of Δ_{0} failed: {1}")]
    Reconstruction(KacLabel, String),
    #[error("malformed element: {0}")]
    Format(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A Kac label `(r, s)` with `r, s ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KacLabel {
    pub r: u32,
    pub s: u32,
}

impl KacLabel {
    pub fn new(r: u32, s: u32) -> Result<Self, VirasoroError> {
        if r == 0 || s == 0 {
            return Err(VirasoroError::InvalidLabel(r, s));
        }
        Ok(KacLabel { r, s })
    }

    pub fn level(&self) -> u32 {
        self.r * self.s
    }

    pub fn transpose(&self) -> Self {
        KacLabel { r: self.s, s: self.r }
    }
}

impl fmt::Display for KacLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.r, self.s)
    }
}

pub fn tau_symbol() -> Symbol {
    Symbol::new("tau")
}

/// The indeterminate τ.
pub fn tau() -> RationalFunction {
    RationalFunction::var(tau_symbol())
}

/// `c = 13 - 6(τ + 1/τ)`.
pub fn central_charge(tau: &RationalFunction) -> Result<RationalFunction, VirasoroError> {
    if tau.is_zero() {
        return Err(VirasoroError::ZeroTau);
    }
    let sum = tau + &tau.recip()?;
    Ok(&RationalFunction::from_int(13) - &sum.scale(&Rational::from(6)))
}

/// `h_{r,s} = ((rτ - s)² - (τ - 1)²) / (4τ)`.
pub fn kac_weight(label: KacLabel, tau: &RationalFunction) -> Result<RationalFunction, VirasoroError> {
    if tau.is_zero() {
        return Err(VirasoroError::ZeroTau);
    }
    let one = RationalFunction::one();
    let a = &tau.scale(&Rational::from(label.r as i64)) - &RationalFunction::from_int(label.s as i64);
    let b = tau - &one;
    let num = &(&a * &a) - &(&b * &b);
    Ok(num.checked_div(&tau.scale(&Rational::from(4)))?)
}

/// `[L_m, L_n] = (m-n) L_{m+n} + δ_{m,-n} m(m²-1)/12 c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commutator {
    /// Coefficient of `L_{mode}`.
    pub coefficient: i64,
    pub mode: i64,
    /// Coefficient of the central element.
    pub central: Rational,
}

pub fn commutator(m: i64, n: i64) -> Commutator {
    let central = if m == -n { Rational::new(m * (m * m - 1), 12).unwrap() } else { Rational::zero() };
    Commutator { coefficient: m - n, mode: m + n, central }
}

/// Substitutes `τ ↦ 1/τ` in every coefficient.
pub fn dual_vector(a: &UEAElement) -> UEAElement {
    let mut b = HashMap::new();
    b.insert(tau_symbol(), tau().recip().expect("τ is nonzero"));
    a.map_coefficients(|c| c.substitute(&b)).expect("τ ↦ 1/τ keeps denominators nonzero")
}
