//! Exact scalar arithmetic: rationals, sparse multivariate polynomials and
//! normalized rational functions.

mod gcd;
mod monomial;
mod poly;
mod ratfunc;
mod rational;
mod symbol;

pub use gcd::{content_in, gcd, gcd_dense};
pub use monomial::Monomial;
pub use poly::MultiPoly;
pub use ratfunc::{rf_arith, rf_derivative, rf_substitute, ArithOp, RationalFunction};
pub use rational::Rational;
pub use symbol::Symbol;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator vanishes identically after substitution")]
    ZeroDenominator,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unbound symbol `{0}` in evaluation")]
    UnboundSymbol(String),
    #[error("cannot parse `{0}`")]
    Parse(String),
    #[error("malformed serialized value: {0}")]
    Format(String),
}
