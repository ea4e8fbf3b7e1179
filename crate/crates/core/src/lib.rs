pub mod arith;
pub mod bpz;
pub mod fusion;
pub mod odesolve;
pub mod slemc;
pub mod virasoro;

pub use arith::{ArithError, Monomial, MultiPoly, Rational, RationalFunction, Symbol};
pub use virasoro::{KacLabel, UEAElement};
