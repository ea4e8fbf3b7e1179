//! Frobenius expansions and numerical solution of the compiled watermelon
//! operators, producing the sector probabilities `f_k(θ)`.

mod dopri;
mod frobenius;
mod operator;
mod output;
mod watermelon;

pub use dopri::{dopri5, Tolerance};
pub use frobenius::{frobenius_series, indicial_polynomial, local_exponents, Exponent, FrobeniusSolution};
pub use operator::{integrate, integrate_log, ExpansionPoint, NumericOde};
pub use output::{curve_csv, curves_svg};
pub use watermelon::{
    chebyshev_theta_grid, s_of_theta, solve_watermelon, KernelBasis, KernelFit, McPoint, SolutionCurve,
    WatermelonSolution, DEFAULT_GRID,
};

use thiserror::Error;

use crate::arith::ArithError;
use crate::bpz::BpzError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error(transparent)]
    Bpz(#[from] BpzError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("irregular singular point at {0}")]
    Irregular(String),
    #[error("{exponent} is not a local exponent (indicial residual {residual:e})")]
    NotAnExponent { exponent: f64, residual: f64 },
    #[error("resonance: exponent {exponent} meets another exponent at integer gap {gap}")]
    Resonance { exponent: String, gap: usize },
    #[error("step size underflow at {at}; the point is too close to a singularity, hand off to a Frobenius expansion there")]
    StepUnderflow { at: f64 },
    #[error("integration interval contains the singular point {point}")]
    SingularInterval { point: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ill-conditioned system: condition number {condition:e} (singular values {singular_values:?})")]
    IllConditioned { condition: f64, singular_values: Vec<f64> },
    #[error("no convergence: {0}")]
    NoConvergence(String),
}
