//! Differential operators obtained by substituting first-order
//! realizations of the Virasoro modes into singular vectors.

mod diffop;
mod multi;
mod ode;

use thiserror::Error;

pub use diffop::{DiffOpRS, MultiDiffOp};
pub use multi::{
    apply_to_powerproduct, build_bpz_system, compile_d_multi, ell_spectators, z0_bar, z0_build, BpzSystem, Layout,
    PowerProduct, Spectator,
};
pub use ode::{
    chebyshev, compile_d, compile_delta0, ell0_rs, eval_dense, fuchsian_check, kappa, kappa_symbol, leading_ratio,
    nu_symbol, ode_json, r_symbol, restrict_to_s, s_symbol, ChebyshevKind, FuchsianReport, OdeOperator,
    SingularPoint,
};

use crate::arith::ArithError;
use crate::virasoro::VirasoroError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BpzError {
    #[error(transparent)]
    Virasoro(#[from] VirasoroError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("mode {0} has no first-order realization here; only negative modes are used")]
    NonNegativeMode(i32),
    #[error("the number of strands must be at least 1, got {0}")]
    InvalidOrder(u32),
    #[error("κ must be nonzero")]
    ZeroKappa,
    #[error("the operator is zero")]
    ZeroOperator,
    #[error("coefficients still depend on κ or are not polynomial")]
    NotNumeric,
    #[error("r-degree residue check failed: {0}")]
    Residue(String),
    #[error("spectator {k} violates {equation}")]
    Constraint { k: usize, equation: String },
}
