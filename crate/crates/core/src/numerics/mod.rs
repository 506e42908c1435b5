//! Numerical oracles: adaptive ODE integration, root extraction, and a
//! method-of-lines solver for the full PDE family.

pub mod ode;
pub mod pde;
pub mod roots;

pub use ode::{integrate, OdeOptions, Trajectory};
pub use pde::{convergence_study, detect_blowup, simulate, BoundaryMode, SimConfig, SimResult};
pub use roots::{polynomial_roots, real_roots};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum NumericsError {
    #[error("time step underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget exhausted")]
    StepBudget,
    #[error("leading coefficient vanished (singular right-hand side)")]
    SingularRhs,
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("grid too coarse: need at least 9 points")]
    GridTooCoarse,
    #[error(transparent)]
    Expr(#[from] crate::symexpr::ExprError),
}
