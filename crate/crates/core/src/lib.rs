//! Lie-symmetry analysis toolkit for the generalized thin film equation
//! u_t = -[K(u)u_xxx]_x + [D(u)u_x]_x + F(u).
//!
//! The crate is organised around a small exact-arithmetic expression kernel
//! ([`symexpr`]) on which everything else is built:
//!
//! - [`model`] — structured coefficient triplets (K, D, F) and the equivalent
//!   cross-diffusion system forms;
//! - [`prolong`] — second prolongation of vector fields, invariance residuals
//!   and mechanical derivation of the determining system;
//! - [`classify`] — the group-classification decision procedure with
//!   normalizing equivalence transforms;
//! - [`reduce`] — the five symmetry reductions of the power-law system to ODEs;
//! - [`exact`] — a catalog of closed-form solutions with residual certification;
//! - [`numerics`] — adaptive ODE integration and a method-of-lines PDE solver
//!   used as independent numerical oracles.

pub mod classify;
pub mod exact;
pub mod model;
pub mod numerics;
pub mod prolong;
pub mod rat;
pub mod reduce;
pub mod symexpr;
pub mod verify;

pub use rat::Rat;
pub use symexpr::{Dep, Expr, ExprError, Indep, Jet};
