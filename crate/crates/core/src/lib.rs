//! Optimal balance for fast-slow Hamiltonian systems with strong gyroscopic forcing.
//!
//! The model is `q' = p`, `p' = Jp - ε ∇V(q)` on `R^{2d} × R^{2d}`. A balanced
//! state for a base point `q*` is found by solving a boundary value problem for
//! a ramped version of the system that starts from the linear regime, where the
//! slow manifold is `p = 0`, and ends at the full nonlinear system.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod jet;
pub mod model;
pub mod ramp;
pub mod slow;
pub mod verify;

pub use error::{Error, Result};
pub use model::{PolynomialPotential, Potential, SmallParam, State};
pub use ramp::Ramp;
