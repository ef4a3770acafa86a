//! Linear-affine brackets for first-order Hamiltonian field theories in local
//! coordinates.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: symbolic expressions (parse, evaluate, differentiate, simplify).
//! - [`bundle`]: charts, Hamiltonian sections, currents and their differentials.
//! - [`bracket`]: the linear-affine and bilinear brackets, the Lie bracket of
//!   currents, Hamiltonian fields and the affine representation residual.
//! - [`models`]: built-in theories (time-dependent mechanics, continua,
//!   Yang–Mills).
//! - [`solver`]: RK4 and method-of-lines integrators for the
//!   Hamilton–deDonder–Weyl equations, plus residual evaluation.
//! - [`verify`]: executable checks of the bracket identities and of the
//!   bracket form of the field equations.
//! - [`cli`]: model files and subcommands behind the `fieldbracket` binary.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bracket;
pub mod bundle;
pub mod cli;
pub mod error;
pub mod expr;
pub mod models;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
