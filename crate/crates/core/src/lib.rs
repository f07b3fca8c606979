//! Numerical laboratory for contact Hamiltonian dynamics.
//!
//! Contact flows with conformal-factor transport, Hofer-type path energies,
//! symplectization lifts, translated points and energy–capacity audits on a
//! small catalog of contact manifolds.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod energy;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod hamiltonian;
pub mod linalg;
pub mod random;
pub mod symplectization;
pub mod terms;
pub mod translated;

pub use error::{ContactError, Result};
pub use geometry::{ManifoldModel, Point};
pub use hamiltonian::{HamRef, TimeHamiltonian};
