//! Chernoff product-formula approximation of the heat semigroup on smooth
//! bounded domains with Robin, Neumann and Dirichlet boundary conditions.
//!
//! One step of the Robin scheme extends the current iterate from the closed
//! domain to the whole space, applies the free-space Gaussian semigroup for
//! the step length and restricts back:
//!
//! ```text
//! u  ↦  R · G₀(t/n) · E_β · u        (repeated n times)
//! ```
//!
//! Dirichlet variants replace `E_β` by the odd reflection `E_D` and the
//! restriction by an interior cutoff, or use extension by zero together with
//! the domain indicator.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod chernoff;
pub mod config;
pub mod error;
pub mod experiment;
pub mod extension;
pub mod field;
pub mod geometry;
pub mod heat_kernel;
mod numeric;
pub mod reference;
pub mod selftest;
mod special;

pub use error::{Error, Result};
pub use numeric::fit_slope;
