//! Simulator and diagnostics harness for the isotropic Landau model
//!
//! ```text
//! u_t = div(a[u] grad u - u grad a[u]),    -Laplace a = u    on R^3,
//! ```
//!
//! together with its nondivergence variant u_t = a[u] Laplace(u) + alpha u^2.
//! The crate provides cell-centered radial and box discretizations, free-space
//! Poisson solvers for the Coulomb potential a[u], conservative explicit time
//! stepping, and a battery of monitors for the conservation laws, entropy
//! structure, functional inequalities and De Giorgi iteration quantities that
//! constrain solutions of this model.

pub mod error;
pub mod parallel;

pub mod barrier;
pub mod degiorgi;
pub mod diagnostics;
pub mod dynamics;
pub mod fields;
pub mod inequalities;
pub mod io;
pub mod potential;

pub use error::{Error, Result};
