//! Grids, field storage, quadrature and norm/moment primitives.

mod field;
mod grid;
mod ops;

pub use field::{Field, Profile, Weight};
pub use grid::{CartesianGrid3, Grid, RadialGrid};
pub use ops::{
    first_moment, integrate, integrate_with, lp_norm, lp_weak_norm, mass, second_moment,
    weighted_fisher,
};
