//! Normalized solutions of  -Δu + V u + λ u = |u|^{p-2} u,  |u|_2 = ρ.

pub mod barycenter;
pub mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod ground_state;
pub mod hypothesis;
pub mod interp;
pub mod io;
pub mod linalg;
pub mod potential;
pub mod scaling;
mod spectral;
pub mod solver;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::{CartesianGrid, Grid, RadialGrid};
