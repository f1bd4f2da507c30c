// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod envelope;
pub mod error;
pub mod evolve;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod linalg;
pub mod norms;
pub mod params;
pub mod sampling;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use field::EvenField;
pub use grid::{integrate, make_grid, HalfLineGrid};
pub use groundstate::{discrete_ground_state, ground_state, GroundState};
pub use params::ModelParams;
