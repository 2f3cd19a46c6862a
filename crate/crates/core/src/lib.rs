//! Wall accumulation of active rods in a half-space: a kinetic model with a
//! small translational diffusion ε, its ε → 0 bulk/wall limit, the matched
//! boundary-layer expansion between them, and Monte-Carlo particles.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod asymptotics;
pub mod coefficients;
pub mod decomposition;
pub mod error;
pub mod full_solver;
pub mod grids;
pub mod harness;
pub mod limit_solver;
pub mod linalg;
pub mod particles;
pub mod spectral;
pub mod transport;

pub use coefficients::{AngularCoefficient, ModelParams};
pub use error::{Error, Result};
pub use grids::{PhaseField, PhaseGrid, PhiGrid, YGrid};
