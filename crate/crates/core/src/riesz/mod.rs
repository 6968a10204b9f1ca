//! Radial Riesz potential: logarithmic grids, sampled fields with tail
//! models, the reduced kernel and its dense discretization.

mod field;
mod grid;
mod kernel;
mod operator;

pub use field::{RadialField, TailModel};
pub use grid::{GridSpec, RadialGrid};
pub use kernel::{angular_kernel, power_law_constant, KernelProfile, Normalization, ANGULAR_REL_TOL};
pub use operator::KernelOperator;
