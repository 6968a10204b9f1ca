//! Radial Lane-Emden systems of Riesz potential type,
//! `u = I_alpha[v^q]`, `v = I_alpha[u^p]` in `R^n`: exponent algebra, a
//! discretized radial Riesz potential, fixed-point and singular solvers, ODE
//! shooting for `alpha = 2`, and far-field decay analysis.
//!
//! Everything numerical is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod error;
pub mod exponents;
pub mod oracle;
pub mod quadrature;
pub mod real;
pub mod riesz;
pub mod shooting;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

pub type Params = exponents::Params<f64>;
pub type RegimeReport = exponents::RegimeReport<f64>;
pub type GridSpec = riesz::GridSpec<f64>;
pub type RadialGrid = riesz::RadialGrid<f64>;
pub type RadialField = riesz::RadialField<f64>;
pub type KernelOperator = riesz::KernelOperator<f64>;
pub type SolveConfig = solver::SolveConfig<f64>;
pub type SolutionPair = solver::SolutionPair<f64>;
pub type ShotConfig = shooting::ShotConfig<f64>;
pub type Trajectory = shooting::Trajectory<f64>;
pub type DecayFit = decay::DecayFit<f64>;
pub type EnvelopeReport = decay::EnvelopeReport<f64>;
