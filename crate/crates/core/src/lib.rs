//! Numerical pipeline for the generalized Possio integral equation of
//! two-dimensional subsonic unsteady aerodynamics.
//!
//! Given a downwash `w(x, t)` on the chord `[-1, 1]`, the crate computes the
//! pressure-doublet density `p(xi, s)` in the Laplace domain and rebuilds the
//! disturbance potential `phi(x, y, t)` by Bromwich inversion.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`). The aliases at
//! the crate root fix the production precision `f64`.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod cheb;
pub mod error;
pub mod field;
pub mod flowconfig;
pub mod fredholm;
pub mod kernel;
pub mod laplace;
pub mod linalg;
pub mod quad;
pub mod real;
pub mod specfun;
pub mod verify;

pub use error::{Error, ErrorCategory, Result};
pub use real::Real;

use num_complex::Complex;

pub type C64 = Complex<f64>;

pub type FlowParams = flowconfig::FlowParams<f64>;
pub type LaplaceParameter = flowconfig::LaplaceParameter<f64>;
pub type ChebGrid = cheb::ChebGrid<f64>;
pub type ChordFunction = cheb::ChordFunction<f64>;
pub type BesselEval = specfun::BesselEval<f64>;
pub type KernelEval = kernel::KernelEval<f64>;
pub type KernelTable = kernel::KernelTable<f64>;
pub type DiscretizedOperator = fredholm::DiscretizedOperator<f64>;
pub type PressureDensity = fredholm::PressureDensity<f64>;
pub type DeterminantScan = fredholm::DeterminantScan<f64>;
pub type DownwashSpec = laplace::DownwashSpec<f64>;
pub type FieldSample = field::FieldSample<f64>;
