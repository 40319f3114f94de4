//! Lensless compressive imaging: simulate single-sensor acquisition with
//! permuted-Hadamard aperture patterns and reconstruct images with SLOPE
//! (shrinkage of local overlapping-patch transform coefficients).
//!
//! The pipeline:
//! 1. [`hadamard`] builds the sensing matrix as a fast implicit operator
//!    with exactly orthonormal rows (A A^T = I).
//! 2. [`acquisition`] simulates ideal and physical ({0,1}-transmittance)
//!    measurements and the calibration between them.
//! 3. [`solver`] reconstructs by alternating a projection-style data update
//!    with soft-thresholding of overlapping-patch DCT coefficients
//!    ([`patch`], [`shrinkage`]). For step sizes in (0, 2] the iterate
//!    error is monotonically non-increasing, so the solver can be stopped
//!    at any iteration.
//!
//! All numerics are generic over the scalar type via [`real::Real`]
//! (`f32` or `f64`); the `*64` aliases below are the usual entry points.

pub mod acquisition;
pub mod error;
pub mod hadamard;
pub mod image;
pub mod measfile;
pub mod metrics;
pub mod patch;
pub mod pnm;
pub mod real;
pub mod rng;
pub mod scene;
pub mod shrinkage;
pub mod solver;

pub use error::{Error, Result};
pub use real::Real;

/// Concrete double-precision aliases (the default working precision).
pub type ImagePlane64 = image::ImagePlane<f64>;
pub type HadamardOperator64 = hadamard::HadamardOperator<f64>;
pub type MeasurementVector64 = hadamard::MeasurementVector<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;

/// Single-precision aliases.
pub type ImagePlane32 = image::ImagePlane<f32>;
pub type HadamardOperator32 = hadamard::HadamardOperator<f32>;
pub type MeasurementVector32 = hadamard::MeasurementVector<f32>;
pub type SolverConfig32 = solver::SolverConfig<f32>;
