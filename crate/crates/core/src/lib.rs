//! Predicts how far a trained network can be pruned from the geometry of its
//! loss landscape.
//!
//! The loss sublevel set around trained weights `w0` is modelled as an
//! ellipsoid from the Hessian spectrum. Its Gaussian width, projected onto the
//! unit sphere around a pruned point `w_p`, gives a predicted prunable
//! fraction `T(p)`; the fixed point `T(p*) = p*` is the prediction. The crate
//! also trains the networks, prunes them, and measures the actual limit.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`, which is what the pipeline uses.

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nets;
pub mod operators;
pub mod pipeline;
pub mod pruning;
pub mod rng;
mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Scalar, SENTINEL};

pub type DenseSymmetricF64 = operators::DenseSymmetric<f64>;
pub type SpectrumF64 = spectral::Spectrum<f64>;
pub type SpectralDensityF64 = spectral::SpectralDensity<f64>;
pub type TridiagonalF64 = spectral::Tridiagonal<f64>;
pub type EllipsoidSpecF64 = geometry::EllipsoidSpec<f64>;
pub type ThresholdCurveF64 = geometry::ThresholdCurve<f64>;
pub type FeedforwardNetF64 = nets::FeedforwardNet<f64>;
pub type DatasetF64 = nets::Dataset<f64>;
pub type PruneStateF64 = pruning::PruneState<f64>;

pub type DenseSymmetricF32 = operators::DenseSymmetric<f32>;
pub type SpectrumF32 = spectral::Spectrum<f32>;
pub type EllipsoidSpecF32 = geometry::EllipsoidSpec<f32>;
