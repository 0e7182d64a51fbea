//! Lanczos tridiagonalization, stochastic Lanczos quadrature (SLQ) density
//! estimation, and the conversion of an estimated density back into a full
//! eigenvalue multiset.

mod important;
mod lanczos;
mod slq;
mod spectrum;

pub use important::{count_important, ROW_THRESHOLD};
pub use lanczos::{lanczos, ritz, RitzSet, Tridiagonal};
pub use slq::{slq_density, SlqParams, SpectralDensity};
pub use spectrum::{
    convexify, exact_spectrum, reconstruct_spectrum, Spectrum, SpectrumSource, EXACT_LIMIT, IMPORTANT_THRESHOLD,
};
