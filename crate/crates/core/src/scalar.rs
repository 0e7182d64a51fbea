//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// All algorithms are written against this trait. The pipeline and the CLI
/// run in `f64`; the narrower type is usable for quick geometry sweeps but not
/// for the finite-difference Hessian, whose step size assumes double precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Out-of-range values saturate to infinity.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| if x > 0.0 { Self::infinity() } else { Self::neg_infinity() })
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Eigenvalue standing in for a zero or vanishingly small Hessian eigenvalue.
    #[inline]
    fn sentinel() -> Self {
        Self::of(SENTINEL)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Value written in place of "important" (zero or vanishing) eigenvalues.
pub const SENTINEL: f64 = 1e-30;

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub(crate) fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
