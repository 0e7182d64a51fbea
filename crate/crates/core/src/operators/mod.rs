//! Symmetric linear operators: the only view spectral and geometric code has
//! of a Hessian.

mod dense;

pub use dense::{make_dense_operator, DenseOperator, DenseSymmetric};

use crate::error::{Error, Result};
use crate::rng::{rng, unit_vec};
use crate::scalar::dot;
use crate::Scalar;

/// A dimension plus a matrix-vector product.
///
/// Implementations must be pure (`apply` on the same input always yields
/// bitwise-identical output) and re-entrant.
pub trait SymmetricOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`.
    fn apply_into(&self, x: &[T], y: &mut [T]) -> Result<()>;

    fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::zero(); self.dim()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }
}

impl<T: Scalar, O: SymmetricOperator<T> + ?Sized> SymmetricOperator<T> for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        (**self).apply_into(x, y)
    }
}

pub(crate) fn check_dims(expected: usize, x: usize, y: usize) -> Result<()> {
    if x != expected {
        return Err(Error::DimensionMismatch { expected, got: x });
    }
    if y != expected {
        return Err(Error::DimensionMismatch { expected, got: y });
    }
    Ok(())
}

/// Largest `|⟨Au, v⟩ − ⟨u, Av⟩|` over `probes` random unit pairs.
pub fn check_symmetry<T: Scalar, O: SymmetricOperator<T> + ?Sized>(op: &O, probes: usize, seed: u64) -> Result<T> {
    if probes == 0 {
        return Err(Error::InvalidArgument("probes must be >= 1".into()));
    }
    let n = op.dim();
    let mut r = rng(seed);
    let mut worst = T::zero();
    for _ in 0..probes {
        let u = unit_vec::<T>(&mut r, n);
        let v = unit_vec::<T>(&mut r, n);
        let au = op.apply(&u)?;
        let av = op.apply(&v)?;
        let gap = (dot(&au, &v) - dot(&u, &av)).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}

/// Relative symmetry gate used before handing an operator to spectral code:
/// every probe must satisfy `gap ≤ tol · (‖Au‖‖v‖ + 1e-30)`.
pub fn passes_symmetry_gate<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    probes: usize,
    tol: T,
    seed: u64,
) -> Result<bool> {
    let n = op.dim();
    let mut r = rng(seed);
    for _ in 0..probes {
        let u = unit_vec::<T>(&mut r, n);
        let v = unit_vec::<T>(&mut r, n);
        let au = op.apply(&u)?;
        let av = op.apply(&v)?;
        let gap = (dot(&au, &v) - dot(&u, &av)).abs();
        if gap > tol * (crate::scalar::norm(&au) + T::of(1e-30)) {
            return Ok(false);
        }
    }
    Ok(true)
}
