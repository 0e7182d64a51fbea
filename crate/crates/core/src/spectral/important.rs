use crate::error::{Error, Result};
use crate::operators::SymmetricOperator;
use crate::Scalar;

/// A probed Hessian row is important when its L1 norm is at most this
/// fraction of the largest probed row norm.
pub const ROW_THRESHOLD: f64 = 1e-8;

/// Estimates how many Hessian eigenvalues are zero or vanishingly small.
///
/// Weights are sorted by magnitude and split into `parts` contiguous groups;
/// the Hessian row of the smallest weight in each group is probed with one
/// operator application on a unit vector. The fraction of probed rows whose
/// L1 norm falls under [`ROW_THRESHOLD`] is scaled up to `D`.
pub fn count_important<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    weights: &[T],
    parts: usize,
) -> Result<usize> {
    let n = op.dim();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    if parts == 0 {
        return Err(Error::InvalidArgument("parts must be >= 1".into()));
    }
    if n == 0 {
        return Ok(0);
    }
    let parts = parts.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[a].abs().partial_cmp(&weights[b].abs()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

    let mut basis = vec![T::zero(); n];
    let mut row = vec![T::zero(); n];
    let mut norms = Vec::with_capacity(parts);
    for g in 0..parts {
        let start = g * n / parts;
        let idx = order[start];
        basis[idx] = T::one();
        op.apply_into(&basis, &mut row)?;
        basis[idx] = T::zero();
        norms.push(row.iter().map(|x| x.abs()).sum::<T>());
    }
    let max = norms.iter().copied().fold(T::zero(), T::max);
    let cut = T::of(ROW_THRESHOLD) * max;
    let flat = norms.iter().filter(|&&x| x <= cut).count();
    let estimate = (flat as f64 / parts as f64 * n as f64).round() as usize;
    Ok(estimate.min(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DenseSymmetric;

    #[test]
    fn full_rank_quadratic_has_none() {
        let diag: Vec<f64> = (1..=20).map(f64::from).collect();
        let h = DenseSymmetric::from_diagonal(&diag);
        let w: Vec<f64> = (0..20).map(|i| 0.1 * i as f64 - 1.0).collect();
        assert_eq!(count_important(&h, &w, 100).unwrap(), 0);
    }

    #[test]
    fn exhaustive_census_counts_zero_rows() {
        let diag = [0.0f64, 2.0, 0.0, 5.0, 1e-12, 3.0];
        let h = DenseSymmetric::from_diagonal(&diag);
        let w = [0.3f64, -0.1, 0.0, 2.0, 0.7, -0.4];
        assert_eq!(count_important(&h, &w, 6).unwrap(), 3);
    }

    #[test]
    fn rejects_zero_parts_and_bad_length() {
        let h = DenseSymmetric::<f64>::identity(3);
        assert!(count_important(&h, &[0.0; 3], 0).is_err());
        assert!(count_important(&h, &[0.0; 2], 3).is_err());
    }
}
