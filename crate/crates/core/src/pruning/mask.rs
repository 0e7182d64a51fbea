use crate::error::{Error, Result};
use crate::nets::FeedforwardNet;
use crate::Scalar;

/// A pruned configuration derived from trained weights `w0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneState<T> {
    pub w0: Vec<T>,
    pub prunable: Vec<bool>,
    pub mask: Vec<bool>,
    pub p: T,
    /// `‖w0 − w_p‖₂`, the norm of the pruned entries.
    pub r: T,
}

impl<T: Scalar> PruneState<T> {
    /// Weights with masked entries set to zero.
    pub fn pruned_weights(&self) -> Vec<T> {
        self.w0.iter().zip(&self.mask).map(|(&w, &m)| if m { T::zero() } else { w }).collect()
    }

    pub fn masked(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// `round(p · n)` with halves rounded away from zero.
pub fn masked_count<T: Scalar>(p: T, n: usize) -> usize {
    let c = (p.to_f64_lossy() * n as f64).round();
    (c.max(0.0) as usize).min(n)
}

/// Prunable indices sorted by ascending `|w|`, ties broken by lower index.
pub fn magnitude_order<T: Scalar>(w0: &[T], prunable: &[bool]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w0.len()).filter(|&i| prunable[i]).collect();
    idx.sort_by(|&a, &b| {
        w0[a].abs().partial_cmp(&w0[b].abs()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    idx
}

/// Masks the `round(p · n_prunable)` smallest-magnitude prunable weights.
pub fn magnitude_mask<T: Scalar>(w0: &[T], prunable: &[bool], p: T) -> Result<PruneState<T>> {
    if w0.len() != prunable.len() {
        return Err(Error::DimensionMismatch { expected: w0.len(), got: prunable.len() });
    }
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidArgument(format!("pruning ratio must lie in [0, 1], got {p}")));
    }
    let order = magnitude_order(w0, prunable);
    let count = masked_count(p, order.len());
    let mut mask = vec![false; w0.len()];
    let mut sq = T::zero();
    for &i in &order[..count] {
        mask[i] = true;
        sq += w0[i] * w0[i];
    }
    Ok(PruneState { w0: w0.to_vec(), prunable: prunable.to_vec(), mask, p, r: sq.sqrt() })
}

/// `R(p)` as a right-continuous step function backed by prefix sums of
/// squared sorted magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct RofP<T> {
    prefix: Vec<T>,
}

impl<T: Scalar> RofP<T> {
    pub fn eval(&self, p: T) -> T {
        let n = self.prefix.len() - 1;
        let p = p.max(T::zero()).min(T::one());
        self.prefix[masked_count(p, n)].sqrt()
    }

    /// `R(p)²` for exactly `count` pruned weights.
    pub fn squared_at_count(&self, count: usize) -> T {
        self.prefix[count]
    }

    pub fn prunable_count(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn as_fn(&self) -> impl Fn(T) -> T + '_ {
        move |p| self.eval(p)
    }
}

pub fn r_of_p<T: Scalar>(w0: &[T], prunable: &[bool]) -> RofP<T> {
    let order = magnitude_order(w0, prunable);
    let mut prefix = Vec::with_capacity(order.len() + 1);
    prefix.push(T::zero());
    let mut acc = T::zero();
    for &i in &order {
        acc += w0[i] * w0[i];
        prefix.push(acc);
    }
    RofP { prefix }
}

/// Copy of `net` with every masked weight set to exactly zero.
pub fn apply_mask<T: Scalar>(net: &FeedforwardNet<T>, state: &PruneState<T>) -> Result<FeedforwardNet<T>> {
    let d = net.num_params();
    if state.mask.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: state.mask.len() });
    }
    let mut flat = net.flatten();
    for (w, &m) in flat.iter_mut().zip(&state.mask) {
        if m {
            *w = T::zero();
        }
    }
    FeedforwardNet::from_flat(net.widths(), &flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_two_of_four() {
        let w = [0.1f64, -0.5, 0.02, 2.0];
        let s = magnitude_mask(&w, &[true; 4], 0.5).unwrap();
        assert_eq!(s.mask, vec![true, false, true, false]);
        assert!((s.r - (0.02f64.powi(2) + 0.01).sqrt()).abs() < 1e-15);
        assert!((s.r - 0.101980).abs() < 1e-6);
    }

    #[test]
    fn boundary_ratios() {
        let w = [0.3f64, -4.0, 1.0, 0.5];
        let prunable = [true, true, false, true];
        let none = magnitude_mask(&w, &prunable, 0.0).unwrap();
        assert_eq!(none.masked(), 0);
        assert_eq!(none.r, 0.0);
        let all = magnitude_mask(&w, &prunable, 1.0).unwrap();
        assert_eq!(all.mask, vec![true, true, false, true]);
        assert!((all.r - (0.09f64 + 16.0 + 0.25).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let s = magnitude_mask(&[1.0f64, -1.0, 1.0], &[true; 3], 1.0 / 3.0).unwrap();
        assert_eq!(s.mask, vec![true, false, false]);
    }

    #[test]
    fn prefix_norms() {
        let r = r_of_p(&[3.0f64, 4.0], &[true, true]);
        assert_eq!(r.eval(0.5), 3.0);
        assert_eq!(r.eval(1.0), 5.0);
        let z = r_of_p(&[0.0f64; 5], &[true; 5]);
        assert!((0..=10).all(|i| z.eval(i as f64 / 10.0) == 0.0));
    }

    #[test]
    fn half_rounds_away_from_zero() {
        assert_eq!(masked_count(0.5f64, 3), 2);
        assert_eq!(masked_count(0.5f64, 5), 3);
        assert_eq!(masked_count(0.0f64, 5), 0);
    }

    #[test]
    fn rejects_ratio_out_of_range() {
        assert!(magnitude_mask(&[1.0f64], &[true], 1.5).is_err());
        assert!(magnitude_mask(&[1.0f64], &[true, true], 0.5).is_err());
    }
}
