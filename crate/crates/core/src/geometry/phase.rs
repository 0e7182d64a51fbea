use std::io::Write;

use serde::{Deserialize, Serialize};

use super::width::{threshold, EllipsoidSpec};
use crate::error::{Error, Result};
use crate::Scalar;

/// Number of uniformly spaced points at which the curve is tabulated.
pub const CURVE_POINTS: usize = 200;

/// Why the bisection had no bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degenerate {
    /// `T(p) > p` on all of `(0, 1)`: everything is prunable.
    AboveDiagonal,
    /// `T(p) < p` on all of `(0, 1)`.
    BelowDiagonal,
}

/// Sampled `(p, R(p), T(p))` triples and the solved crossing `T(p*) = p*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurve<T> {
    pub p_grid: Vec<T>,
    pub r_of_p: Vec<T>,
    pub t_of_p: Vec<T>,
    pub p_star: T,
    /// Final bisection bracket `[lo, hi]` with `g(lo) ≥ 0 ≥ g(hi)`.
    pub bracket: (T, T),
    pub degenerate: Option<Degenerate>,
}

/// JSON sidecar written next to the curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSidecar {
    pub p_star: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub eps_hat: f64,
    pub important_count: usize,
}

impl<T: Scalar> ThresholdCurve<T> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "p,R,T")?;
        for ((p, r), t) in self.p_grid.iter().zip(&self.r_of_p).zip(&self.t_of_p) {
            writeln!(w, "{:e},{:e},{:e}", p.to_f64_lossy(), r.to_f64_lossy(), t.to_f64_lossy())?;
        }
        Ok(())
    }

    pub fn sidecar(&self, e: &EllipsoidSpec<T>) -> CurveSidecar {
        CurveSidecar {
            p_star: self.p_star.to_f64_lossy(),
            dim: e.dim(),
            eps_hat: e.eps_hat().to_f64_lossy(),
            important_count: e.spectrum().important_count,
        }
    }
}

/// Finds `p*` with `threshold(e, R(p*)) = p*` by bisection.
///
/// `g(p) = T(R(p)) − p` is strictly decreasing whenever `R` is
/// non-decreasing, so the root is unique. `R` may be a step function; the
/// bisection then converges onto the jump where `g` changes sign.
pub fn solve_phase_transition<T: Scalar, F: Fn(T) -> T>(e: &EllipsoidSpec<T>, r_of_p: F, tol: T) -> Result<ThresholdCurve<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let g = |p: T| threshold(e, r_of_p(p)) - p;

    let p_grid: Vec<T> = (0..CURVE_POINTS).map(|i| (T::of_usize(i) + T::of(0.5)) / T::of_usize(CURVE_POINTS)).collect();
    let r_vals: Vec<T> = p_grid.iter().map(|&p| r_of_p(p)).collect();
    let t_vals: Vec<T> = r_vals.iter().map(|&r| threshold(e, r)).collect();

    let (mut lo, mut hi) = (T::zero(), T::one());
    let (p_star, degenerate) = if g(hi) >= T::zero() {
        (T::one(), Some(Degenerate::AboveDiagonal))
    } else if g(lo) <= T::zero() {
        (T::zero(), Some(Degenerate::BelowDiagonal))
    } else {
        let half = T::of(0.5);
        while hi - lo > tol {
            let mid = (lo + hi) * half;
            if g(mid) >= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ((lo + hi) * half, None)
    };
    if degenerate.is_some() {
        lo = p_star;
        hi = p_star;
    }
    Ok(ThresholdCurve { p_grid, r_of_p: r_vals, t_of_p: t_vals, p_star, bracket: (lo, hi), degenerate })
}

/// Phase-transition point when every weight, and hence every pruning
/// distance, is `c` times larger.
pub fn magnitude_scale_experiment<T: Scalar, F: Fn(T) -> T>(
    e: &EllipsoidSpec<T>,
    r_of_p: F,
    factors: &[T],
    tol: T,
) -> Result<Vec<T>> {
    factors
        .iter()
        .map(|&c| {
            if !(c >= T::one()) {
                return Err(Error::InvalidArgument(format!("scale factors must be >= 1, got {c}")));
            }
            solve_phase_transition(e, |p| c * r_of_p(p), tol).map(|curve| curve.p_star)
        })
        .collect()
}
