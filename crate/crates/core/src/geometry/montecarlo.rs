use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, orthonormalize, symmetric_eigenvalues};
use crate::operators::DenseSymmetric;
use crate::rng::{normal, normal_vec, rng};
use crate::scalar::dot;
use crate::Scalar;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub mean: T,
    pub std_err: T,
    pub samples: usize,
}

fn summarize<T: Scalar>(sum: f64, sum_sq: f64, n: usize) -> McEstimate<T> {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    McEstimate { mean: T::of(mean), std_err: T::of((var / nf).sqrt()), samples: n }
}

/// Monte Carlo estimate of the Gaussian width `E sup_{x∈S} ⟨g, x⟩` of
/// `S = {x : ½ xᵀHx ≤ ε}`.
///
/// The supremum of a linear functional over the ellipsoid is
/// `sqrt(2ε gᵀH⁻¹g)`. By rotation invariance of the Gaussian, `gᵀH⁻¹g` has the
/// law of `Σ zᵢ²/λᵢ` with `z` standard normal, so one eigendecomposition
/// replaces a linear solve per sample.
pub fn mc_width_oracle<T: Scalar>(h: &DenseSymmetric<T>, eps: T, samples: usize, seed: u64) -> Result<McEstimate<T>> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!("mc width oracle needs >= 1000 samples, got {samples}")));
    }
    let eig = symmetric_eigenvalues(h.dim(), h.entries().to_vec())?;
    if eig.iter().any(|&l| !(l > T::zero())) {
        return Err(Error::NotPositiveDefinite);
    }
    let inv: Vec<f64> = eig.iter().map(|&l| 1.0 / l.to_f64_lossy()).collect();
    let two_eps = 2.0 * eps.to_f64_lossy();
    let mut r = rng(seed);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let q: f64 = inv.iter().map(|&w| {
            let z: f64 = normal(&mut r);
            w * z * z
        }).sum();
        let x = (two_eps * q).sqrt();
        sum += x;
        sum_sq += x * x;
    }
    Ok(summarize(sum, sum_sq, samples))
}

/// Jensen gap `E sqrt(gᵀQg) / sqrt(E gᵀQg) − 1` for PSD `Q`.
///
/// The numerator is sampled through the eigenvalues of `Q` (rotation
/// invariance); the denominator uses `E gᵀQg = Tr Q` exactly.
pub fn jensen_ratio<T: Scalar>(q: &DenseSymmetric<T>, samples: usize, seed: u64) -> Result<T> {
    if samples == 0 {
        return Err(Error::InvalidArgument("jensen ratio needs samples >= 1".into()));
    }
    let eig: Vec<f64> = symmetric_eigenvalues(q.dim(), q.entries().to_vec())?
        .into_iter()
        .map(|l| l.to_f64_lossy().max(0.0))
        .collect();
    let trace: f64 = eig.iter().sum();
    if !(trace > 0.0) {
        return Err(Error::InvalidArgument("jensen ratio needs a nonzero PSD matrix".into()));
    }
    let mut r = rng(seed);
    let mut sum = 0.0f64;
    for _ in 0..samples {
        let f: f64 = eig.iter().map(|&l| {
            let z: f64 = normal(&mut r);
            l * z * z
        }).sum();
        sum += f.sqrt();
    }
    Ok(T::of(sum / samples as f64 / trace.sqrt() - 1.0))
}

/// Empirical probability that a random affine subspace meets the sublevel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeEstimate {
    /// Fraction of trials whose subspace intersects the set.
    pub probability: f64,
    pub std_err: f64,
    pub trials: usize,
}

impl EscapeEstimate {
    pub fn miss_probability(&self) -> f64 {
        1.0 - self.probability
    }
}

const MAX_REDRAWS: usize = 16;

/// Gordon-escape Monte Carlo.
///
/// Each trial draws a uniformly random `(D − k)`-dimensional affine subspace
/// through `wp` and declares an intersection iff the quadratic
/// `½ (w − w0)ᵀH(w − w0)` attains a value `≤ eps` on it. The minimum over the
/// subspace `wp + Vz` solves `(VᵀHV) z = −VᵀH(wp − w0)`.
pub fn escape_mc<T: Scalar>(
    h: &DenseSymmetric<T>,
    eps: T,
    w0: &[T],
    wp: &[T],
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<EscapeEstimate> {
    let dim = h.dim();
    if w0.len() != dim || wp.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: w0.len().min(wp.len()) });
    }
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!("escape needs 1 <= k <= D, got k={k}, D={dim}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("escape needs trials >= 1".into()));
    }
    let offset: Vec<T> = wp.iter().zip(w0).map(|(&p, &o)| p - o).collect();
    let mut h_off = vec![T::zero(); dim];
    h.matvec(&offset, &mut h_off)?;
    let base = T::of(0.5) * dot(&offset, &h_off);
    let sub = dim - k;
    if sub == 0 {
        let hit = base <= eps;
        return Ok(EscapeEstimate { probability: if hit { 1.0 } else { 0.0 }, std_err: 0.0, trials });
    }

    let mut r = rng(seed);
    let mut hits = 0usize;
    let mut hv = vec![T::zero(); dim];
    for _ in 0..trials {
        let mut attempt = 0;
        let reduction = loop {
            attempt += 1;
            if attempt > MAX_REDRAWS {
                return Err(Error::NotPositiveDefinite);
            }
            let mut basis: Vec<Vec<T>> = (0..sub).map(|_| normal_vec(&mut r, dim)).collect();
            if !orthonormalize(&mut basis) {
                continue;
            }
            // Reduced system M = VᵀHV, b = VᵀH(wp − w0).
            let mut m = vec![T::zero(); sub * sub];
            let mut b = vec![T::zero(); sub];
            for (j, vj) in basis.iter().enumerate() {
                h.matvec(vj, &mut hv)?;
                for (i, vi) in basis.iter().enumerate().take(j + 1) {
                    let x = dot(vi, &hv);
                    m[i * sub + j] = x;
                    m[j * sub + i] = x;
                }
                b[j] = dot(vj, &h_off);
            }
            if cholesky(sub, &mut m).is_err() {
                continue;
            }
            let mut z = b.clone();
            cholesky_solve(sub, &m, &mut z);
            break T::of(0.5) * dot(&b, &z);
        };
        let min = base - reduction;
        if min <= eps {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    Ok(EscapeEstimate { probability: p, std_err: (p * (1.0 - p) / trials as f64).sqrt(), trials })
}

/// Lower bound on the miss probability, `1 − 3.5 exp(−(k/√(k+1) − w)²/18)`,
/// meaningful for `k > w²`.
pub fn escape_bound(k: usize, width: f64) -> f64 {
    let kf = k as f64;
    let gap = kf / (kf + 1.0).sqrt() - width;
    1.0 - 3.5 * (-(gap * gap) / 18.0).exp()
}
