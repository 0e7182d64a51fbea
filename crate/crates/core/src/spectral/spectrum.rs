use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::slq::SpectralDensity;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::operators::DenseSymmetric;
use crate::Scalar;

/// Largest dimension `exact_spectrum` accepts. Householder reduction at this
/// size costs roughly 8.5e10 flops and 128 MB.
pub const EXACT_LIMIT: usize = 4000;

/// An exact eigenvalue counts as important when `|λ| ≤ IMPORTANT_THRESHOLD · max|λ|`.
pub const IMPORTANT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumSource {
    Exact,
    SlqReconstructed,
}

/// Full multiset of `D` eigenvalues, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<T>,
    pub source: SpectrumSource,
    /// Number of zero or vanishingly small eigenvalues.
    pub important_count: usize,
}

impl<T: Scalar> Spectrum<T> {
    /// Sorts `eigenvalues` ascending.
    pub fn new(mut eigenvalues: Vec<T>, source: SpectrumSource, important_count: usize) -> Self {
        sort_ascending(&mut eigenvalues);
        Self { eigenvalues, source, important_count }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> Option<T> {
        self.eigenvalues.first().copied()
    }

    pub fn max(&self) -> Option<T> {
        self.eigenvalues.last().copied()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eigenvalue")?;
        for x in &self.eigenvalues {
            writeln!(w, "{:e}", x.to_f64_lossy())?;
        }
        Ok(())
    }

    /// Reads an `eigenvalue` file. Sentinel entries are counted as important.
    pub fn read_csv<R: BufRead>(r: R, origin: &str, source: SpectrumSource) -> Result<Self> {
        let mut vals = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "eigenvalue" {
                    return Err(Error::Parse {
                        path: origin.to_string(),
                        line: 1,
                        msg: format!("expected header `eigenvalue`, found `{line}`"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let v: f64 = line.trim().parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            vals.push(T::of(v));
        }
        let important = vals.iter().filter(|&&v| v == T::sentinel()).count();
        Ok(Self::new(vals, source, important))
    }

    /// Alternative to [`convexify`]: negative and zero eigenvalues are
    /// replaced by the sentinel instead of being reflected.
    pub fn clamp_to_sentinel(&self) -> Self {
        let mut out = self.eigenvalues.clone();
        for x in out.iter_mut() {
            if *x <= T::zero() {
                *x = T::sentinel();
            }
        }
        let sentinels = out.iter().filter(|&&v| v == T::sentinel()).count();
        Self::new(out, self.source, self.important_count.max(sentinels))
    }
}

fn sort_ascending<T: Scalar>(v: &mut [T]) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
}

/// Full eigendecomposition of a dense matrix (`D ≤ EXACT_LIMIT`).
pub fn exact_spectrum<T: Scalar>(m: &DenseSymmetric<T>) -> Result<Spectrum<T>> {
    let n = m.dim();
    if n > EXACT_LIMIT {
        return Err(Error::InvalidArgument(format!("exact spectrum limited to D <= {EXACT_LIMIT}, got {n}")));
    }
    let vals = symmetric_eigenvalues(n, m.entries().to_vec())?;
    let scale = vals.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let tol = T::of(IMPORTANT_THRESHOLD) * scale;
    let important = vals.iter().filter(|v| v.abs() <= tol).count();
    Ok(Spectrum::new(vals, SpectrumSource::Exact, important))
}

/// Turns an SLQ density into `D` eigenvalues.
///
/// The `D − important` regular eigenvalues are the density's quantiles at
/// `(k + 0.5)/(D − important)`. If the smallest of them lies above
/// `lambda_min_target`, it is lowered to the target. The remaining
/// `important` entries are the sentinel.
pub fn reconstruct_spectrum<T: Scalar>(
    density: &SpectralDensity<T>,
    dim: usize,
    important: usize,
    lambda_min_target: T,
) -> Result<Spectrum<T>> {
    if important > dim {
        return Err(Error::InvalidArgument(format!("important count {important} exceeds D = {dim}")));
    }
    let (grid, phi) = (&density.grid, &density.density);
    if grid.len() < 2 || grid.len() != phi.len() {
        return Err(Error::InvalidArgument("density grid must have at least two points".into()));
    }
    let half = T::of(0.5);
    let mut cdf = Vec::with_capacity(grid.len());
    cdf.push(T::zero());
    for j in 1..grid.len() {
        let prev = cdf[j - 1];
        cdf.push(prev + (grid[j] - grid[j - 1]) * (phi[j] + phi[j - 1]).max(T::zero()) * half);
    }
    let total = *cdf.last().expect("non-empty");
    if !(total >= half) {
        return Err(Error::DensityMass(total.to_f64_lossy()));
    }

    let regular = dim - important;
    let mut vals = Vec::with_capacity(dim);
    let mut j = 0;
    for k in 0..regular {
        let target = (T::of_usize(k) + half) / T::of_usize(regular) * total;
        while j + 1 < cdf.len() - 1 && cdf[j + 1] < target {
            j += 1;
        }
        let span = cdf[j + 1] - cdf[j];
        let frac = if span > T::zero() { ((target - cdf[j]) / span).min(T::one()).max(T::zero()) } else { half };
        vals.push(grid[j] + frac * (grid[j + 1] - grid[j]));
    }
    if let Some(first) = vals.first_mut() {
        if *first > lambda_min_target {
            *first = lambda_min_target;
        }
    }
    vals.extend(std::iter::repeat_n(T::sentinel(), important));
    Ok(Spectrum::new(vals, SpectrumSource::SlqReconstructed, important))
}

/// Replaces every eigenvalue by its magnitude; exact zeros become the sentinel.
pub fn convexify<T: Scalar>(s: &Spectrum<T>) -> Spectrum<T> {
    let out: Vec<T> = s.eigenvalues.iter().map(|&x| if x == T::zero() { T::sentinel() } else { x.abs() }).collect();
    let sentinels = out.iter().filter(|&&v| v == T::sentinel()).count();
    Spectrum::new(out, s.source, s.important_count.max(sentinels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_exact() {
        let s = exact_spectrum(&DenseSymmetric::from_diagonal(&[3.0f64, 1.0, 2.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.source, SpectrumSource::Exact);
        assert_eq!(s.important_count, 0);
    }

    #[test]
    fn zero_matrix_is_all_important() {
        let s = exact_spectrum(&DenseSymmetric::<f64>::zeros(5)).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0; 5]);
        assert_eq!(s.important_count, 5);
    }

    #[test]
    fn convexify_examples() {
        let s = convexify(&Spectrum::new(vec![-0.01f64, 2.0, 3.0], SpectrumSource::Exact, 0));
        assert_eq!(s.eigenvalues, vec![0.01, 2.0, 3.0]);
        let z = convexify(&Spectrum::new(vec![0.0f64, 1.0], SpectrumSource::Exact, 0));
        assert_eq!(z.eigenvalues, vec![1e-30, 1.0]);
        assert_eq!(z.important_count, 1);
        let pos = Spectrum::new(vec![0.5f64, 1.0, 4.0], SpectrumSource::Exact, 0);
        assert_eq!(convexify(&pos), pos);
    }

    #[test]
    fn convexify_does_not_double_count_exact_zeros() {
        let s = exact_spectrum(&DenseSymmetric::<f64>::zeros(4)).unwrap();
        assert_eq!(convexify(&s).important_count, 4);
    }

    #[test]
    fn clamp_alternative() {
        let s = Spectrum::new(vec![-0.5f64, 0.0, 2.0], SpectrumSource::Exact, 0).clamp_to_sentinel();
        assert_eq!(s.eigenvalues, vec![1e-30, 1e-30, 2.0]);
        assert_eq!(s.important_count, 2);
    }

    fn bump(center: f64, sigma2: f64) -> SpectralDensity<f64> {
        let sigma = sigma2.sqrt();
        let grid: Vec<f64> = (0..1000).map(|j| center - 3.0 * sigma + 6.0 * sigma * j as f64 / 999.0).collect();
        let density = grid
            .iter()
            .map(|t| (-(t - center).powi(2) / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt())
            .collect();
        SpectralDensity { grid, density, sigma2, runs: 1, iters: 1, ritz: vec![] }
    }

    #[test]
    fn single_bump_quantiles_stay_in_support() {
        let sigma2 = 1e-4;
        let s = reconstruct_spectrum(&bump(1.0, sigma2), 10, 0, 1.0).unwrap();
        assert_eq!(s.dim(), 10);
        for v in &s.eigenvalues {
            assert!((v - 1.0).abs() <= 3.0 * sigma2.sqrt() + 1e-12);
        }
    }

    #[test]
    fn sentinel_count_matches_important() {
        let s = reconstruct_spectrum(&bump(1.0, 1e-4), 10, 4, 0.0).unwrap();
        assert_eq!(s.eigenvalues.iter().filter(|&&v| v == 1e-30).count(), 4);
        assert_eq!(s.important_count, 4);
        assert_eq!(s.source, SpectrumSource::SlqReconstructed);
    }

    #[test]
    fn min_is_clipped_to_target() {
        let s = reconstruct_spectrum(&bump(1.0, 1e-4), 10, 0, 0.5).unwrap();
        assert_eq!(s.min(), Some(0.5));
        let unclipped = reconstruct_spectrum(&bump(1.0, 1e-4), 10, 0, f64::INFINITY).unwrap();
        assert!(unclipped.min().unwrap() > 0.9);
    }

    #[test]
    fn low_mass_is_rejected() {
        let mut d = bump(1.0, 1e-4);
        d.density.iter_mut().for_each(|x| *x *= 0.3);
        assert!(matches!(reconstruct_spectrum(&d, 10, 0, 0.0), Err(Error::DensityMass(_))));
        assert!(reconstruct_spectrum(&bump(1.0, 1e-4), 3, 4, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = Spectrum::new(vec![1e-30f64, 1e-30, 0.25, 3.0], SpectrumSource::SlqReconstructed, 2);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = Spectrum::<f64>::read_csv(&buf[..], "mem", SpectrumSource::SlqReconstructed).unwrap();
        assert_eq!(back, s);
    }
}
