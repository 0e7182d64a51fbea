use std::io::{BufRead, Write};

use super::lanczos::{lanczos, ritz, RitzSet};
use crate::error::{Error, Result};
use crate::operators::SymmetricOperator;
use crate::Scalar;

/// SLQ hyperparameters. Defaults follow the small fully-connected setting:
/// one run, 128 iterations, 10000 bins, kernel variance 1e-5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlqParams {
    pub iters: usize,
    pub runs: usize,
    pub sigma2: f64,
    pub bins: usize,
}

impl Default for SlqParams {
    fn default() -> Self {
        Self { iters: 128, runs: 1, sigma2: 1e-5, bins: 10_000 }
    }
}

/// Gaussian-smoothed spectral density on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity<T> {
    pub grid: Vec<T>,
    pub density: Vec<T>,
    pub sigma2: T,
    pub runs: usize,
    pub iters: usize,
    /// Per-run quadrature nodes and weights the density was built from.
    pub ritz: Vec<RitzSet<T>>,
}

impl<T: Scalar> SpectralDensity<T> {
    /// Trapezoid integral of the density over the grid.
    pub fn mass(&self) -> T {
        trapezoid(&self.grid, &self.density)
    }

    /// Smallest Ritz value over all runs.
    pub fn min_ritz(&self) -> Option<T> {
        self.ritz.iter().flat_map(|r| r.values.first().copied()).reduce(T::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,phi")?;
        for (t, p) in self.grid.iter().zip(&self.density) {
            writeln!(w, "{:e},{:e}", t.to_f64_lossy(), p.to_f64_lossy())?;
        }
        Ok(())
    }

    /// Reads a `t,phi` file. Run metadata is not stored in the file and comes back empty.
    pub fn read_csv<R: BufRead>(r: R, origin: &str, sigma2: T) -> Result<Self> {
        let mut grid = Vec::new();
        let mut density = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let parse_err = |msg: String| Error::Parse { path: origin.to_string(), line: i + 1, msg };
            if i == 0 {
                if line.trim() != "t,phi" {
                    return Err(parse_err(format!("expected header `t,phi`, found `{line}`")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err("expected two columns".into()));
            };
            let a: f64 = a.trim().parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            let b: f64 = b.trim().parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            grid.push(T::of(a));
            density.push(T::of(b));
        }
        Ok(Self { grid, density, sigma2, runs: 0, iters: 0, ritz: Vec::new() })
    }
}

pub(crate) fn trapezoid<T: Scalar>(x: &[T], y: &[T]) -> T {
    let half = T::of(0.5);
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) * half).sum()
}

/// Stochastic Lanczos quadrature: the average over `runs` independent Lanczos
/// runs (run `i` seeded with `seed + i`) of `Σₖ τₖ N(t; λₖ, σ²)`, evaluated on
/// `bins` uniform points spanning the Ritz range padded by 3σ.
pub fn slq_density<T: Scalar, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    params: SlqParams,
    seed: u64,
) -> Result<SpectralDensity<T>> {
    let SlqParams { iters, runs, sigma2, bins } = params;
    if iters < 2 || runs == 0 || !(sigma2 > 0.0) || bins < 100 {
        return Err(Error::InvalidArgument(format!(
            "slq needs m >= 2, l >= 1, sigma2 > 0, bins >= 100 (got m={iters}, l={runs}, sigma2={sigma2}, bins={bins})"
        )));
    }
    let m = iters.min(op.dim());
    let ritz_sets = (0..runs)
        .map(|i| lanczos(op, m, seed.wrapping_add(i as u64)).and_then(|t| ritz(&t)))
        .collect::<Result<Vec<_>>>()?;

    let sigma2_t = T::of(sigma2);
    let sigma = sigma2_t.sqrt();
    let three = T::of(3.0);
    let lo = ritz_sets.iter().flat_map(|r| r.values.first().copied()).fold(T::infinity(), T::min) - three * sigma;
    let hi = ritz_sets.iter().flat_map(|r| r.values.last().copied()).fold(T::neg_infinity(), T::max) + three * sigma;
    let step = (hi - lo) / T::of_usize(bins - 1);
    let grid: Vec<T> = (0..bins).map(|j| lo + step * T::of_usize(j)).collect();

    let norm_const = T::one() / (T::of(2.0 * std::f64::consts::PI) * sigma2_t).sqrt();
    let inv_two_var = T::one() / (T::of(2.0) * sigma2_t);
    let per_run = T::one() / T::of_usize(runs);
    let reach = T::of(10.0) * sigma;
    let mut density = vec![T::zero(); bins];
    for rs in &ritz_sets {
        for (&lam, &tau) in rs.values.iter().zip(&rs.weights) {
            // Kernel contributions beyond 10σ are below 1e-21 of the peak.
            let first = ((lam - reach - lo) / step).floor().max(T::zero()).to_usize().unwrap_or(0);
            let last = ((lam + reach - lo) / step).ceil().to_usize().unwrap_or(bins).min(bins - 1);
            let coeff = per_run * tau * norm_const;
            for j in first..=last {
                let d = grid[j] - lam;
                density[j] += coeff * (-(d * d) * inv_two_var).exp();
            }
        }
    }
    Ok(SpectralDensity { grid, density, sigma2: sigma2_t, runs, iters: m, ritz: ritz_sets })
}
