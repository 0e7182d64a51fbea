use crate::error::{Error, Result};
use crate::spectral::Spectrum;
use crate::Scalar;

/// Eigenvalues below this are treated as sentinels by [`gaussian_width`].
pub const WIDTH_FLOOR: f64 = 1e-20;

/// Sublevel set `{ŵ : ½ ŵᵀHŵ ≤ ε̂}` described by the spectrum of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec<T> {
    spectrum: Spectrum<T>,
    eps_hat: T,
}

impl<T: Scalar> EllipsoidSpec<T> {
    /// The spectrum must already be convexified (all eigenvalues positive).
    pub fn new(spectrum: Spectrum<T>, eps_hat: T) -> Result<Self> {
        if !(eps_hat >= T::zero()) || !eps_hat.is_finite() {
            return Err(Error::InvalidArgument(format!("eps_hat must be finite and >= 0, got {eps_hat}")));
        }
        if let Some(bad) = spectrum.eigenvalues.iter().find(|&&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ellipsoid eigenvalues must be positive and finite (convexify first), found {bad}"
            )));
        }
        if spectrum.dim() == 0 {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        Ok(Self { spectrum, eps_hat })
    }

    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }

    pub fn eps_hat(&self) -> T {
        self.eps_hat
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Principal radii `sqrt(2ε̂/λᵢ)`, in spectrum order.
    pub fn radii(&self) -> Vec<T> {
        let two_eps = T::of(2.0) * self.eps_hat;
        self.spectrum.eigenvalues.iter().map(|&l| (two_eps / l).sqrt()).collect()
    }

    /// Median principal radius.
    pub fn median_radius(&self) -> T {
        let mut r = self.radii();
        r.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        let n = r.len();
        if n % 2 == 1 {
            r[n / 2]
        } else {
            (r[n / 2 - 1] + r[n / 2]) * T::of(0.5)
        }
    }

    /// Same ellipsoid with `H` replaced by `c·H`.
    pub fn scale_hessian(&self, c: T) -> Result<Self> {
        let eig = self.spectrum.eigenvalues.iter().map(|&l| l * c).collect();
        Self::new(Spectrum::new(eig, self.spectrum.source, self.spectrum.important_count), self.eps_hat)
    }
}

/// `sqrt(2ε̂ Σ 1/λᵢ)`. Refuses spectra containing sentinels, where the width diverges.
pub fn gaussian_width<T: Scalar>(e: &EllipsoidSpec<T>) -> Result<T> {
    let floor = T::of(WIDTH_FLOOR);
    if let Some(&bad) = e.spectrum.eigenvalues.iter().find(|&&l| l < floor) {
        return Err(Error::SentinelEigenvalue(bad.to_f64_lossy()));
    }
    let inv_sum: T = e.spectrum.eigenvalues.iter().map(|&l| T::one() / l).sum();
    Ok((T::of(2.0) * e.eps_hat * inv_sum).sqrt())
}

/// One summand `r̂²/(R² + r̂²)`, written as `2ε̂/(2ε̂ + R²λ)` so sentinel
/// eigenvalues do not overflow.
#[inline]
fn projected_term<T: Scalar>(two_eps: T, r2: T, lambda: T) -> T {
    if r2 == T::zero() {
        return T::one();
    }
    let denom = two_eps + r2 * lambda.abs();
    if denom == T::zero() {
        T::one()
    } else {
        two_eps / denom
    }
}

/// Width of the sublevel set projected onto the unit sphere around a point at distance `r`.
pub fn projected_width<T: Scalar>(e: &EllipsoidSpec<T>, r: T) -> T {
    let two_eps = T::of(2.0) * e.eps_hat;
    let r2 = r * r;
    let s: T = e.spectrum.eigenvalues.iter().map(|&l| projected_term(two_eps, r2, l)).sum();
    s.sqrt()
}

/// Predicted prunable fraction at projection distance `r`: `w(P)² / D`, in `[0, 1]`.
pub fn threshold<T: Scalar>(e: &EllipsoidSpec<T>, r: T) -> T {
    let two_eps = T::of(2.0) * e.eps_hat;
    let r2 = r * r;
    let s: T = e.spectrum.eigenvalues.iter().map(|&l| projected_term(two_eps, r2, l)).sum();
    (s / T::of_usize(e.dim())).max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectrumSource;

    fn spec(eig: Vec<f64>, eps: f64) -> EllipsoidSpec<f64> {
        EllipsoidSpec::new(Spectrum::new(eig, SpectrumSource::Exact, 0), eps).unwrap()
    }

    #[test]
    fn identity_width() {
        let w = gaussian_width(&spec(vec![1.0; 100], 0.5)).unwrap();
        assert!((w - 10.0).abs() < 1e-12);
    }

    #[test]
    fn equal_eigenvalues_width() {
        let w = gaussian_width(&spec(vec![2.0; 4], 1.0)).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sentinel_rejected_by_plain_width() {
        let e = spec(vec![1e-30, 1.0], 1.0);
        assert!(matches!(gaussian_width(&e), Err(Error::SentinelEigenvalue(_))));
    }

    #[test]
    fn projected_width_examples() {
        // r̂ = 1 ⇔ λ = 2ε̂.
        let e = spec(vec![2.0; 100], 1.0);
        assert!((projected_width(&e, 3.0) - 10f64.sqrt()).abs() < 1e-12);
        assert!((threshold(&e, 3.0) - 0.1).abs() < 1e-12);
        let mixed = spec((1..=100).map(f64::from).collect(), 0.3);
        assert_eq!(projected_width(&mixed, 0.0), 10.0);
        assert_eq!(threshold(&mixed, 0.0), 1.0);
        assert!(projected_width(&mixed, 1e9) < 1e-6);
    }

    #[test]
    fn all_sentinel_threshold_is_one() {
        let e = EllipsoidSpec::new(Spectrum::new(vec![1e-30; 10], SpectrumSource::SlqReconstructed, 10), 0.5).unwrap();
        for r in [0.0f64, 1.0, 1e5, 1e10] {
            assert!((threshold(&e, r) - 1.0).abs() < 1e-9, "R={r}");
        }
    }

    #[test]
    fn rejects_nonpositive_or_negative_eps() {
        assert!(EllipsoidSpec::new(Spectrum::new(vec![-1.0, 1.0], SpectrumSource::Exact, 0), 1.0).is_err());
        assert!(EllipsoidSpec::new(Spectrum::new(vec![1.0], SpectrumSource::Exact, 0), -1.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let e = EllipsoidSpec::new(Spectrum::new(vec![2.0f32; 100], SpectrumSource::Exact, 0), 1.0).unwrap();
        assert!((threshold(&e, 3.0) - 0.1).abs() < 1e-6);
        let s = EllipsoidSpec::new(Spectrum::new(vec![1e-30f32; 4], SpectrumSource::Exact, 4), 1.0).unwrap();
        assert!((threshold(&s, 100.0) - 1.0).abs() < 1e-6);
    }
}
