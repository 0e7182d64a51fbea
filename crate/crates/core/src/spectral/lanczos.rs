use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigen_first_row;
use crate::operators::SymmetricOperator;
use crate::rng::{rng, unit_vec};
use crate::scalar::{axpy, dot, norm};
use crate::Scalar;

/// Lanczos output: diagonal `alphas` and strictly positive off-diagonal `betas`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub alphas: Vec<T>,
    pub betas: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    pub fn new(alphas: Vec<T>, betas: Vec<T>) -> Result<Self> {
        if alphas.is_empty() || betas.len() + 1 != alphas.len() {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal needs m >= 1 diagonal and m-1 off-diagonal entries, got {} and {}",
                alphas.len(),
                betas.len()
            )));
        }
        Ok(Self { alphas, betas })
    }

    pub fn size(&self) -> usize {
        self.alphas.len()
    }
}

/// Ritz values (ascending) with their quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzSet<T> {
    pub values: Vec<T>,
    pub weights: Vec<T>,
}

/// Breakdown test for `β`, relative to the largest `‖A v‖` seen so far.
const BREAKDOWN: f64 = 1e-10;

/// `m` steps of Lanczos from a seeded Gaussian start vector, with full
/// reorthogonalization of every new direction against all previous ones.
///
/// Stops early (returning a smaller tridiagonal) when the Krylov space is
/// exhausted.
pub fn lanczos<T: Scalar, O: SymmetricOperator<T> + ?Sized>(op: &O, m: usize, seed: u64) -> Result<Tridiagonal<T>> {
    let n = op.dim();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("lanczos needs 1 <= m <= D, got m={m}, D={n}")));
    }
    let mut r = rng(seed);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m.saturating_sub(1));

    let v1 = unit_vec::<T>(&mut r, n);
    let mut w = op.apply(&v1)?;
    let mut scale = norm(&w);
    let alpha = dot(&w, &v1);
    axpy(-alpha, &v1, &mut w);
    alphas.push(alpha);
    basis.push(v1);
    reorthogonalize(&basis, &mut w);

    for _ in 1..m {
        let beta = norm(&w);
        if !beta.is_finite() || !scale.is_finite() {
            return Err(Error::NonFinite("lanczos recurrence"));
        }
        if beta <= T::of(BREAKDOWN) * scale.max(T::min_positive_value()) {
            break;
        }
        let v: Vec<T> = w.iter().map(|&x| x / beta).collect();
        let mut next = op.apply(&v)?;
        scale = scale.max(norm(&next));
        let alpha = dot(&next, &v);
        if !alpha.is_finite() {
            return Err(Error::NonFinite("lanczos recurrence"));
        }
        axpy(-alpha, &v, &mut next);
        axpy(-beta, basis.last().expect("non-empty basis"), &mut next);
        alphas.push(alpha);
        betas.push(beta);
        basis.push(v);
        reorthogonalize(&basis, &mut next);
        w = next;
    }
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("lanczos recurrence"));
    }
    Tridiagonal::new(alphas, betas)
}

fn reorthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// Eigenvalues of `t` and the squared first components of its unit eigenvectors.
pub fn ritz<T: Scalar>(t: &Tridiagonal<T>) -> Result<RitzSet<T>> {
    let (values, weights) = tridiagonal_eigen_first_row(&t.alphas, &t.betas)?;
    Ok(RitzSet { values, weights })
}
