//! Dense symmetric eigensolvers and small factorizations.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration with Wilkinson-style shifts. The tridiagonal solver can track the
//! first row of the accumulated rotations, which gives the Gauss quadrature
//! weights needed by stochastic Lanczos quadrature without forming eigenvectors.

use crate::error::{Error, Result};
use crate::Scalar;

const MAX_QL_ITERS: usize = 60;

/// Row-major square matrix helper used internally.
pub(crate) struct Square<'a, T> {
    pub n: usize,
    pub a: &'a mut [T],
}

impl<T: Scalar> Square<'_, T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }
    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }
}

/// Householder tridiagonalization of a symmetric matrix stored row-major in `a`.
///
/// Returns `(diag, sub)` where `sub[i]` couples rows `i` and `i + 1`
/// (length `n - 1`). When `want_vectors` is set, `a` is overwritten with the
/// orthogonal transform `Q` such that `Qᵀ A Q` is tridiagonal; otherwise `a`
/// is left in an unspecified state.
pub(crate) fn tridiagonalize<T: Scalar>(n: usize, a: &mut [T], want_vectors: bool) -> (Vec<T>, Vec<T>) {
    let mut z = Square { n, a };
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    if n == 0 {
        return (d, Vec::new());
    }
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale: T = (0..=l).map(|k| z.at(i, k).abs()).sum();
            if scale == T::zero() {
                e[i] = z.at(i, l);
            } else {
                for k in 0..=l {
                    let v = z.at(i, k) / scale;
                    z.set(i, k, v);
                    h += v * v;
                }
                let mut f = z.at(i, l);
                let mut g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z.set(i, l, f - g);
                f = T::zero();
                for j in 0..=l {
                    if want_vectors {
                        let v = z.at(i, j) / h;
                        z.set(j, i, v);
                    }
                    g = T::zero();
                    for k in 0..=j {
                        g += z.at(j, k) * z.at(i, k);
                    }
                    for k in (j + 1)..=l {
                        g += z.at(k, j) * z.at(i, k);
                    }
                    e[j] = g / h;
                    f += e[j] * z.at(i, j);
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z.at(i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let v = z.at(j, k) - (f * e[k] + g * z.at(i, k));
                        z.set(j, k, v);
                    }
                }
            }
        } else {
            e[i] = z.at(i, l);
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if want_vectors {
            if d[i] != T::zero() {
                for j in 0..i {
                    let mut g = T::zero();
                    for k in 0..i {
                        g += z.at(i, k) * z.at(k, j);
                    }
                    for k in 0..i {
                        let v = z.at(k, j) - g * z.at(k, i);
                        z.set(k, j, v);
                    }
                }
            }
            d[i] = z.at(i, i);
            z.set(i, i, T::one());
            for j in 0..i {
                z.set(j, i, T::zero());
                z.set(i, j, T::zero());
            }
        } else {
            d[i] = z.at(i, i);
        }
    }
    (d, e[1..].to_vec())
}

/// Rotation sink for the QL iteration: nothing, the first row, or the full matrix.
enum Track<'a, T> {
    None,
    FirstRow(&'a mut [T]),
    Full(usize, &'a mut [T]),
}

impl<T: Scalar> Track<'_, T> {
    #[inline]
    fn rotate(&mut self, i: usize, s: T, c: T) {
        match self {
            Track::None => {}
            Track::FirstRow(row) => {
                let f = row[i + 1];
                row[i + 1] = s * row[i] + c * f;
                row[i] = c * row[i] - s * f;
            }
            Track::Full(n, z) => {
                let n = *n;
                for k in 0..n {
                    let f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
        }
    }
}

fn ql_implicit<T: Scalar>(d: &mut [T], sub: &[T], mut track: Track<'_, T>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    if d.iter().chain(sub).any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence("non-finite tridiagonal entries"));
    }
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(&sub[..n - 1]);
    let two = T::of(2.0);
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERS {
                return Err(Error::NoConvergence("tridiagonal QL"));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                track.rotate(i, s, c);
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
pub fn tridiagonal_eigenvalues<T: Scalar>(diag: &[T], sub: &[T]) -> Result<Vec<T>> {
    let mut d = diag.to_vec();
    ql_implicit(&mut d, sub, Track::None)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// Eigenvalues and squared first eigenvector components, sorted by eigenvalue.
pub fn tridiagonal_eigen_first_row<T: Scalar>(diag: &[T], sub: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut row = vec![T::zero(); n];
    if n > 0 {
        row[0] = T::one();
    }
    ql_implicit(&mut d, sub, Track::FirstRow(&mut row))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    Ok((idx.iter().map(|&k| d[k]).collect(), idx.iter().map(|&k| row[k] * row[k]).collect()))
}

/// Eigenvalues of a dense symmetric matrix (row-major, consumed), ascending.
pub fn symmetric_eigenvalues<T: Scalar>(n: usize, mut a: Vec<T>) -> Result<Vec<T>> {
    let (d, e) = tridiagonalize(n, &mut a, false);
    tridiagonal_eigenvalues(&d, &e)
}

/// Full eigendecomposition. Returns ascending eigenvalues and a row-major
/// matrix whose column `k` is the unit eigenvector for eigenvalue `k`.
pub fn symmetric_eigen<T: Scalar>(n: usize, mut a: Vec<T>) -> Result<(Vec<T>, Vec<T>)> {
    let (mut d, e) = tridiagonalize(n, &mut a, true);
    ql_implicit(&mut d, &e, Track::Full(n, &mut a))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).expect("finite eigenvalues"));
    let mut vecs = vec![T::zero(); n * n];
    for (new, &old) in idx.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + new] = a[r * n + old];
        }
    }
    Ok((idx.iter().map(|&k| d[k]).collect(), vecs))
}

/// In-place lower Cholesky factor of a row-major SPD matrix.
pub fn cholesky<T: Scalar>(n: usize, a: &mut [T]) -> Result<()> {
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            s -= a[j * n + k] * a[j * n + k];
        }
        if !(s > T::zero()) {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = s.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
        for i in 0..j {
            a[i * n + j] = T::zero();
        }
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky`].
pub fn cholesky_solve<T: Scalar>(n: usize, l: &[T], b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Orthonormalizes `cols` (each of length `dim`) with two passes of modified
/// Gram-Schmidt. Returns `false` if a column collapses numerically.
pub fn orthonormalize<T: Scalar>(cols: &mut [Vec<T>]) -> bool {
    use crate::scalar::{axpy, dot, norm};
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        let orig = norm(v);
        for _ in 0..2 {
            for q in done.iter() {
                let c = dot(q, v);
                axpy(-c, q, v);
            }
        }
        let nrm = norm(v);
        if !(nrm > T::of(1e-10) * orig) {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let (vals, w) = tridiagonal_eigen_first_row(&[0.0f64, 0.0], &[1.0]).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        assert!((w[0] - 0.5).abs() < 1e-14 && (w[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dense_eigen_reconstructs() {
        let n = 6;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (1.0 + i as f64 + j as f64);
            }
        }
        let (vals, vecs) = symmetric_eigen(n, a.clone()).unwrap();
        for k in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * vecs[j * n + k]).sum();
                assert!((av - vals[k] * vecs[i * n + k]).abs() < 1e-12);
            }
        }
        let only = symmetric_eigenvalues(n, a).unwrap();
        for (x, y) in only.iter().zip(&vals) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_solves() {
        let n = 3;
        let mut a = vec![4.0f64, 2.0, 0.0, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0];
        let orig = a.clone();
        cholesky(n, &mut a).unwrap();
        let mut b = vec![1.0, 2.0, 3.0];
        cholesky_solve(n, &a, &mut b);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| orig[i * n + j] * b[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        let mut bad = vec![1.0f64, 2.0, 2.0, 1.0];
        assert!(cholesky(2, &mut bad).is_err());
    }

    #[test]
    fn one_by_one_and_empty() {
        assert_eq!(symmetric_eigenvalues(1, vec![3.5f64]).unwrap(), vec![3.5]);
        assert!(symmetric_eigenvalues::<f64>(0, vec![]).unwrap().is_empty());
    }
}
