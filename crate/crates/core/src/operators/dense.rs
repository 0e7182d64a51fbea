use std::io::{BufRead, Write};
use std::path::Path;

use super::{check_dims, SymmetricOperator};
use crate::error::{Error, Result};
use crate::Scalar;

/// Full (unpacked) symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Scalar> DenseSymmetric<T> {
    /// Builds from row-major entries, symmetrizing as `(M + Mᵀ)/2`.
    pub fn from_row_major(dim: usize, mut entries: Vec<T>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        let half = T::of(0.5);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let s = (entries[i * dim + j] + entries[j * dim + i]) * half;
                entries[i * dim + j] = s;
                entries[j * dim + i] = s;
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); dim])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * n + i] = d;
        }
        m
    }

    /// `Q diag(values) Qᵀ` for `q` row-major with orthonormal columns.
    pub fn from_eigen(values: &[T], q: &[T]) -> Result<Self> {
        let n = values.len();
        if q.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: q.len() });
        }
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += q[i * n + k] * values[k] * q[j * n + k];
                }
                entries[i * n + j] = s;
                entries[j * n + i] = s;
            }
        }
        Ok(Self { dim: n, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        crate::scalar::norm(&self.entries)
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) -> Result<()> {
        check_dims(self.dim, x.len(), y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = crate::scalar::dot(self.row(i), x);
        }
        Ok(())
    }

    pub fn operator(&self) -> DenseOperator<'_, T> {
        DenseOperator(self)
    }

    /// Writes one row per line, comma-separated, full `D×D`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.dim {
            let line: Vec<String> = self.row(i).iter().map(|x| format!("{:e}", x.to_f64_lossy())).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn read_csv<R: BufRead>(r: R, origin: &str) -> Result<Self> {
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map(T::of).map_err(|e| Error::Parse {
                        path: origin.to_string(),
                        line: lineno + 1,
                        msg: e.to_string(),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("expected {n} columns, found {}", r.len()),
            });
        }
        Self::from_row_major(n, rows.into_iter().flatten().collect())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv(f, &path.display().to_string())
    }
}

/// Operator view of a dense symmetric matrix.
pub fn make_dense_operator<T: Scalar>(m: &DenseSymmetric<T>) -> DenseOperator<'_, T> {
    DenseOperator(m)
}

/// `apply(v) = M v` over a borrowed dense matrix.
#[derive(Debug, Clone, Copy)]
pub struct DenseOperator<'a, T>(&'a DenseSymmetric<T>);

impl<T: Scalar> SymmetricOperator<T> for DenseOperator<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        self.0.matvec(x, y)
    }
}

impl<T: Scalar> SymmetricOperator<T> for DenseSymmetric<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        self.matvec(x, y)
    }
}
