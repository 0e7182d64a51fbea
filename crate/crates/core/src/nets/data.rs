use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{normal, rng};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Labelled feature rows, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
    pub split: Split,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Vec<T>, labels: Vec<usize>, dim: usize, classes: usize, split: Split) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch { expected: labels.len() * dim, got: features.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::LabelOutOfRange { label: bad, classes });
        }
        Ok(Self { features, labels, dim, classes, split })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[T], &usize)> {
        self.features.chunks_exact(self.dim).zip(&self.labels)
    }

    /// Rows at `indices`, in that order.
    pub fn gather(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self { features, labels, dim: self.dim, classes: self.classes, split: self.split }
    }

    /// Contiguous batches of `batch_size` in stored order; the last may be shorter.
    pub fn batches(&self, batch_size: usize) -> Vec<Self> {
        let n = self.len();
        (0..n)
            .step_by(batch_size.max(1))
            .map(|s| {
                let e = (s + batch_size).min(n);
                Self {
                    features: self.features[s * self.dim..e * self.dim].to_vec(),
                    labels: self.labels[s..e].to_vec(),
                    dim: self.dim,
                    classes: self.classes,
                    split: self.split,
                }
            })
            .collect()
    }

    /// Fraction of the most common label.
    pub fn majority_rate(&self) -> f64 {
        let mut counts = vec![0usize; self.classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts.into_iter().max().unwrap_or(0) as f64 / self.len().max(1) as f64
    }
}

/// Isotropic unit-variance Gaussian blobs, one per class.
///
/// Features live in `R^classes`; class `c` is centred at
/// `separation/√2 · (e_c − 𝟙/classes)`, a regular simplex whose vertices are
/// `separation` apart. Labels cycle `0, 1, …`, so class counts differ by at most one.
pub fn make_blobs<T: Scalar>(n: usize, classes: usize, separation: f64, seed: u64, split: Split) -> Result<Dataset<T>> {
    if classes < 2 || n < classes {
        return Err(Error::InvalidArgument(format!("make_blobs needs classes >= 2 and n >= classes, got n={n}, classes={classes}")));
    }
    let dim = classes;
    let scale = separation / std::f64::consts::SQRT_2;
    let mut r = rng(seed);
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        for j in 0..dim {
            let centre = scale * (if j == c { 1.0 } else { 0.0 } - 1.0 / classes as f64);
            features.push(T::of(centre) + normal::<T>(&mut r));
        }
        labels.push(c);
    }
    Dataset::new(features, labels, dim, classes, split)
}

/// Reads a comma-separated file with one sample per line. A first line that
/// does not parse as numbers is taken as a header. `classes` defaults to the
/// largest label plus one.
pub fn load_csv_dataset<T: Scalar>(path: &Path, label_column: usize, classes: Option<usize>, split: Split) -> Result<Dataset<T>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_csv_dataset(f, &path.display().to_string(), label_column, classes, split)
}

pub(crate) fn read_csv_dataset<T: Scalar, R: BufRead>(
    r: R,
    origin: &str,
    label_column: usize,
    classes: Option<usize>,
    split: Split,
) -> Result<Dataset<T>> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let err = |msg: String| Error::Parse { path: origin.to_string(), line: i + 1, msg };
        if i == 0 && cells.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if label_column >= cells.len() {
            return Err(err(format!("label column {label_column} missing ({} columns)", cells.len())));
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => return Err(err(format!("expected {w} columns, found {}", cells.len()))),
            _ => {}
        }
        for (j, c) in cells.iter().enumerate() {
            if j == label_column {
                let y: usize = c.parse().map_err(|_| err(format!("label `{c}` is not a non-negative integer")))?;
                labels.push(y);
            } else {
                let v: f64 = c.parse().map_err(|_| err(format!("`{c}` is not a number")))?;
                features.push(T::of(v));
            }
        }
    }
    let width = width.ok_or_else(|| Error::Parse { path: origin.to_string(), line: 0, msg: "no data rows".into() })?;
    let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    Dataset::new(features, labels, width - 1, classes, split)
}
