use std::io::Write;

use serde::{Deserialize, Serialize};

use super::mask::{apply_mask, magnitude_mask};
use crate::error::{Error, Result};
use crate::nets::{Dataset, FeedforwardNet};
use crate::Scalar;

/// Accuracy drop, in percentage points, still counted as a successful prune.
pub const DEFAULT_TOLERANCE_POINTS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

/// Metrics across a grid of pruning ratios. Row 0 is the dense baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub dense_test_acc: f64,
    pub empirical_max_p: f64,
    pub tolerance_points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub dense_test_acc: f64,
    pub empirical_max_p: f64,
    pub tolerance_points: f64,
}

impl SweepResult {
    /// Largest grid ratio whose test accuracy is within `tolerance_points`
    /// of the dense network.
    pub fn max_p_within(&self, tolerance_points: f64) -> f64 {
        let floor = self.dense_test_acc - tolerance_points / 100.0;
        self.rows[1..]
            .iter()
            .filter(|r| r.test_acc >= floor - 1e-12)
            .map(|r| r.p)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "p,R,train_loss,train_acc,test_loss,test_acc")?;
        for r in &self.rows {
            writeln!(w, "{:e},{:e},{:e},{:e},{:e},{:e}", r.p, r.r, r.train_loss, r.train_acc, r.test_loss, r.test_acc)?;
        }
        Ok(())
    }

    pub fn sidecar(&self) -> SweepSidecar {
        SweepSidecar {
            dense_test_acc: self.dense_test_acc,
            empirical_max_p: self.empirical_max_p,
            tolerance_points: self.tolerance_points,
        }
    }
}

/// Prunes `net` at each grid ratio and evaluates on both splits.
pub fn sweep<T: Scalar>(
    net: &FeedforwardNet<T>,
    train: &Dataset<T>,
    test: &Dataset<T>,
    p_grid: &[T],
    tolerance_points: f64,
) -> Result<SweepResult> {
    if p_grid.windows(2).any(|w| !(w[0] <= w[1])) || p_grid.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
        return Err(Error::InvalidArgument("sweep grid must be ascending within [0, 1]".into()));
    }
    if !(tolerance_points >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tolerance_points}")));
    }
    let w0 = net.flatten();
    let prunable = net.prunable_mask();
    let row_for = |p: T, pruned: &FeedforwardNet<T>, r: T| -> Result<SweepRow> {
        let tr = pruned.evaluate(train)?;
        let te = pruned.evaluate(test)?;
        Ok(SweepRow {
            p: p.to_f64_lossy(),
            r: r.to_f64_lossy(),
            train_loss: tr.loss,
            train_acc: tr.accuracy,
            test_loss: te.loss,
            test_acc: te.accuracy,
        })
    };
    let mut rows = vec![row_for(T::zero(), net, T::zero())?];
    for &p in p_grid {
        let state = magnitude_mask(&w0, &prunable, p)?;
        let pruned = apply_mask(net, &state)?;
        rows.push(row_for(p, &pruned, state.r)?);
    }
    let dense_test_acc = rows[0].test_acc;
    let mut out = SweepResult { rows, dense_test_acc, empirical_max_p: 0.0, tolerance_points };
    out.empirical_max_p = out.max_p_within(tolerance_points);
    Ok(out)
}
