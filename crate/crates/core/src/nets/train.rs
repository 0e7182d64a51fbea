use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::net::FeedforwardNet;
use crate::error::{Error, Result};
use crate::rng::rng;
use crate::Scalar;

/// SGD-with-momentum settings for L1-regularized training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub lambda_l1: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { batch_size: 128, epochs: 200, lr: 0.01, momentum: 0.9, lambda_l1: 5e-5, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if !(self.lambda_l1 >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda_l1 must be >= 0, got {}", self.lambda_l1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trained<T> {
    pub net: FeedforwardNet<T>,
    /// Mean training cross-entropy per epoch (without the L1 term).
    pub history: Vec<f64>,
}

/// Minimizes `loss + λ‖W‖₁` with momentum SGD. Biases are not penalized.
/// The L1 subgradient uses `sign(0) = 0`. Minibatches are reshuffled every
/// epoch from a stream seeded by `cfg.seed`.
pub fn train_l1<T: Scalar>(net: &FeedforwardNet<T>, data: &Dataset<T>, cfg: &TrainConfig) -> Result<Trained<T>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut net = net.clone();
    let prunable = net.prunable_mask();
    let mut w = net.flatten();
    let mut velocity = vec![T::zero(); w.len()];
    let lr = T::of(cfg.lr);
    let mu = T::of(cfg.momentum);
    let lambda = T::of(cfg.lambda_l1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut r = rng(cfg.seed);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut r);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.gather(chunk);
            net.set_flat(&w)?;
            let batch_loss = match net.loss(&batch) {
                Ok(l) => l,
                Err(_) => return Err(Error::Diverged { epoch, history }),
            };
            let g = net.grad(&batch).map_err(|_| Error::Diverged { epoch, history: history.clone() })?;
            epoch_loss += batch_loss.to_f64_lossy() * chunk.len() as f64;
            seen += chunk.len();
            for i in 0..w.len() {
                let mut gi = g[i];
                if prunable[i] && w[i] != T::zero() {
                    gi += lambda * w[i].signum();
                }
                velocity[i] = mu * velocity[i] + gi;
                w[i] -= lr * velocity[i];
            }
        }
        let mean = epoch_loss / seen as f64;
        if !mean.is_finite() || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { epoch, history });
        }
        history.push(mean);
    }
    net.set_flat(&w)?;
    Ok(Trained { net, history })
}

/// Population standard deviation of per-batch mean losses over one pass in
/// stored order. A trailing partial batch counts as a batch.
pub fn epsilon_hat<T: Scalar>(net: &FeedforwardNet<T>, data: &Dataset<T>, batch_size: usize) -> Result<T> {
    let batches = data.batches(batch_size);
    if batches.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "epsilon_hat needs at least two batches, got {} (N={}, batch={batch_size})",
            batches.len(),
            data.len()
        )));
    }
    let losses = batches.iter().map(|b| net.loss(b)).collect::<Result<Vec<T>>>()?;
    Ok(population_std(&losses))
}

pub(crate) fn population_std<T: Scalar>(xs: &[T]) -> T {
    let n = T::of_usize(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    (xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n).sqrt()
}
