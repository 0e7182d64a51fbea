use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{normal, rng};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Fully-connected ReLU network with a linear output layer.
///
/// Flat parameter order is layer-major; within a layer the weight matrix
/// (`fan_out × fan_in`, row-major) comes first, then the biases.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardNet<T> {
    widths: Vec<usize>,
    pub(crate) weights: Vec<Vec<T>>,
    pub(crate) biases: Vec<Vec<T>>,
    pub activation: Activation,
}

/// Mean loss and accuracy over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: f64,
}

pub(crate) fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl<T: Scalar> FeedforwardNet<T> {
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("need >= 2 positive layer widths, got {widths:?}")));
        }
        let weights = widths.windows(2).map(|w| vec![T::zero(); w[0] * w[1]]).collect();
        let biases = widths.windows(2).map(|w| vec![T::zero(); w[1]]).collect();
        Ok(Self { widths: widths.to_vec(), weights, biases, activation: Activation::Relu })
    }

    /// Kaiming-normal weights (`N(0, 2/fan_in)`), zero biases.
    pub fn init_kaiming(widths: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        let mut r = rng(seed);
        for (l, w) in net.weights.iter_mut().enumerate() {
            let std = T::of((2.0 / widths[l] as f64).sqrt());
            for x in w.iter_mut() {
                *x = normal::<T>(&mut r) * std;
            }
        }
        Ok(net)
    }

    pub fn from_flat(widths: &[usize], flat: &[T]) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        net.set_flat(flat)?;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn num_params(&self) -> usize {
        param_count(&self.widths)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn classes(&self) -> usize {
        *self.widths.last().expect("at least two layers")
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        let d = self.num_params();
        if flat.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: flat.len() });
        }
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (nw, nb) = (w.len(), b.len());
            w.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            b.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    /// `true` for weight entries, `false` for biases, in flat order.
    pub fn prunable_mask(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(std::iter::repeat_n(true, w.len()));
            out.extend(std::iter::repeat_n(false, b.len()));
        }
        out
    }

    /// Output logits for one input row.
    pub fn logits(&self, x: &[T]) -> Vec<T> {
        let mut a = x.to_vec();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let mut z = b.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                *zo += crate::scalar::dot(&w[o * fan_in..(o + 1) * fan_in], &a);
            }
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            debug_assert_eq!(z.len(), fan_out);
            a = z;
        }
        a
    }

    pub fn predict(&self, x: &[T]) -> usize {
        argmax(&self.logits(x))
    }

    /// Mean cross-entropy over `data`.
    pub fn loss(&self, data: &Dataset<T>) -> Result<T> {
        self.check_input(data)?;
        if data.is_empty() {
            return Err(Error::InvalidArgument("loss of an empty batch".into()));
        }
        let mut total = T::zero();
        for (x, &y) in data.rows() {
            total += cross_entropy(&self.logits(x), y);
        }
        let out = total / T::of_usize(data.len());
        if !out.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        Ok(out)
    }

    pub fn evaluate(&self, data: &Dataset<T>) -> Result<Metrics> {
        self.check_input(data)?;
        let mut loss = T::zero();
        let mut correct = 0usize;
        for (x, &y) in data.rows() {
            let z = self.logits(x);
            loss += cross_entropy(&z, y);
            if argmax(&z) == y {
                correct += 1;
            }
        }
        let n = data.len().max(1) as f64;
        Ok(Metrics { loss: loss.to_f64_lossy() / n, accuracy: correct as f64 / n })
    }

    /// Gradient of the mean cross-entropy, in flat order.
    pub fn grad(&self, data: &Dataset<T>) -> Result<Vec<T>> {
        self.check_input(data)?;
        if data.is_empty() {
            return Err(Error::InvalidArgument("gradient of an empty batch".into()));
        }
        let layers = self.weights.len();
        let mut gw: Vec<Vec<T>> = self.weights.iter().map(|w| vec![T::zero(); w.len()]).collect();
        let mut gb: Vec<Vec<T>> = self.biases.iter().map(|b| vec![T::zero(); b.len()]).collect();
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(layers + 1);
        for (x, &y) in data.rows() {
            acts.clear();
            acts.push(x.to_vec());
            for l in 0..layers {
                let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
                let w = &self.weights[l];
                let prev = &acts[l];
                let mut z = self.biases[l].clone();
                for o in 0..fan_out {
                    z[o] += crate::scalar::dot(&w[o * fan_in..(o + 1) * fan_in], prev);
                }
                if l + 1 < layers {
                    z.iter_mut().for_each(|v| *v = v.max(T::zero()));
                }
                acts.push(z);
            }
            let mut delta = softmax(&acts[layers]);
            delta[y] -= T::one();
            for l in (0..layers).rev() {
                let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
                let prev = &acts[l];
                let gwl = &mut gw[l];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == T::zero() {
                        continue;
                    }
                    gb[l][o] += d;
                    for (g, &a) in gwl[o * fan_in..(o + 1) * fan_in].iter_mut().zip(prev) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    let w = &self.weights[l];
                    let mut back = vec![T::zero(); fan_in];
                    for o in 0..fan_out {
                        let d = delta[o];
                        if d == T::zero() {
                            continue;
                        }
                        for (bi, &wi) in back.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                            *bi += d * wi;
                        }
                    }
                    // ReLU derivative, with relu'(0) = 0.
                    for (bi, &a) in back.iter_mut().zip(prev) {
                        if a <= T::zero() {
                            *bi = T::zero();
                        }
                    }
                    delta = back;
                }
            }
        }
        let scale = T::one() / T::of_usize(data.len());
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in gw.iter().zip(&gb) {
            out.extend(w.iter().map(|&g| g * scale));
            out.extend(b.iter().map(|&g| g * scale));
        }
        if out.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(out)
    }

    /// Exact Hessian-vector product of the mean loss over `data`, by the
    /// R-operator applied to backprop. ReLU contributes no curvature term.
    pub fn hvp_exact(&self, data: &Dataset<T>, v: &[T]) -> Result<Vec<T>> {
        self.check_input(data)?;
        if data.is_empty() {
            return Err(Error::InvalidArgument("hessian of an empty batch".into()));
        }
        if v.len() != self.num_params() {
            return Err(Error::DimensionMismatch { expected: self.num_params(), got: v.len() });
        }
        let layers = self.weights.len();
        let mut vw = Vec::with_capacity(layers);
        let mut vb = Vec::with_capacity(layers);
        let mut at = 0;
        for (w, b) in self.weights.iter().zip(&self.biases) {
            vw.push(&v[at..at + w.len()]);
            at += w.len();
            vb.push(&v[at..at + b.len()]);
            at += b.len();
        }
        let mut hw: Vec<Vec<T>> = self.weights.iter().map(|w| vec![T::zero(); w.len()]).collect();
        let mut hb: Vec<Vec<T>> = self.biases.iter().map(|b| vec![T::zero(); b.len()]).collect();
        let zero = T::zero();
        for (x, &y) in data.rows() {
            let mut acts = vec![x.to_vec()];
            let mut racts = vec![vec![zero; x.len()]];
            for l in 0..layers {
                let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
                let (w, dw) = (&self.weights[l], vw[l]);
                let (prev, rprev) = (&acts[l], &racts[l]);
                let mut z = self.biases[l].clone();
                let mut rz = vb[l].to_vec();
                for o in 0..fan_out {
                    let row = o * fan_in..(o + 1) * fan_in;
                    z[o] += crate::scalar::dot(&w[row.clone()], prev);
                    rz[o] += crate::scalar::dot(&dw[row.clone()], prev) + crate::scalar::dot(&w[row], rprev);
                }
                if l + 1 < layers {
                    for (zi, ri) in z.iter_mut().zip(rz.iter_mut()) {
                        if *zi <= zero {
                            *zi = zero;
                            *ri = zero;
                        }
                    }
                }
                acts.push(z);
                racts.push(rz);
            }
            let p = softmax(&acts[layers]);
            let pr = crate::scalar::dot(&p, &racts[layers]);
            let mut rdelta: Vec<T> = p.iter().zip(&racts[layers]).map(|(&pi, &ri)| pi * (ri - pr)).collect();
            let mut delta = p;
            delta[y] -= T::one();
            for l in (0..layers).rev() {
                let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
                let (prev, rprev) = (&acts[l], &racts[l]);
                for o in 0..fan_out {
                    let (d, rd) = (delta[o], rdelta[o]);
                    hb[l][o] += rd;
                    let row = &mut hw[l][o * fan_in..(o + 1) * fan_in];
                    for ((h, &a), &ra) in row.iter_mut().zip(prev).zip(rprev) {
                        *h += rd * a + d * ra;
                    }
                }
                if l > 0 {
                    let (w, dw) = (&self.weights[l], vw[l]);
                    let mut back = vec![zero; fan_in];
                    let mut rback = vec![zero; fan_in];
                    for o in 0..fan_out {
                        let (d, rd) = (delta[o], rdelta[o]);
                        let row = o * fan_in..(o + 1) * fan_in;
                        for ((i, &wi), &dwi) in (0..fan_in).zip(&w[row.clone()]).zip(&dw[row]) {
                            back[i] += d * wi;
                            rback[i] += rd * wi + d * dwi;
                        }
                    }
                    for ((bi, ri), &a) in back.iter_mut().zip(rback.iter_mut()).zip(prev) {
                        if a <= zero {
                            *bi = zero;
                            *ri = zero;
                        }
                    }
                    delta = back;
                    rdelta = rback;
                }
            }
        }
        let scale = T::one() / T::of_usize(data.len());
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in hw.iter().zip(&hb) {
            out.extend(w.iter().map(|&g| g * scale));
            out.extend(b.iter().map(|&g| g * scale));
        }
        if out.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("hessian-vector product"));
        }
        Ok(out)
    }

    fn check_input(&self, data: &Dataset<T>) -> Result<()> {
        if data.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: data.dim() });
        }
        if let Some(&bad) = data.labels().iter().find(|&&y| y >= self.classes()) {
            return Err(Error::LabelOutOfRange { label: bad, classes: self.classes() });
        }
        Ok(())
    }
}

pub(crate) fn argmax<T: Scalar>(z: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// Max-subtracted softmax.
pub(crate) fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(crate) fn cross_entropy<T: Scalar>(z: &[T], y: usize) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + z.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
    lse - z[y]
}
