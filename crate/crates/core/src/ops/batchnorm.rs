use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_BN_MOMENTUM: f64 = 0.9;
pub const DEFAULT_BN_EPSILON: f64 = 1e-3;

/// Whether batch statistics (training) or running statistics (inference)
/// normalize the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-channel batch-normalization parameters and running moments.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormState {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNormState {
    /// `gamma = 1`, `beta = 0`, running mean 0 and variance 1.
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::full(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], 1.0),
            momentum: DEFAULT_BN_MOMENTUM,
            epsilon: DEFAULT_BN_EPSILON,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn validate(&self) -> Result<()> {
        let c = self.channels();
        for (name, t) in [
            ("beta", &self.beta),
            ("running_mean", &self.running_mean),
            ("running_var", &self.running_var),
        ] {
            if t.shape() != [c] {
                return Err(Error::shape(format!(
                    "batchnorm {name} has shape {:?}, expected [{c}]",
                    t.shape()
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("batchnorm epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.momentum > 0.0 && self.momentum < 1.0) {
            return Err(Error::Config(format!(
                "batchnorm momentum must lie in (0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Values saved by [`batchnorm_forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache {
    pub mode: Mode,
    /// Normalized input before scale and shift.
    pub xhat: Tensor,
    /// Per-channel `1 / sqrt(var + eps)` of whichever moments were used.
    pub inv_std: Vec<f64>,
    /// Per-channel moments of the batch (train mode) or the running ones.
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Normalizes the trailing (channel) axis of `x` over all leading axes.
///
/// Returns the output, the backward cache and the successor state. In train
/// mode the successor's running moments are
/// `momentum · running + (1 − momentum) · batch` (biased batch variance);
/// in infer mode the state is returned unchanged.
pub fn batchnorm_forward(
    x: &Tensor,
    state: &BatchNormState,
    mode: Mode,
) -> Result<(Tensor, BatchNormCache, BatchNormState)> {
    state.validate()?;
    let c = state.channels();
    if x.rank() < 2 || x.shape()[x.rank() - 1] != c {
        return Err(Error::shape(format!(
            "batchnorm input {:?} must have at least two axes and {c} trailing channels",
            x.shape()
        )));
    }
    let n = x.len() / c;
    let data = x.data();

    let (mean, var) = match mode {
        Mode::Train => {
            let mut mean = vec![0.0; c];
            for px in data.chunks_exact(c) {
                for (m, v) in mean.iter_mut().zip(px) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            let mut var = vec![0.0; c];
            for px in data.chunks_exact(c) {
                for ((s, v), m) in var.iter_mut().zip(px).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|s| *s /= n as f64);
            (mean, var)
        }
        Mode::Infer => (
            state.running_mean.data().to_vec(),
            state.running_var.data().to_vec(),
        ),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + state.epsilon).sqrt()).collect();

    let gamma = state.gamma.data();
    let beta = state.beta.data();
    let mut xhat = Vec::with_capacity(x.len());
    let mut y = Vec::with_capacity(x.len());
    for px in data.chunks_exact(c) {
        for ch in 0..c {
            let h = (px[ch] - mean[ch]) * inv_std[ch];
            xhat.push(h);
            y.push(gamma[ch] * h + beta[ch]);
        }
    }

    let mut next = state.clone();
    if mode == Mode::Train {
        let m = state.momentum;
        for (r, b) in next.running_mean.data_mut().iter_mut().zip(&mean) {
            *r = m * *r + (1.0 - m) * b;
        }
        for (r, b) in next.running_var.data_mut().iter_mut().zip(&var) {
            *r = m * *r + (1.0 - m) * b;
        }
    }

    let cache = BatchNormCache {
        mode,
        xhat: Tensor::new(x.shape(), xhat)?,
        inv_std,
        mean,
        var,
    };
    Ok((Tensor::new(x.shape(), y)?, cache, next))
}

/// Returns `(dx, dgamma, dbeta)`. In train mode the dependence of the batch
/// moments on `x` is differentiated through.
pub fn batchnorm_backward(
    cache: &BatchNormCache,
    gamma: &Tensor,
    upstream: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    if upstream.shape() != cache.xhat.shape() {
        return Err(Error::Contract(format!(
            "batchnorm upstream {:?} vs forward output {:?}",
            upstream.shape(),
            cache.xhat.shape()
        )));
    }
    let c = cache.inv_std.len();
    gamma.expect_shape(&[c])?;
    let n = (upstream.len() / c) as f64;
    let g = upstream.data();
    let xh = cache.xhat.data();
    let gm = gamma.data();

    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    for (gp, hp) in g.chunks_exact(c).zip(xh.chunks_exact(c)) {
        for ch in 0..c {
            dgamma[ch] += gp[ch] * hp[ch];
            dbeta[ch] += gp[ch];
        }
    }

    let dx: Vec<f64> = match cache.mode {
        Mode::Infer => g
            .chunks_exact(c)
            .flat_map(|gp| (0..c).map(move |ch| gp[ch] * gm[ch] * cache.inv_std[ch]))
            .collect(),
        Mode::Train => {
            // dxhat = g·gamma; Σdxhat = gamma·dbeta; Σ(dxhat·xhat) = gamma·dgamma.
            let mut out = Vec::with_capacity(g.len());
            for (gp, hp) in g.chunks_exact(c).zip(xh.chunks_exact(c)) {
                for ch in 0..c {
                    let dxhat = gp[ch] * gm[ch];
                    let v = n * dxhat - gm[ch] * dbeta[ch] - hp[ch] * gm[ch] * dgamma[ch];
                    out.push(v * cache.inv_std[ch] / n);
                }
            }
            out
        }
    };

    Ok((
        Tensor::new(upstream.shape(), dx)?,
        Tensor::vector(dgamma),
        Tensor::vector(dbeta),
    ))
}
