use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Strided, unpadded 1-D convolution without bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv1dSpec {
    pub num_filters: usize,
    pub kernel_size: usize,
    pub stride: usize,
}

impl Conv1dSpec {
    pub fn new(num_filters: usize, kernel_size: usize, stride: usize) -> Result<Self> {
        if num_filters == 0 || kernel_size == 0 || stride == 0 {
            return Err(Error::Config(format!(
                "conv1d needs positive filters/kernel/stride, got {num_filters}/{kernel_size}/{stride}"
            )));
        }
        Ok(Self {
            num_filters,
            kernel_size,
            stride,
        })
    }
}

impl Default for Conv1dSpec {
    fn default() -> Self {
        Self {
            num_filters: 20,
            kernel_size: 100,
            stride: 50,
        }
    }
}

/// Number of output frames for a length-`len` signal.
pub fn conv1d_frames(len: usize, spec: &Conv1dSpec) -> Result<usize> {
    if len < spec.kernel_size {
        return Err(Error::InputTooShort {
            len,
            kernel: spec.kernel_size,
        });
    }
    Ok((len - spec.kernel_size) / spec.stride + 1)
}

struct Dims {
    batch: usize,
    len: usize,
    frames: usize,
    batched: bool,
}

fn dims(signal: &Tensor, weights: &Tensor, spec: &Conv1dSpec) -> Result<Dims> {
    weights.expect_shape(&[spec.num_filters, spec.kernel_size])?;
    let (batch, len, batched) = match *signal.shape() {
        [t] => (1, t, false),
        [b, t] => (b, t, true),
        ref s => return Err(Error::shape(format!("conv1d signal must be [T] or [B,T], got {s:?}"))),
    };
    let frames = conv1d_frames(len, spec)?;
    Ok(Dims {
        batch,
        len,
        frames,
        batched,
    })
}

fn out_shape(d: &Dims, filters: usize) -> Vec<usize> {
    if d.batched {
        vec![d.batch, d.frames, filters]
    } else {
        vec![d.frames, filters]
    }
}

/// `out[t][f] = Σ_k weights[f][k] · signal[t·stride + k]`.
///
/// Accepts `[T]` or `[B, T]` signals; the output is `[frames, F]` or
/// `[B, frames, F]` respectively.
pub fn conv1d_forward(signal: &Tensor, weights: &Tensor, spec: &Conv1dSpec) -> Result<Tensor> {
    let d = dims(signal, weights, spec)?;
    let (nf, k) = (spec.num_filters, spec.kernel_size);
    let x = signal.data();
    let w = weights.data();
    let mut out = vec![0.0; d.batch * d.frames * nf];
    for b in 0..d.batch {
        let xb = &x[b * d.len..(b + 1) * d.len];
        for t in 0..d.frames {
            let window = &xb[t * spec.stride..t * spec.stride + k];
            let row = &mut out[(b * d.frames + t) * nf..(b * d.frames + t + 1) * nf];
            for (f, o) in row.iter_mut().enumerate() {
                *o = dot(&w[f * k..(f + 1) * k], window);
            }
        }
    }
    Tensor::new(&out_shape(&d, nf), out)
}

/// Gradients of [`conv1d_forward`] with respect to the signal and the weights.
pub fn conv1d_backward(
    signal: &Tensor,
    weights: &Tensor,
    spec: &Conv1dSpec,
    upstream: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let d = dims(signal, weights, spec)?;
    let (nf, k) = (spec.num_filters, spec.kernel_size);
    if upstream.shape() != out_shape(&d, nf).as_slice() {
        return Err(Error::Contract(format!(
            "conv1d upstream gradient has shape {:?}, forward produced {:?}",
            upstream.shape(),
            out_shape(&d, nf)
        )));
    }
    let x = signal.data();
    let w = weights.data();
    let g = upstream.data();
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; w.len()];
    for b in 0..d.batch {
        let base = b * d.len;
        for t in 0..d.frames {
            let start = base + t * spec.stride;
            let grow = &g[(b * d.frames + t) * nf..(b * d.frames + t + 1) * nf];
            for (f, &gf) in grow.iter().enumerate() {
                if gf == 0.0 {
                    continue;
                }
                let wf = &w[f * k..(f + 1) * k];
                let dwf = &mut dw[f * k..(f + 1) * k];
                let xs = &x[start..start + k];
                let dxs = &mut dx[start..start + k];
                for i in 0..k {
                    dwf[i] += gf * xs[i];
                    dxs[i] += gf * wf[i];
                }
            }
        }
    }
    Ok((
        Tensor::new(signal.shape(), dx)?,
        Tensor::new(weights.shape(), dw)?,
    ))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
