use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Channel means over the spatial extent: `[H,W,C] → [C]`, `[B,H,W,C] → [B,C]`.
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor> {
    let (batch, area, c, batched) = split(x.shape())?;
    let mut out = vec![0.0; batch * c];
    for b in 0..batch {
        let plane = &x.data()[b * area * c..(b + 1) * area * c];
        let o = &mut out[b * c..(b + 1) * c];
        for px in plane.chunks_exact(c) {
            for (acc, v) in o.iter_mut().zip(px) {
                *acc += v;
            }
        }
        for acc in o.iter_mut() {
            *acc /= area as f64;
        }
    }
    let shape: Vec<usize> = if batched { vec![batch, c] } else { vec![c] };
    Tensor::new(&shape, out)
}

/// Spreads `upstream[c] / (H·W)` uniformly over each channel.
pub fn global_avg_pool_backward(input_shape: &[usize], upstream: &Tensor) -> Result<Tensor> {
    let (batch, area, c, batched) = split(input_shape)?;
    let expected: Vec<usize> = if batched { vec![batch, c] } else { vec![c] };
    if upstream.shape() != expected.as_slice() {
        return Err(Error::Contract(format!(
            "pool upstream {:?}, expected {expected:?}",
            upstream.shape()
        )));
    }
    let g = upstream.data();
    let scale = 1.0 / area as f64;
    let mut dx = Vec::with_capacity(batch * area * c);
    for b in 0..batch {
        for _ in 0..area {
            dx.extend(g[b * c..(b + 1) * c].iter().map(|v| v * scale));
        }
    }
    Tensor::new(input_shape, dx)
}

fn split(shape: &[usize]) -> Result<(usize, usize, usize, bool)> {
    match *shape {
        [h, w, c] => Ok((1, h * w, c, false)),
        [b, h, w, c] => Ok((b, h * w, c, true)),
        ref s => Err(Error::shape(format!(
            "pooling expects [H,W,C] or [B,H,W,C], got {s:?}"
        ))),
    }
}
