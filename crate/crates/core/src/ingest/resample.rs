use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DECIMATION: usize = 10;

/// Causal moving average of width `width`; the first `width − 1` outputs
/// average only the samples seen so far.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += x[i];
        if i >= width {
            acc -= x[i - width];
        }
        out.push(acc / (i + 1).min(width) as f64);
    }
    out
}

/// Zero-phase low-pass: a width-10 moving average run forward and then
/// backward over the signal.
pub fn zero_phase_smooth(x: &[f64]) -> Vec<f64> {
    let mut y = moving_average(x, DECIMATION);
    y.reverse();
    let mut z = moving_average(&y, DECIMATION);
    z.reverse();
    z
}

/// 1000 Hz → 100 Hz: zero-phase smoothing then every tenth sample from 0.
/// `[N, L] → [ceil(N/10), L]`.
pub fn downsample_10x(signal: &Tensor) -> Result<Tensor> {
    let [n, leads] = *signal.shape() else {
        return Err(Error::shape(format!("expected [N, leads], got {:?}", signal.shape())));
    };
    let out_n = n.div_ceil(DECIMATION);
    let mut out = vec![0.0; out_n * leads];
    for l in 0..leads {
        let lead: Vec<f64> = signal.data().iter().skip(l).step_by(leads).copied().collect();
        let smooth = zero_phase_smooth(&lead);
        for (k, v) in smooth.iter().step_by(DECIMATION).enumerate() {
            out[k * leads + l] = *v;
        }
    }
    Tensor::new(&[out_n, leads], out)
}
