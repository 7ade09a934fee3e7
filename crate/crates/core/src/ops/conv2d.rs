use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Dilated 2-D convolution with zero "same" padding and no bias.
///
/// Weights are laid out `[F, kh, kw, C]`; activations are channels-last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv2dSpec {
    pub num_filters: usize,
    pub kernel: (usize, usize),
    pub dilation: (usize, usize),
}

impl Conv2dSpec {
    pub fn new(num_filters: usize, kernel: (usize, usize), dilation: (usize, usize)) -> Result<Self> {
        if num_filters == 0 {
            return Err(Error::Config("conv2d needs at least one filter".into()));
        }
        if kernel.0 % 2 == 0 || kernel.1 % 2 == 0 {
            return Err(Error::Config(format!(
                "same padding needs an odd kernel, got {kernel:?}"
            )));
        }
        if dilation.0 == 0 || dilation.1 == 0 {
            return Err(Error::Config(format!("dilation must be >= 1, got {dilation:?}")));
        }
        Ok(Self {
            num_filters,
            kernel,
            dilation,
        })
    }

    /// 3×3 kernel with the given dilation.
    pub fn square3(num_filters: usize, dilation: usize) -> Self {
        Self::new(num_filters, (3, 3), (dilation, dilation)).expect("valid 3x3 spec")
    }
}

struct Dims {
    batch: usize,
    h: usize,
    w: usize,
    c: usize,
    batched: bool,
}

fn dims(input: &Tensor, weights: &Tensor, spec: &Conv2dSpec) -> Result<Dims> {
    let (batch, h, w, c, batched) = match *input.shape() {
        [h, w, c] => (1, h, w, c, false),
        [b, h, w, c] => (b, h, w, c, true),
        ref s => {
            return Err(Error::shape(format!(
                "conv2d input must be [H,W,C] or [B,H,W,C], got {s:?}"
            )))
        }
    };
    weights.expect_shape(&[spec.num_filters, spec.kernel.0, spec.kernel.1, c])?;
    Ok(Dims {
        batch,
        h,
        w,
        c,
        batched,
    })
}

fn out_shape(d: &Dims, f: usize) -> Vec<usize> {
    if d.batched {
        vec![d.batch, d.h, d.w, f]
    } else {
        vec![d.h, d.w, f]
    }
}

/// In-bounds source coordinate for output position `pos` and tap `tap`.
#[inline]
fn source(pos: usize, tap: usize, half: usize, dilation: usize, extent: usize) -> Option<usize> {
    let s = pos as isize + (tap as isize - half as isize) * dilation as isize;
    (s >= 0 && (s as usize) < extent).then_some(s as usize)
}

/// `out[i][j][f] = Σ_{a,b} Σ_c w[f][a][b][c] · in[i + (a−ha)·dr][j + (b−hb)·dc][c]`,
/// taps outside the input read zero. Output spatial extents equal the
/// input's for every dilation.
pub fn conv2d_dilated_forward(input: &Tensor, weights: &Tensor, spec: &Conv2dSpec) -> Result<Tensor> {
    let d = dims(input, weights, spec)?;
    let (kh, kw) = spec.kernel;
    let (hh, hw) = (kh / 2, kw / 2);
    let (dr, dc) = spec.dilation;
    let nf = spec.num_filters;
    let c = d.c;
    let x = input.data();
    let wt = weights.data();
    let mut out = vec![0.0; d.batch * d.h * d.w * nf];
    for b in 0..d.batch {
        for i in 0..d.h {
            for j in 0..d.w {
                let o = ((b * d.h + i) * d.w + j) * nf;
                let orow = &mut out[o..o + nf];
                for a in 0..kh {
                    let Some(si) = source(i, a, hh, dr, d.h) else { continue };
                    for bb in 0..kw {
                        let Some(sj) = source(j, bb, hw, dc, d.w) else { continue };
                        let xs = &x[((b * d.h + si) * d.w + sj) * c..][..c];
                        for (f, of) in orow.iter_mut().enumerate() {
                            let ws = &wt[((f * kh + a) * kw + bb) * c..][..c];
                            *of += ws.iter().zip(xs).map(|(p, q)| p * q).sum::<f64>();
                        }
                    }
                }
            }
        }
    }
    Tensor::new(&out_shape(&d, nf), out)
}

/// Gradients of [`conv2d_dilated_forward`] with respect to input and weights.
pub fn conv2d_dilated_backward(
    input: &Tensor,
    weights: &Tensor,
    spec: &Conv2dSpec,
    upstream: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let d = dims(input, weights, spec)?;
    let nf = spec.num_filters;
    if upstream.shape() != out_shape(&d, nf).as_slice() {
        return Err(Error::Contract(format!(
            "conv2d upstream gradient has shape {:?}, forward produced {:?}",
            upstream.shape(),
            out_shape(&d, nf)
        )));
    }
    let (kh, kw) = spec.kernel;
    let (hh, hw) = (kh / 2, kw / 2);
    let (dr, dc) = spec.dilation;
    let c = d.c;
    let x = input.data();
    let wt = weights.data();
    let g = upstream.data();
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; wt.len()];
    for b in 0..d.batch {
        for i in 0..d.h {
            for j in 0..d.w {
                let grow = &g[((b * d.h + i) * d.w + j) * nf..][..nf];
                for a in 0..kh {
                    let Some(si) = source(i, a, hh, dr, d.h) else { continue };
                    for bb in 0..kw {
                        let Some(sj) = source(j, bb, hw, dc, d.w) else { continue };
                        let xoff = ((b * d.h + si) * d.w + sj) * c;
                        for (f, &gf) in grow.iter().enumerate() {
                            if gf == 0.0 {
                                continue;
                            }
                            let woff = ((f * kh + a) * kw + bb) * c;
                            for ch in 0..c {
                                dw[woff + ch] += gf * x[xoff + ch];
                                dx[xoff + ch] += gf * wt[woff + ch];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((
        Tensor::new(input.shape(), dx)?,
        Tensor::new(weights.shape(), dw)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_shape_on_network_volume() {
        let spec = Conv2dSpec::square3(7, 1);
        let out = conv2d_dilated_forward(&Tensor::zeros(&[9, 20, 12]), &Tensor::zeros(&[7, 3, 3, 12]), &spec)
            .unwrap();
        assert_eq!(out.shape(), &[9, 20, 7]);
    }

    #[test]
    fn identity_kernel_copies_channel_zero() {
        let input = Tensor::from_fn(&[4, 5, 2], |i| (i as f64 * 0.37).cos());
        for dil in [1, 2, 4, 16] {
            let spec = Conv2dSpec::square3(1, dil);
            let mut w = Tensor::zeros(&[1, 3, 3, 2]);
            let center = w.offset(&[0, 1, 1, 0]);
            w.data_mut()[center] = 1.0;
            let out = conv2d_dilated_forward(&input, &w, &spec).unwrap();
            for i in 0..4 {
                for j in 0..5 {
                    assert_eq!(out.at(&[i, j, 0]), input.at(&[i, j, 0]));
                }
            }
        }
    }

    #[test]
    fn dilation_two_on_ones() {
        // Brute-force count of in-bounds taps on a 3x3 grid with dilation 2.
        let spec = Conv2dSpec::square3(1, 2);
        let out = conv2d_dilated_forward(&Tensor::full(&[3, 3, 1], 1.0), &Tensor::full(&[1, 3, 3, 1], 1.0), &spec)
            .unwrap();
        assert_eq!(out.data(), &[4.0, 2.0, 4.0, 2.0, 1.0, 2.0, 4.0, 2.0, 4.0]);
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(Conv2dSpec::new(1, (2, 3), (1, 1)).is_err());
        assert!(Conv2dSpec::new(1, (3, 3), (0, 1)).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let spec = Conv2dSpec::square3(2, 2);
        let x = Tensor::from_fn(&[5, 6, 3], |i| i as f64);
        let w = Tensor::from_fn(&[2, 3, 3, 3], |i| i as f64);
        let (dx, dw) = conv2d_dilated_backward(&x, &w, &spec, &Tensor::zeros(&[5, 6, 2])).unwrap();
        assert!(dx.data().iter().chain(dw.data()).all(|&v| v == 0.0));
    }
}
