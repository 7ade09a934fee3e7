use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `y = W·x + b` for `x` of shape `[C]` or `[B, C]`, `W` of shape `[F, C]`.
pub fn dense_forward(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (batch, cin, batched) = rows(x)?;
    let fout = check_weights(weights, bias, cin)?;
    let w = weights.data();
    let mut out = Vec::with_capacity(batch * fout);
    for xr in x.data().chunks_exact(cin) {
        for f in 0..fout {
            let wr = &w[f * cin..(f + 1) * cin];
            out.push(bias.data()[f] + wr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    let shape: Vec<usize> = if batched { vec![batch, fout] } else { vec![fout] };
    Tensor::new(&shape, out)
}

/// Returns `(dx, dW, db)`.
pub fn dense_backward(x: &Tensor, weights: &Tensor, upstream: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let (batch, cin, _) = rows(x)?;
    let fout = weights.shape()[0];
    weights.expect_shape(&[fout, cin])?;
    if upstream.len() != batch * fout || upstream.shape().last() != Some(&fout) {
        return Err(Error::Contract(format!(
            "dense upstream {:?} does not match {batch} rows of {fout} outputs",
            upstream.shape()
        )));
    }
    let w = weights.data();
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; fout];
    for ((xr, gr), dxr) in x
        .data()
        .chunks_exact(cin)
        .zip(upstream.data().chunks_exact(fout))
        .zip(dx.chunks_exact_mut(cin))
    {
        for (f, &g) in gr.iter().enumerate() {
            db[f] += g;
            let wr = &w[f * cin..(f + 1) * cin];
            let dwr = &mut dw[f * cin..(f + 1) * cin];
            for i in 0..cin {
                dwr[i] += g * xr[i];
                dxr[i] += g * wr[i];
            }
        }
    }
    Ok((
        Tensor::new(x.shape(), dx)?,
        Tensor::new(weights.shape(), dw)?,
        Tensor::vector(db),
    ))
}

/// Max-shifted softmax of a single logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Row-wise softmax over the trailing axis.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let k = *logits.shape().last().expect("rank >= 1");
    let data = logits.data().chunks_exact(k).flat_map(softmax).collect();
    Tensor::new(logits.shape(), data).expect("same shape")
}

/// Gradient of the batch-mean cross-entropy w.r.t. the logits:
/// `upstream · (p − onehot(label)) / B`.
pub fn softmax_xent_backward(probs: &Tensor, labels: &[usize], upstream: f64) -> Result<Tensor> {
    let k = *probs.shape().last().expect("rank >= 1");
    let batch = probs.len() / k;
    if labels.len() != batch {
        return Err(Error::Contract(format!(
            "{} labels for {batch} probability rows",
            labels.len()
        )));
    }
    let scale = upstream / batch as f64;
    let mut grad = probs.data().to_vec();
    for (row, &label) in grad.chunks_exact_mut(k).zip(labels) {
        check_label(label, k)?;
        row[label] -= 1.0;
        row.iter_mut().for_each(|v| *v *= scale);
    }
    Tensor::new(probs.shape(), grad)
}

/// Dense layer, softmax and cross-entropy for one example.
/// Returns `(probs, −ln probs[label])`.
pub fn dense_softmax_xent(
    features: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    label: usize,
) -> Result<(Tensor, f64)> {
    if features.rank() != 1 {
        return Err(Error::shape(format!(
            "features must be a vector, got {:?}",
            features.shape()
        )));
    }
    let logits = dense_forward(features, weights, bias)?;
    check_label(label, logits.len())?;
    let probs = softmax_rows(&logits);
    let loss = -probs.data()[label].ln();
    Ok((probs, loss))
}

#[derive(Clone, Debug)]
pub struct DenseSoftmaxGrads {
    pub features: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
    pub logits: Tensor,
}

/// Gradients of [`dense_softmax_xent`]'s loss.
pub fn dense_softmax_xent_backward(
    features: &Tensor,
    weights: &Tensor,
    probs: &Tensor,
    label: usize,
) -> Result<DenseSoftmaxGrads> {
    let logits = softmax_xent_backward(probs, &[label], 1.0)?;
    let (df, dw, db) = dense_backward(features, weights, &logits)?;
    Ok(DenseSoftmaxGrads {
        features: df,
        weights: dw,
        bias: db,
        logits,
    })
}

fn rows(x: &Tensor) -> Result<(usize, usize, bool)> {
    match *x.shape() {
        [c] => Ok((1, c, false)),
        [b, c] => Ok((b, c, true)),
        ref s => Err(Error::shape(format!("dense input must be [C] or [B,C], got {s:?}"))),
    }
}

fn check_weights(weights: &Tensor, bias: &Tensor, cin: usize) -> Result<usize> {
    if weights.rank() != 2 {
        return Err(Error::shape(format!("dense weights must be [F,C], got {:?}", weights.shape())));
    }
    let fout = weights.shape()[0];
    weights.expect_shape(&[fout, cin])?;
    bias.expect_shape(&[fout])?;
    Ok(fout)
}

fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(Error::Contract(format!("label {label} out of range for {classes} classes")));
    }
    Ok(())
}
