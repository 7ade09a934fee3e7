//! Finite-difference cases for every layer and for the whole network.

use mirnet_core::gradcheck::{grad_check, GradCheckReport};
use mirnet_core::model::forward;
use mirnet_core::ops::{
    batchnorm_backward, batchnorm_forward, conv1d_backward, conv1d_forward, conv2d_dilated_backward,
    conv2d_dilated_forward, dense_backward, dense_forward, global_avg_pool, global_avg_pool_backward, relu,
    relu_backward, softmax_rows, softmax_xent_backward, BatchNormState, Conv1dSpec, Conv2dSpec,
};
use mirnet_core::{init_model, Mode, ModelParams, Result, Tensor};
use rand::Rng;

use super::{rng, tiny_arch, uniform};

pub const H: f64 = 1e-6;
pub const TOL: f64 = 1e-5;
/// Smallest |ReLU input| accepted for an end-to-end case.
pub const MIN_RELU_MARGIN: f64 = 1e-4;

pub struct Case {
    pub layer: &'static str,
    pub report: GradCheckReport,
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

pub fn conv1d_case(seed: u64) -> Result<Case> {
    let mut r = rng(seed);
    let kernel = r.random_range(2..=6);
    let spec = Conv1dSpec::new(r.random_range(1..=3), kernel, r.random_range(1..=3))?;
    let len = r.random_range(kernel..=40);
    let x = uniform(&mut r, &[2, len], 1.0);
    let w = uniform(&mut r, &[spec.num_filters, kernel], 1.0);
    let up = uniform(&mut r, conv1d_forward(&x, &w, &spec)?.shape(), 1.0);
    let (dx, dw) = conv1d_backward(&x, &w, &spec, &up)?;
    let report = grad_check(
        |p| Ok(dot(&conv1d_forward(&p[0], &p[1], &spec)?, &up)),
        &[x, w],
        &[dx, dw],
        H,
        TOL,
    )?;
    Ok(Case { layer: "conv1d", report })
}

pub fn conv2d_case(seed: u64) -> Result<Case> {
    let mut r = rng(seed);
    let dils = [1, 2, 4, 16];
    let dilation = (dils[r.random_range(0..4)], dils[r.random_range(0..4)]);
    let spec = Conv2dSpec::new(2, (3, 3), dilation)?;
    let x = uniform(&mut r, &[5, 6, 3], 1.0);
    let w = uniform(&mut r, &[2, 3, 3, 3], 1.0);
    let up = uniform(&mut r, &[5, 6, 2], 1.0);
    let (dx, dw) = conv2d_dilated_backward(&x, &w, &spec, &up)?;
    let report = grad_check(
        |p| Ok(dot(&conv2d_dilated_forward(&p[0], &p[1], &spec)?, &up)),
        &[x, w],
        &[dx, dw],
        H,
        TOL,
    )?;
    Ok(Case { layer: "conv2d", report })
}

pub fn relu_case(seed: u64) -> Result<Case> {
    let mut r = rng(seed);
    // Keep every entry at least 1e-2 from the kink.
    let x = Tensor::from_fn(&[4, 5], |_| {
        let m = r.random_range(0.01..1.0);
        if r.random_bool(0.5) { m } else { -m }
    });
    let up = uniform(&mut r, &[4, 5], 1.0);
    let dx = relu_backward(&x, &up)?;
    let report = grad_check(|p| Ok(dot(&relu(&p[0]), &up)), &[x], &[dx], H, TOL)?;
    Ok(Case { layer: "relu", report })
}

pub fn batchnorm_case(seed: u64, mode: Mode) -> Result<Case> {
    let mut r = rng(seed);
    let c = 2;
    let shape: &[usize] = if r.random_bool(0.5) { &[4, c] } else { &[4, 2, 3, c] };
    let x = uniform(&mut r, shape, 2.0);
    let mut state = BatchNormState::new(c);
    state.gamma = Tensor::from_fn(&[c], |_| r.random_range(0.5..1.5));
    state.beta = uniform(&mut r, &[c], 0.5);
    state.running_mean = uniform(&mut r, &[c], 0.5);
    state.running_var = Tensor::from_fn(&[c], |_| r.random_range(0.5..2.0));
    let up = uniform(&mut r, shape, 1.0);
    let (_, cache, _) = batchnorm_forward(&x, &state, mode)?;
    let (dx, dg, db) = batchnorm_backward(&cache, &state.gamma, &up)?;
    let params = [x, state.gamma.clone(), state.beta.clone()];
    let report = grad_check(
        |p| {
            let mut s = state.clone();
            s.gamma = p[1].clone();
            s.beta = p[2].clone();
            Ok(dot(&batchnorm_forward(&p[0], &s, mode)?.0, &up))
        },
        &params,
        &[dx, dg, db],
        H,
        TOL,
    )?;
    let layer = match mode {
        Mode::Train => "batchnorm/train",
        Mode::Infer => "batchnorm/infer",
    };
    Ok(Case { layer, report })
}

pub fn pool_case(seed: u64) -> Result<Case> {
    let mut r = rng(seed);
    let x = uniform(&mut r, &[2, 3, 4, 5], 1.0);
    let up = uniform(&mut r, &[2, 5], 1.0);
    let dx = global_avg_pool_backward(x.shape(), &up)?;
    let report = grad_check(|p| Ok(dot(&global_avg_pool(&p[0])?, &up)), &[x], &[dx], H, TOL)?;
    Ok(Case { layer: "global_avg_pool", report })
}

fn mean_xent(x: &Tensor, w: &Tensor, b: &Tensor, labels: &[usize]) -> Result<f64> {
    let probs = softmax_rows(&dense_forward(x, w, b)?);
    let k = w.shape()[0];
    let total: f64 = probs
        .data()
        .chunks_exact(k)
        .zip(labels)
        .map(|(row, &l)| -row[l].ln())
        .sum();
    Ok(total / labels.len() as f64)
}

pub fn dense_xent_case(seed: u64) -> Result<Case> {
    let mut r = rng(seed);
    let (batch, d, k) = (3, 5, 7);
    let x = uniform(&mut r, &[batch, d], 1.0);
    let w = uniform(&mut r, &[k, d], 1.0);
    let b = uniform(&mut r, &[k], 0.5);
    let labels: Vec<usize> = (0..batch).map(|_| r.random_range(0..k)).collect();
    let probs = softmax_rows(&dense_forward(&x, &w, &b)?);
    let dlogits = softmax_xent_backward(&probs, &labels, 1.0)?;
    let (dx, dw, db) = dense_backward(&x, &w, &dlogits)?;
    let report = grad_check(
        |p| mean_xent(&p[0], &p[1], &p[2], &labels),
        &[x, w, b],
        &[dx, dw, db],
        H,
        TOL,
    )?;
    Ok(Case { layer: "dense+softmax-xent", report })
}

pub fn with_trainables(p: &ModelParams, values: &[Tensor]) -> ModelParams {
    let mut q = p.clone();
    for (slot, v) in q.trainables_mut().into_iter().zip(values) {
        *slot = v.clone();
    }
    q
}

/// Whole-network loss on the tiny architecture in train mode. Draws fresh
/// inputs until no ReLU input lies within [`MIN_RELU_MARGIN`] of zero, so the
/// loss is smooth within the probe step.
pub fn end_to_end_case(seed: u64) -> Result<Case> {
    let arch = tiny_arch();
    for attempt in 0..50u64 {
        let mut r = rng(seed.wrapping_mul(1000).wrapping_add(attempt));
        let mut p = init_model(arch, r.random())?;
        // Non-trivial batch-norm parameters so every path carries signal.
        for bn in &mut p.bn {
            bn.gamma = Tensor::from_fn(&[arch.channels], |_| r.random_range(0.5..1.5));
            bn.beta = uniform(&mut r, &[arch.channels], 0.3);
        }
        p.dense_b = uniform(&mut r, &[arch.classes], 0.3);
        let batch = uniform(&mut r, &[2, arch.segment_len, arch.leads], 1.0);
        let labels: Vec<usize> = (0..2).map(|_| r.random_range(0..arch.classes)).collect();

        let pass = forward(&p, &batch, Mode::Train, Some(&labels))?;
        if pass.tape.min_relu_margin() < MIN_RELU_MARGIN {
            continue;
        }
        let analytic = pass.gradients()?;
        let params: Vec<Tensor> = p.trainables().into_iter().cloned().collect();
        let report = grad_check(
            |vals| {
                let q = with_trainables(&p, vals);
                Ok(forward(&q, &batch, Mode::Train, Some(&labels))?
                    .loss_value()
                    .expect("labels given"))
            },
            &params,
            &analytic,
            H,
            TOL,
        )?;
        return Ok(Case { layer: "network", report });
    }
    panic!("no smooth end-to-end instance found for seed {seed}");
}

/// Every layer case plus the end-to-end case for one seed.
pub fn all_cases(seed: u64) -> Result<Vec<Case>> {
    Ok(vec![
        conv1d_case(seed)?,
        conv2d_case(seed)?,
        relu_case(seed)?,
        batchnorm_case(seed, Mode::Train)?,
        batchnorm_case(seed, Mode::Infer)?,
        pool_case(seed)?,
        dense_xent_case(seed)?,
        end_to_end_case(seed)?,
    ])
}
