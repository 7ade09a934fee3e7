use crate::error::{Error, Result};
use crate::ops::{self, BatchNormState, Conv2dSpec, Mode};
use crate::tape::{Gradients, Tape, Var};
use crate::tensor::Tensor;

use super::{ModelParams, RESIDUAL_BLOCKS};

/// One recorded forward pass.
#[derive(Debug)]
pub struct ForwardPass {
    pub tape: Tape,
    /// Tape leaves for [`ModelParams::trainables`], same order.
    pub params: Vec<Var>,
    /// Per-lead front-end copies; empty unless built by
    /// [`forward_untied_reference`].
    pub frontend_copies: Vec<Var>,
    pub input: Var,
    /// `[B, frames, filters, leads]`
    pub frontend_out: Var,
    /// Outputs of conv_in, each residual block, the final conv and its BN.
    pub stages: Vec<Var>,
    pub logits: Var,
    /// `[B, classes]`
    pub probs: Tensor,
    pub loss: Option<Var>,
    /// Batch-norm states after this pass (running moments advanced in train mode).
    pub bn_states: Vec<BatchNormState>,
}

impl ForwardPass {
    pub fn loss_value(&self) -> Option<f64> {
        self.loss.map(|l| self.tape.value(l).data()[0])
    }

    pub fn backward(&self) -> Result<Gradients> {
        let loss = self
            .loss
            .ok_or_else(|| Error::Contract("forward pass was run without labels".into()))?;
        self.tape.backward(loss)
    }

    /// Loss gradients for every trainable array, in canonical order.
    pub fn gradients(&self) -> Result<Vec<Tensor>> {
        let g = self.backward()?;
        Ok(self
            .params
            .iter()
            .map(|&v| g.get_or_zeros(v, self.tape.value(v)))
            .collect())
    }

    pub fn stage_shapes(&self) -> Vec<Vec<usize>> {
        std::iter::once(self.frontend_out)
            .chain(self.stages.iter().copied())
            .map(|v| self.tape.value(v).shape().to_vec())
            .collect()
    }
}

/// Arguments of one residual block.
#[derive(Clone, Copy, Debug)]
pub struct ResidualBranch<'a> {
    pub w1: &'a Tensor,
    pub w2: &'a Tensor,
    pub bn1: &'a BatchNormState,
    pub bn2: &'a BatchNormState,
    pub d1: (usize, usize),
    pub d2: (usize, usize),
}

struct BnVars<'a> {
    gamma: Var,
    beta: Var,
    state: &'a BatchNormState,
}

fn conv_spec(weight: &Tensor, dilation: (usize, usize)) -> Result<Conv2dSpec> {
    let s = weight.shape();
    if s.len() != 4 {
        return Err(Error::shape(format!("conv2d weights must be rank 4, got {s:?}")));
    }
    Conv2dSpec::new(s[0], (s[1], s[2]), dilation)
}

/// conv → ReLU → BN → conv → ReLU → BN, then the identity shortcut.
fn record_block(
    tape: &mut Tape,
    x: Var,
    (w1, d1): (Var, (usize, usize)),
    (w2, d2): (Var, (usize, usize)),
    bn1: BnVars<'_>,
    bn2: BnVars<'_>,
    mode: Mode,
) -> Result<(Var, BatchNormState, BatchNormState)> {
    let spec1 = conv_spec(tape.value(w1), d1)?;
    let spec2 = conv_spec(tape.value(w2), d2)?;
    let h = tape.conv2d(x, w1, spec1)?;
    let h = tape.relu(h);
    let (h, s1) = tape.batch_norm(h, bn1.gamma, bn1.beta, bn1.state, mode)?;
    let h = tape.conv2d(h, w2, spec2)?;
    let h = tape.relu(h);
    let (h, s2) = tape.batch_norm(h, bn2.gamma, bn2.beta, bn2.state, mode)?;
    let y = tape.add(h, x)?;
    Ok((y, s1, s2))
}

/// Applies a residual block to `x` (`[H,W,C]` or `[B,H,W,C]`). Returns the
/// output and the successor states of its two batch norms.
pub fn residual_block(
    x: &Tensor,
    branch: ResidualBranch<'_>,
    mode: Mode,
) -> Result<(Tensor, [BatchNormState; 2])> {
    let mut tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let w1 = tape.leaf(branch.w1.clone());
    let w2 = tape.leaf(branch.w2.clone());
    let g1 = tape.leaf(branch.bn1.gamma.clone());
    let b1 = tape.leaf(branch.bn1.beta.clone());
    let g2 = tape.leaf(branch.bn2.gamma.clone());
    let b2 = tape.leaf(branch.bn2.beta.clone());
    let (y, s1, s2) = record_block(
        &mut tape,
        xv,
        (w1, branch.d1),
        (w2, branch.d2),
        BnVars { gamma: g1, beta: b1, state: branch.bn1 },
        BnVars { gamma: g2, beta: b2, state: branch.bn2 },
        mode,
    )?;
    Ok((tape.value(y).clone(), [s1, s2]))
}

fn check_batch(p: &ModelParams, batch: &Tensor) -> Result<usize> {
    let a = &p.arch;
    match *batch.shape() {
        [b, t, l] if t == a.segment_len && l == a.leads => Ok(b),
        ref s => Err(Error::shape(format!(
            "expected a [B, {}, {}] batch, got {s:?}",
            a.segment_len, a.leads
        ))),
    }
}

/// `weights` holds either one shared array or one per lead.
fn record_frontend(tape: &mut Tape, input: Var, weights: &[Var], p: &ModelParams) -> Result<Var> {
    let leads = p.arch.leads;
    let mut maps = Vec::with_capacity(leads);
    for lead in 0..leads {
        let w = weights[if weights.len() == 1 { 0 } else { lead }];
        let sig = tape.select_lead(input, lead)?;
        let tf = tape.conv1d(sig, w, p.arch.frontend)?;
        maps.push(tape.relu(tf));
    }
    tape.stack_depth(&maps)
}

/// Per-lead front-end: shared 1-D convolution plus ReLU on each lead,
/// stacked along depth. `[B, T, L] → [B, frames, filters, L]`.
pub fn frontend(batch: &Tensor, p: &ModelParams) -> Result<Tensor> {
    check_batch(p, batch)?;
    let mut tape = Tape::new();
    let input = tape.leaf(batch.clone());
    let w = tape.leaf(p.frontend_w.clone());
    let out = record_frontend(&mut tape, input, &[w], p)?;
    Ok(tape.value(out).clone())
}

/// Full network on a `[B, T, L]` batch. With `labels`, also records the
/// batch-mean cross-entropy so [`ForwardPass::gradients`] is available.
pub fn forward(p: &ModelParams, batch: &Tensor, mode: Mode, labels: Option<&[usize]>) -> Result<ForwardPass> {
    forward_impl(p, batch, mode, labels, false)
}

/// Same network, but each lead reads its own copy of the front-end weights
/// (all initialized from `p.frontend_w`). Summing the copies' gradients
/// reproduces the tied gradient.
pub fn forward_untied_reference(
    p: &ModelParams,
    batch: &Tensor,
    mode: Mode,
    labels: Option<&[usize]>,
) -> Result<ForwardPass> {
    forward_impl(p, batch, mode, labels, true)
}

fn forward_impl(
    p: &ModelParams,
    batch: &Tensor,
    mode: Mode,
    labels: Option<&[usize]>,
    untied: bool,
) -> Result<ForwardPass> {
    check_batch(p, batch)?;
    let mut tape = Tape::new();
    let input = tape.leaf(batch.clone());
    let params: Vec<Var> = p.trainables().into_iter().map(|t| tape.leaf(t.clone())).collect();

    // Indices into `params`, see ModelParams::trainables.
    let res_base = 2;
    let final_w = res_base + p.res_conv_w.len();
    let bn_base = final_w + 1;
    let dense_w = bn_base + 2 * p.bn.len();
    let bn_vars = |i: usize| BnVars {
        gamma: params[bn_base + 2 * i],
        beta: params[bn_base + 2 * i + 1],
        state: &p.bn[i],
    };

    let frontend_copies: Vec<Var> = if untied {
        (0..p.arch.leads).map(|_| tape.leaf(p.frontend_w.clone())).collect()
    } else {
        Vec::new()
    };
    let fe_weights = if untied { frontend_copies.clone() } else { vec![params[0]] };
    let frontend_out = record_frontend(&mut tape, input, &fe_weights, p)?;

    let dil = p.arch.dilations;
    let mut stages = Vec::new();
    let mut bn_states = Vec::with_capacity(p.bn.len());
    let mut x = tape.conv2d(frontend_out, params[1], conv_spec(&p.conv_in_w, dil.conv_in)?)?;
    stages.push(x);
    for blk in 0..RESIDUAL_BLOCKS {
        let (i1, i2) = (2 * blk, 2 * blk + 1);
        let (y, s1, s2) = record_block(
            &mut tape,
            x,
            (params[res_base + i1], dil.residual[i1]),
            (params[res_base + i2], dil.residual[i2]),
            bn_vars(i1),
            bn_vars(i2),
            mode,
        )?;
        bn_states.push(s1);
        bn_states.push(s2);
        x = y;
        stages.push(x);
    }
    let h = tape.conv2d(x, params[final_w], conv_spec(&p.final_conv_w, dil.final_conv)?)?;
    stages.push(h);
    let last = p.bn.len() - 1;
    let fb = bn_vars(last);
    let (h, s) = tape.batch_norm(h, fb.gamma, fb.beta, fb.state, mode)?;
    bn_states.push(s);
    stages.push(h);
    let pooled = tape.global_avg_pool(h)?;
    let logits = tape.dense(pooled, params[dense_w], params[dense_w + 1])?;
    let probs = ops::softmax_rows(tape.value(logits));
    let loss = labels.map(|l| tape.softmax_xent(logits, l)).transpose()?;

    Ok(ForwardPass {
        tape,
        params,
        frontend_copies,
        input,
        frontend_out,
        stages,
        logits,
        probs,
        loss,
        bn_states,
    })
}
