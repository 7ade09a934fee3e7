//! Reverse-mode gradient tape over the layer kernels in [`crate::ops`].
//!
//! Every recorded operation appends one node holding its output value and
//! whatever it needs for the backward pass. [`Tape::backward`] walks the
//! nodes once, last to first, accumulating gradients into each input.

use crate::error::{Error, Result};
use crate::ops::{self, BatchNormCache, BatchNormState, Conv1dSpec, Conv2dSpec, Mode};
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    /// `[B, T, L] → [B, T]`
    SelectLead { input: Var, lead: usize },
    Conv1d { input: Var, weight: Var, spec: Conv1dSpec },
    /// `L × [B, H, W] → [B, H, W, L]`
    StackDepth { inputs: Vec<Var> },
    Conv2d { input: Var, weight: Var, spec: Conv2dSpec },
    Relu { input: Var },
    BatchNorm { input: Var, gamma: Var, beta: Var, cache: BatchNormCache },
    Add { lhs: Var, rhs: Var },
    GlobalAvgPool { input: Var },
    Dense { input: Var, weight: Var, bias: Var },
    SoftmaxXent { logits: Var, labels: Vec<usize>, probs: Tensor },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Recorded forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Result of a backward pass: one optional gradient per recorded node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    visited: Vec<usize>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `var`, or `None` if the loss does not
    /// depend on it.
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads[var.0].as_ref()
    }

    /// Like [`Gradients::get`] but yields zeros shaped like `like` when absent.
    pub fn get_or_zeros(&self, var: Var, like: &Tensor) -> Tensor {
        self.get(var).cloned().unwrap_or_else(|| Tensor::zeros(like.shape()))
    }

    /// Node indices in the order the backward pass visited them.
    pub fn visit_order(&self) -> &[usize] {
        &self.visited
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn select_lead(&mut self, input: Var, lead: usize) -> Result<Var> {
        let x = self.value(input);
        let [b, t, l] = *x.shape() else {
            return Err(Error::shape(format!("select_lead expects [B,T,L], got {:?}", x.shape())));
        };
        if lead >= l {
            return Err(Error::shape(format!("lead {lead} out of range for {l} leads")));
        }
        let data = x.data().iter().skip(lead).step_by(l).copied().collect();
        let out = Tensor::new(&[b, t], data)?;
        Ok(self.push(out, Op::SelectLead { input, lead }))
    }

    pub fn conv1d(&mut self, input: Var, weight: Var, spec: Conv1dSpec) -> Result<Var> {
        let out = ops::conv1d_forward(self.value(input), self.value(weight), &spec)?;
        Ok(self.push(out, Op::Conv1d { input, weight, spec }))
    }

    pub fn stack_depth(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::shape("stack_depth needs at least one input"))?;
        let shape = self.value(*first).shape().to_vec();
        for v in inputs {
            self.value(*v).expect_shape(&shape)?;
        }
        let depth = inputs.len();
        let plane = self.value(*first).len();
        let mut data = vec![0.0; plane * depth];
        for (d, v) in inputs.iter().enumerate() {
            for (i, x) in self.value(*v).data().iter().enumerate() {
                data[i * depth + d] = *x;
            }
        }
        let mut out_shape = shape;
        out_shape.push(depth);
        let out = Tensor::new(&out_shape, data)?;
        Ok(self.push(out, Op::StackDepth { inputs: inputs.to_vec() }))
    }

    pub fn conv2d(&mut self, input: Var, weight: Var, spec: Conv2dSpec) -> Result<Var> {
        let out = ops::conv2d_dilated_forward(self.value(input), self.value(weight), &spec)?;
        Ok(self.push(out, Op::Conv2d { input, weight, spec }))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = ops::relu(self.value(input));
        self.push(out, Op::Relu { input })
    }

    /// Batch normalization whose scale and shift are the tape values
    /// `gamma`/`beta`; running moments and constants come from `state`.
    /// Returns the output and the successor state (see
    /// [`ops::batchnorm_forward`]).
    pub fn batch_norm(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        state: &BatchNormState,
        mode: Mode,
    ) -> Result<(Var, BatchNormState)> {
        let mut st = state.clone();
        st.gamma = self.value(gamma).clone();
        st.beta = self.value(beta).clone();
        let (out, cache, next) = ops::batchnorm_forward(self.value(input), &st, mode)?;
        let var = self.push(out, Op::BatchNorm { input, gamma, beta, cache });
        Ok((var, next))
    }

    pub fn add(&mut self, lhs: Var, rhs: Var) -> Result<Var> {
        let out = self.value(lhs).zip_map(self.value(rhs), |a, b| a + b)?;
        Ok(self.push(out, Op::Add { lhs, rhs }))
    }

    pub fn global_avg_pool(&mut self, input: Var) -> Result<Var> {
        let out = ops::global_avg_pool(self.value(input))?;
        Ok(self.push(out, Op::GlobalAvgPool { input }))
    }

    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let out = ops::dense_forward(self.value(input), self.value(weight), self.value(bias))?;
        Ok(self.push(out, Op::Dense { input, weight, bias }))
    }

    /// Batch-mean cross-entropy of `softmax(logits)` against `labels`;
    /// the node's value is the scalar loss.
    pub fn softmax_xent(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let z = self.value(logits);
        let k = *z.shape().last().expect("rank >= 1");
        if z.len() / k != labels.len() {
            return Err(Error::shape(format!(
                "{} labels for logits of shape {:?}",
                labels.len(),
                z.shape()
            )));
        }
        let probs = ops::softmax_rows(z);
        let mut loss = 0.0;
        for (row, &label) in probs.data().chunks_exact(k).zip(labels) {
            if label >= k {
                return Err(Error::Contract(format!("label {label} out of range for {k} classes")));
            }
            loss -= row[label].ln();
        }
        loss /= labels.len() as f64;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxXent {
                logits,
                labels: labels.to_vec(),
                probs,
            },
        ))
    }

    /// Softmax probabilities saved by a [`Tape::softmax_xent`] node.
    pub fn probs(&self, loss: Var) -> Option<&Tensor> {
        match &self.nodes[loss.0].op {
            Op::SoftmaxXent { probs, .. } => Some(probs),
            _ => None,
        }
    }

    /// Smallest `|x|` over all ReLU inputs; finite-difference checks are
    /// only meaningful when this exceeds the probe step.
    pub fn min_relu_margin(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu { input } => Some(self.value(input)),
                _ => None,
            })
            .flat_map(|t| t.data().iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Backpropagates from the scalar node `loss` with seed gradient 1.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        self.backward_with(loss, Tensor::scalar(1.0))
    }

    /// Backpropagates an arbitrary upstream gradient from `output`.
    pub fn backward_with(&self, output: Var, seed: Tensor) -> Result<Gradients> {
        if seed.shape() != self.value(output).shape() {
            return Err(Error::Contract(format!(
                "seed gradient {:?} vs output {:?}",
                seed.shape(),
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(seed);
        let mut visited = Vec::with_capacity(output.0 + 1);

        for idx in (0..=output.0).rev() {
            visited.push(idx);
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let contributions: Vec<(Var, Tensor)> = match &node.op {
                Op::Leaf => Vec::new(),
                Op::SelectLead { input, lead } => {
                    let x = self.value(*input);
                    let l = x.shape()[2];
                    let mut dx = vec![0.0; x.len()];
                    for (i, v) in g.data().iter().enumerate() {
                        dx[i * l + lead] = *v;
                    }
                    vec![(*input, Tensor::new(x.shape(), dx)?)]
                }
                Op::Conv1d { input, weight, spec } => {
                    let (dx, dw) =
                        ops::conv1d_backward(self.value(*input), self.value(*weight), spec, &g)?;
                    vec![(*input, dx), (*weight, dw)]
                }
                Op::StackDepth { inputs } => {
                    let depth = inputs.len();
                    inputs
                        .iter()
                        .enumerate()
                        .map(|(d, v)| {
                            let data = g.data().iter().skip(d).step_by(depth).copied().collect();
                            Ok((*v, Tensor::new(self.value(*v).shape(), data)?))
                        })
                        .collect::<Result<_>>()?
                }
                Op::Conv2d { input, weight, spec } => {
                    let (dx, dw) = ops::conv2d_dilated_backward(
                        self.value(*input),
                        self.value(*weight),
                        spec,
                        &g,
                    )?;
                    vec![(*input, dx), (*weight, dw)]
                }
                Op::Relu { input } => vec![(*input, ops::relu_backward(self.value(*input), &g)?)],
                Op::BatchNorm {
                    input,
                    gamma,
                    beta,
                    cache,
                } => {
                    let (dx, dg, db) = ops::batchnorm_backward(cache, self.value(*gamma), &g)?;
                    vec![(*input, dx), (*gamma, dg), (*beta, db)]
                }
                Op::Add { lhs, rhs } => vec![(*lhs, g.clone()), (*rhs, g.clone())],
                Op::GlobalAvgPool { input } => vec![(
                    *input,
                    ops::global_avg_pool_backward(self.value(*input).shape(), &g)?,
                )],
                Op::Dense { input, weight, bias } => {
                    let (dx, dw, db) = ops::dense_backward(self.value(*input), self.value(*weight), &g)?;
                    vec![(*input, dx), (*weight, dw), (*bias, db)]
                }
                Op::SoftmaxXent { logits, labels, probs } => {
                    let dz = ops::softmax_xent_backward(probs, labels, g.data()[0])?;
                    vec![(*logits, dz.reshape(self.value(*logits).shape())?)]
                }
            };
            for (var, contribution) in contributions {
                debug_assert!(var.0 < idx, "tape inputs precede outputs");
                match &mut grads[var.0] {
                    Some(acc) => acc.add_assign(&contribution)?,
                    slot @ None => *slot = Some(contribution),
                }
            }
            grads[idx] = Some(g);
        }

        Ok(Gradients { grads, visited })
    }
}
