//! The dilated residual network: architecture, parameters and forward pass.
//!
//! ```text
//! [B,500,12] ─ per-lead conv1d (shared weights) + ReLU ─ stack ─ [B,9,20,12]
//!   ─ conv_in ─ 3 × residual block ─ final conv ─ BN ─ avg pool ─ dense + softmax
//! ```

mod forward;
pub(crate) mod io;
pub(crate) use io as io_support;
mod label;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops::{BatchNormState, Conv1dSpec};
use crate::seed;
use crate::tensor::Tensor;

pub use forward::{forward, forward_untied_reference, frontend, residual_block, ForwardPass, ResidualBranch};
pub use io::{decode_weights, encode_weights, load_weights, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use label::ClassLabel;

pub const RESIDUAL_BLOCKS: usize = 3;
pub const RESIDUAL_CONVS: usize = 2 * RESIDUAL_BLOCKS;
/// Two per residual block plus the one after the final conv.
pub const BATCH_NORMS: usize = RESIDUAL_CONVS + 1;

/// Dilation of each 2-D convolution, shallowest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DilationSchedule {
    pub conv_in: (usize, usize),
    pub residual: [(usize, usize); RESIDUAL_CONVS],
    pub final_conv: (usize, usize),
}

impl Default for DilationSchedule {
    fn default() -> Self {
        Self {
            conv_in: (1, 1),
            residual: [(1, 1), (1, 1), (2, 2), (2, 2), (4, 4), (8, 8)],
            final_conv: (16, 16),
        }
    }
}

/// Network dimensions. [`Architecture::default`] is the 12-lead, 500-sample
/// model; smaller instances exist for gradient checking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub segment_len: usize,
    pub leads: usize,
    pub frontend: Conv1dSpec,
    /// Filters in every 2-D convolution.
    pub channels: usize,
    pub classes: usize,
    pub dilations: DilationSchedule,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            segment_len: 500,
            leads: 12,
            frontend: Conv1dSpec::default(),
            channels: 7,
            classes: ClassLabel::COUNT,
            dilations: DilationSchedule::default(),
        }
    }
}

impl Architecture {
    /// Spatial extent `(frames, filters)` of the 2-D feature maps.
    pub fn feature_map(&self) -> Result<(usize, usize)> {
        Ok((
            crate::ops::conv1d_frames(self.segment_len, &self.frontend)?,
            self.frontend.num_filters,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_map()?;
        if self.leads == 0 || self.channels == 0 || self.classes < 2 {
            return Err(Error::Config(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }
}

/// Every array of the network. The front-end weights are stored once and
/// shared by all leads.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    /// `[filters, kernel]`
    pub frontend_w: Tensor,
    /// `[channels, 3, 3, leads]`
    pub conv_in_w: Tensor,
    /// Two per block, `[channels, 3, 3, channels]` each.
    pub res_conv_w: Vec<Tensor>,
    pub final_conv_w: Tensor,
    /// Block batch norms in order, then the one after the final conv.
    pub bn: Vec<BatchNormState>,
    /// `[classes, channels]`
    pub dense_w: Tensor,
    pub dense_b: Tensor,
}

fn glorot(rng: &mut impl Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
    Tensor::from_fn(shape, |_| dist.sample(rng))
}

/// Glorot-uniform weights (`±√(6 / (fan_in + fan_out))`, convolution fans
/// scaled by the receptive field), unit gamma, zero beta and bias, running
/// moments 0 / 1. Deterministic in `seed`.
pub fn init_model(arch: Architecture, seed: u64) -> Result<ModelParams> {
    arch.validate()?;
    let mut rng = seed::rng(seed);
    let fe = arch.frontend;
    let c = arch.channels;
    let frontend_w = glorot(&mut rng, &[fe.num_filters, fe.kernel_size], fe.kernel_size, fe.kernel_size * fe.num_filters);
    let conv_in_w = glorot(&mut rng, &[c, 3, 3, arch.leads], 9 * arch.leads, 9 * c);
    let res_conv_w = (0..RESIDUAL_CONVS)
        .map(|_| glorot(&mut rng, &[c, 3, 3, c], 9 * c, 9 * c))
        .collect();
    let final_conv_w = glorot(&mut rng, &[c, 3, 3, c], 9 * c, 9 * c);
    let dense_w = glorot(&mut rng, &[arch.classes, c], c, arch.classes);
    Ok(ModelParams {
        arch,
        frontend_w,
        conv_in_w,
        res_conv_w,
        final_conv_w,
        bn: (0..BATCH_NORMS).map(|_| BatchNormState::new(c)).collect(),
        dense_w,
        dense_b: Tensor::zeros(&[arch.classes]),
    })
}

/// Canonical name of batch norm `i`.
pub(crate) fn bn_name(i: usize) -> String {
    if i < RESIDUAL_CONVS {
        format!("block{}.bn{}", i / 2 + 1, i % 2 + 1)
    } else {
        "final.bn".to_string()
    }
}

fn res_conv_name(i: usize) -> String {
    format!("block{}.conv{}.w", i / 2 + 1, i % 2 + 1)
}

impl ModelParams {
    /// Trainable arrays in canonical order: front-end, conv_in, residual
    /// convs, final conv, (gamma, beta) per batch norm, dense weight, bias.
    pub fn trainables(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.frontend_w, &self.conv_in_w];
        out.extend(self.res_conv_w.iter());
        out.push(&self.final_conv_w);
        for bn in &self.bn {
            out.push(&bn.gamma);
            out.push(&bn.beta);
        }
        out.push(&self.dense_w);
        out.push(&self.dense_b);
        out
    }

    pub fn trainables_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.frontend_w, &mut self.conv_in_w];
        out.extend(self.res_conv_w.iter_mut());
        out.push(&mut self.final_conv_w);
        for bn in &mut self.bn {
            out.push(&mut bn.gamma);
            out.push(&mut bn.beta);
        }
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out
    }

    pub fn trainable_names() -> Vec<String> {
        let mut out = vec!["frontend.w".to_string(), "conv_in.w".to_string()];
        out.extend((0..RESIDUAL_CONVS).map(res_conv_name));
        out.push("final.conv.w".into());
        for i in 0..BATCH_NORMS {
            out.push(format!("{}.gamma", bn_name(i)));
            out.push(format!("{}.beta", bn_name(i)));
        }
        out.push("dense.w".into());
        out.push("dense.b".into());
        out
    }

    /// Every stored array, trainable or not, in weight-file order.
    pub fn named_arrays(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("frontend.w".to_string(), &self.frontend_w),
            ("conv_in.w".to_string(), &self.conv_in_w),
        ];
        out.extend(self.res_conv_w.iter().enumerate().map(|(i, w)| (res_conv_name(i), w)));
        out.push(("final.conv.w".into(), &self.final_conv_w));
        for (i, bn) in self.bn.iter().enumerate() {
            let n = bn_name(i);
            out.push((format!("{n}.gamma"), &bn.gamma));
            out.push((format!("{n}.beta"), &bn.beta));
            out.push((format!("{n}.running_mean"), &bn.running_mean));
            out.push((format!("{n}.running_var"), &bn.running_var));
        }
        out.push(("dense.w".into(), &self.dense_w));
        out.push(("dense.b".into(), &self.dense_b));
        out
    }

    pub(crate) fn named_arrays_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.frontend_w, &mut self.conv_in_w];
        out.extend(self.res_conv_w.iter_mut());
        out.push(&mut self.final_conv_w);
        for bn in &mut self.bn {
            out.push(&mut bn.gamma);
            out.push(&mut bn.beta);
            out.push(&mut bn.running_mean);
            out.push(&mut bn.running_var);
        }
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out
    }

    /// Replaces the running moments with those produced by a train-mode pass.
    pub fn set_bn_states(&mut self, states: Vec<BatchNormState>) -> Result<()> {
        if states.len() != self.bn.len() {
            return Err(Error::Contract(format!(
                "{} batch-norm states for {} layers",
                states.len(),
                self.bn.len()
            )));
        }
        for (dst, src) in self.bn.iter_mut().zip(states) {
            dst.running_mean = src.running_mean;
            dst.running_var = src.running_var;
        }
        Ok(())
    }
}

/// Number of trainable scalars: the shared front-end once, convolution
/// weights, gamma and beta of each batch norm, dense weights and bias.
/// Running moments and the (absent) convolution biases are not counted.
pub fn count_parameters(p: &ModelParams) -> usize {
    p.trainables().iter().map(|t| t.len()).sum()
}
