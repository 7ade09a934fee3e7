//! Minibatch cross-entropy training with Adam.

mod adam;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::ingest::LabeledSegment;
use crate::model::{forward, ModelParams};
use crate::ops::Mode;
use crate::seed::{self, Purpose};
use crate::tensor::Tensor;

pub use adam::{adam_step, AdamConfig, AdamState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(format!(
                "epochs and batch size must be >= 1 (got {} and {})",
                self.epochs, self.batch_size
            )));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.adam.lr)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Percentage; `None` when no validation data was given.
    pub val_accuracy: Option<f64>,
}

pub type History = Vec<EpochRecord>;

/// Stacks segment windows into a `[B, T, L]` batch.
pub fn stack_windows<'a>(segments: impl IntoIterator<Item = &'a LabeledSegment>) -> Result<(Tensor, Vec<usize>)> {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut shape: Option<Vec<usize>> = None;
    for s in segments {
        match &shape {
            None => shape = Some(s.window.shape().to_vec()),
            Some(sh) => s.window.expect_shape(sh)?,
        }
        data.extend_from_slice(s.window.data());
        labels.push(s.label.index());
    }
    let sh = shape.ok_or_else(|| Error::EmptyData("no segments to batch".into()))?;
    let mut full = vec![labels.len()];
    full.extend(sh);
    Ok((Tensor::new(&full, data)?, labels))
}

/// One optimizer step on a batch; returns the batch-mean loss.
pub fn train_step(params: &mut ModelParams, opt: &mut AdamState, batch: &Tensor, labels: &[usize]) -> Result<f64> {
    let pass = forward(params, batch, Mode::Train, Some(labels))?;
    let grads = pass.gradients()?;
    let loss = pass.loss_value().expect("labels were given");
    opt.step(&mut params.trainables_mut(), &grads)?;
    params.set_bn_states(pass.bn_states)?;
    Ok(loss)
}

/// Shuffles deterministically by `(cfg.seed, epoch)` and runs one pass of
/// minibatches (the last one may be partial). Returns the mean batch loss.
pub fn train_epoch(
    params: &mut ModelParams,
    opt: &mut AdamState,
    segments: &[LabeledSegment],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<f64> {
    cfg.validate()?;
    if segments.is_empty() {
        return Err(Error::EmptyData("training set is empty".into()));
    }
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive(cfg.seed, Purpose::Shuffle, epoch as u64)));

    let mut total = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(cfg.batch_size) {
        let (batch, labels) = stack_windows(chunk.iter().map(|&i| &segments[i]))?;
        total += train_step(params, opt, &batch, &labels)?;
        batches += 1;
    }
    Ok(total / batches as f64)
}

/// Trains for exactly `cfg.epochs` epochs and returns the last-epoch model.
/// Validation accuracy (batch norm in infer mode) is recorded per epoch but
/// does not steer training.
pub fn fit(
    mut params: ModelParams,
    train: &[LabeledSegment],
    val: &[LabeledSegment],
    cfg: &TrainConfig,
) -> Result<(ModelParams, History)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyData("training set is empty".into()));
    }
    let mut opt = AdamState::new(cfg.adam, params.trainables());
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let train_loss = train_epoch(&mut params, &mut opt, train, cfg, epoch)?;
        let val_accuracy = if val.is_empty() {
            None
        } else {
            Some(evaluate(&params, val)?.accuracy)
        };
        log::debug!("epoch {epoch}: loss {train_loss:.5} val {val_accuracy:?}");
        history.push(EpochRecord {
            epoch: epoch + 1,
            train_loss,
            val_accuracy,
        });
    }
    Ok((params, history))
}
