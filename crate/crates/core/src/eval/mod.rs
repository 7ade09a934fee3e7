//! Accuracy, confusion matrices and the cross-validation runner.

mod metrics;
mod synth;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::ingest::{make_splits, subjects_of, LabeledSegment};
use crate::model::{forward, init_model, Architecture, ClassLabel, ModelParams};
use crate::ops::Mode;
use crate::seed::{self, Purpose};
use crate::trainer::{fit, stack_windows, History, TrainConfig};

pub use metrics::{argmax, confidence_interval, ConfusionMatrix};
pub use synth::{lead_amplitude, synth_dataset, synth_dataset_with_noise, synth_template, SYNTH_NOISE_MV};

/// Segments per inference batch.
const PREDICT_CHUNK: usize = 64;

/// Class probabilities for each segment, batch norm in infer mode.
pub fn predict(p: &ModelParams, segments: &[LabeledSegment]) -> Result<Vec<Vec<f64>>> {
    let k = p.arch.classes;
    let chunks: Vec<&[LabeledSegment]> = segments.chunks(PREDICT_CHUNK).collect();
    let per_chunk = chunks
        .par_iter()
        .map(|chunk| {
            let (batch, _) = stack_windows(chunk.iter())?;
            let pass = forward(p, &batch, Mode::Infer, None)?;
            Ok(pass.probs.data().chunks(k).map(<[f64]>::to_vec).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_chunk.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Percentage of correctly classified segments.
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Segment-level accuracy and confusion matrix; predictions are the argmax
/// of the infer-mode probabilities.
pub fn evaluate(p: &ModelParams, segments: &[LabeledSegment]) -> Result<Evaluation> {
    if segments.is_empty() {
        return Err(Error::EmptyData("nothing to evaluate".into()));
    }
    let probs = predict(p, segments)?;
    let confusion = ConfusionMatrix::from_pairs(segments.iter().zip(&probs).map(|(s, pr)| {
        (s.label, ClassLabel::from_index(argmax(pr)).expect("7 classes"))
    }));
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        confusion,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub train: TrainConfig,
    pub arch: Architecture,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            train: TrainConfig::default(),
            arch: Architecture::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub train_segments: usize,
    pub val_segments: usize,
    pub test_segments: usize,
    /// Initialization seed of this fold's model.
    pub seed: u64,
    pub history: History,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// `None` with fewer than two folds.
    pub ci95_half_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub summary: CvSummary,
}

impl CvReport {
    /// Summary document: per-fold results, mean accuracy, CI half-width,
    /// master seed and the supplied configuration echo.
    pub fn summary_json(&self, config: serde_json::Value) -> serde_json::Value {
        let folds: Vec<_> = self
            .folds
            .iter()
            .map(|f| {
                json!({
                    "fold": f.fold,
                    "accuracy": f.accuracy,
                    "train_segments": f.train_segments,
                    "val_segments": f.val_segments,
                    "test_segments": f.test_segments,
                    "seed": f.seed,
                    "confusion": f.confusion.counts,
                })
            })
            .collect();
        json!({
            "folds": folds,
            "mean_accuracy": self.summary.mean_accuracy,
            "ci95_half_width": self.summary.ci95_half_width,
            "seed": self.seed,
            "config": config,
        })
    }
}

fn run_fold(dataset: &[LabeledSegment], plan: &crate::ingest::SplitPlan, cfg: &CvConfig, seed: u64) -> Result<FoldReport> {
    let fold = plan.fold;
    let (train, val, test) = plan.partition(dataset);
    let train_subjects: std::collections::BTreeSet<&str> = train.iter().map(|s| s.subject_id.as_str()).collect();
    if let Some(s) = test.iter().find(|s| train_subjects.contains(s.subject_id.as_str())) {
        return Err(Error::Contract(format!("subject {} leaks into fold {fold} test set", s.subject_id)));
    }
    if test.is_empty() {
        return Err(Error::EmptyData(format!("fold {fold} has no test segments")));
    }
    let init_seed = seed::derive(seed, Purpose::Init, fold as u64);
    let mut train_cfg = cfg.train;
    train_cfg.seed = seed::derive(seed, Purpose::Shuffle, fold as u64);
    let model = init_model(cfg.arch, init_seed)?;
    let (model, history) = fit(model, &train, &val, &train_cfg)?;
    let eval = evaluate(&model, &test)?;
    log::info!("fold {}: accuracy {:.2}%", fold + 1, eval.accuracy);
    Ok(FoldReport {
        fold,
        accuracy: eval.accuracy,
        confusion: eval.confusion,
        train_segments: train.len(),
        val_segments: val.len(),
        test_segments: test.len(),
        seed: init_seed,
        history,
    })
}

/// Trains and tests one model per fold on subject-disjoint splits. Folds run
/// in parallel; reports are returned in fold order.
pub fn run_cross_validation(dataset: &[LabeledSegment], cfg: &CvConfig, seed: u64) -> Result<CvReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyData("dataset is empty".into()));
    }
    cfg.train.validate()?;
    let plans = make_splits(&subjects_of(dataset), cfg.folds, seed)?;
    let folds = plans
        .par_iter()
        .map(|plan| run_fold(dataset, plan, cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let fold_accuracies: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let (mean_accuracy, ci95_half_width) = match confidence_interval(&fold_accuracies) {
        Ok((m, h)) => (m, Some(h)),
        Err(_) => (fold_accuracies[0], None),
    };
    Ok(CvReport {
        seed,
        folds,
        summary: CvSummary {
            fold_accuracies,
            mean_accuracy,
            ci95_half_width,
        },
    })
}
