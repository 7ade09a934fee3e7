//! Run configuration: defaults, `key = value` files and flag overrides.

use std::path::{Path, PathBuf};

use mirnet_core::trainer::{AdamConfig, TrainConfig};
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub index: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub folds: usize,
    /// Split used by `train`.
    pub fold: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            index: None,
            dataset: None,
            weights: None,
            record: None,
            out_dir: PathBuf::from("runs"),
            seed: 0,
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr: train.adam.lr,
            folds: 5,
            fold: 0,
        }
    }
}

/// Values given on the command line; `None` leaves the file/default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub index: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub folds: Option<usize>,
    pub fold: Option<usize>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: invalid value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Applies `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {line}: expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "index" => self.index = Some(value.into()),
                "dataset" => self.dataset = Some(value.into()),
                "weights" => self.weights = Some(value.into()),
                "record" => self.record = Some(value.into()),
                "out_dir" => self.out_dir = value.into(),
                "seed" => self.seed = parse_value(key, value, line)?,
                "epochs" => self.epochs = parse_value(key, value, line)?,
                "batch_size" => self.batch_size = parse_value(key, value, line)?,
                "lr" => self.lr = parse_value(key, value, line)?,
                "folds" => self.folds = parse_value(key, value, line)?,
                "fold" => self.fold = parse_value(key, value, line)?,
                other => return Err(CliError::Config(format!("line {line}: unknown key `{other}`"))),
            }
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: Overrides) {
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { self.$f = Some(v); })* };
        }
        take!(index, dataset, weights, record);
        if let Some(v) = o.out_dir {
            self.out_dir = v;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { self.$f = v; })* };
        }
        set!(seed, epochs, batch_size, lr, folds, fold);
    }

    /// Defaults, then the file at `path` (if any), then `overrides`.
    pub fn resolve(path: Option<&Path>, overrides: Overrides) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(p.to_path_buf(), e))?;
            cfg.apply_text(&text)?;
        }
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.train_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.folds < 2 {
            return Err(CliError::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.fold >= self.folds {
            return Err(CliError::Config(format!("fold {} out of range for {} folds", self.fold, self.folds)));
        }
        Ok(())
    }

    /// Training settings; the shuffle seed is set per fold by the caller.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            adam: AdamConfig { lr: self.lr, ..AdamConfig::default() },
        }
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("no {what} given (flag or config file)")))
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_training_protocol() {
        let c = RunConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.lr, c.folds), (20, 32, 0.001, 5));
    }

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::default();
        c.apply_text("# run\nepochs = 3\nlr=0.01  # faster\n\ndataset = data/ptb.mids\n").unwrap();
        assert_eq!((c.epochs, c.lr), (3, 0.01));
        c.apply_overrides(Overrides { epochs: Some(7), ..Overrides::default() });
        assert_eq!((c.epochs, c.lr), (7, 0.01));
        assert_eq!(c.dataset, Some(PathBuf::from("data/ptb.mids")));
    }

    #[test]
    fn bad_lines_name_the_line() {
        let mut c = RunConfig::default();
        let err = c.apply_text("epochs = 2\nbatch = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(c.apply_text("epochs = many").is_err());
        assert!(c.apply_text("just words").is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let c = RunConfig { epochs: 0, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { fold: 5, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { lr: -1.0, ..RunConfig::default() };
        assert!(c.validate().is_err());
    }
}
