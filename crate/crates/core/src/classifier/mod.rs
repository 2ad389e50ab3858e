//! Binary relation classifiers.
//!
//! Every classifier, native or external, sits behind the [`Classifier`]
//! trait. External ones speak the JSON Lines wire protocol in [`protocol`]
//! over a child process's stdio or over HTTP.

mod baseline;
mod early_stop;
mod features;
pub mod protocol;
mod remote;
mod stub;

pub use baseline::{train_baseline, BaselineClassifier, BaselineModel};
pub use early_stop::should_stop;
pub use features::{featurize, words, SparseVector, FEATURE_BITS, FEATURE_DIM};
pub use remote::{HttpChannel, RemoteClassifier, StdioChannel};
pub use stub::{ConstantClassifier, KeywordClassifier, TableClassifier};

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores at or above this are label 1.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub max_epochs: u32,
    pub learning_rate: f64,
    pub early_stop_delta: f64,
    pub patience_epochs: u32,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainingConfig {
    /// Defaults for the native baseline.
    pub fn baseline() -> Self {
        TrainingConfig {
            max_epochs: 10,
            learning_rate: 0.1,
            early_stop_delta: 5e-3,
            patience_epochs: 2,
            batch_size: 8,
            seed: 0,
        }
    }

    /// Fine-tuning defaults handed to external transformer adapters
    /// (AdamW at 4e-5).
    pub fn adapter() -> Self {
        TrainingConfig {
            learning_rate: 4e-5,
            ..Self::baseline()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(format!("training config: {m}")));
        if self.max_epochs < 1 {
            return bad("max_epochs must be >= 1");
        }
        if self.patience_epochs < 1 {
            return bad("patience_epochs must be >= 1");
        }
        if self.early_stop_delta.is_nan() || self.early_stop_delta <= 0.0 {
            return bad("early_stop_delta must be > 0");
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be a positive number");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        Ok(())
    }
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Per-field replacements for a classifier's default [`TrainingConfig`],
/// as read from config files. The seed is set separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingOverrides {
    pub max_epochs: Option<u32>,
    pub learning_rate: Option<f64>,
    pub early_stop_delta: Option<f64>,
    pub patience_epochs: Option<u32>,
    pub batch_size: Option<usize>,
}

impl TrainingOverrides {
    pub fn apply(&self, base: TrainingConfig) -> TrainingConfig {
        TrainingConfig {
            max_epochs: self.max_epochs.unwrap_or(base.max_epochs),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            early_stop_delta: self.early_stop_delta.unwrap_or(base.early_stop_delta),
            patience_epochs: self.patience_epochs.unwrap_or(base.patience_epochs),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            seed: base.seed,
        }
    }
}

/// A labeled training example: masked text (or a plain sentence for
/// relevance filtering) and its 0/1 label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSample {
    pub pair_id: String,
    pub masked: String,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextItem {
    pub pair_id: String,
    pub masked: String,
}

impl From<&TextSample> for TextItem {
    fn from(s: &TextSample) -> Self {
        TextItem {
            pair_id: s.pair_id.clone(),
            masked: s.masked.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_id: String,
    pub label: u8,
    pub score: f64,
}

impl PredictionRecord {
    /// Label derived from the score with [`DECISION_THRESHOLD`].
    pub fn from_score(pair_id: impl Into<String>, score: f64) -> Self {
        PredictionRecord {
            pair_id: pair_id.into(),
            label: u8::from(score >= DECISION_THRESHOLD),
            score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: u32,
    pub best_val_loss: f64,
}

pub trait Classifier: Send {
    fn name(&self) -> &str;

    /// Config used when the caller has no explicit one.
    fn default_config(&self) -> TrainingConfig {
        TrainingConfig::adapter()
    }

    fn train(&mut self, train: &[TextSample], val: &[TextSample], config: &TrainingConfig) -> Result<TrainReport>;

    /// One record per item, in input order.
    fn predict(&mut self, items: &[TextItem]) -> Result<Vec<PredictionRecord>>;
}

/// How to obtain a classifier, as written in config files:
///
/// - `baseline`
/// - `stub:constant:<score>`
/// - `stub:keyword:<word>|<word>...`
/// - `stub:table:<path to JSONL of {pair_id, score}>`
/// - `subprocess:<program> [args...]`
/// - `http://...` or `https://...`
#[derive(Debug, Clone, PartialEq)]
pub enum HandleSpec {
    Baseline,
    Constant(f64),
    Keyword(Vec<String>),
    Table(PathBuf),
    Subprocess { program: String, args: Vec<String> },
    Http(String),
}

impl HandleSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = || Error::Config(format!("unrecognized classifier handle {spec:?}"));
        if spec == "baseline" {
            return Ok(HandleSpec::Baseline);
        }
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Ok(HandleSpec::Http(spec.to_string()));
        }
        if let Some(rest) = spec.strip_prefix("subprocess:") {
            let mut parts = rest.split_whitespace().map(str::to_string);
            let program = parts.next().ok_or_else(bad)?;
            return Ok(HandleSpec::Subprocess {
                program,
                args: parts.collect(),
            });
        }
        if let Some(rest) = spec.strip_prefix("stub:") {
            let (kind, arg) = rest.split_once(':').ok_or_else(bad)?;
            return match kind {
                "constant" => {
                    let score: f64 = arg.parse().map_err(|_| bad())?;
                    if !(0.0..=1.0).contains(&score) {
                        return Err(Error::Config(format!("stub score {score} outside [0,1]")));
                    }
                    Ok(HandleSpec::Constant(score))
                }
                "keyword" => {
                    let words: Vec<String> = arg
                        .split('|')
                        .map(|w| w.trim().to_string())
                        .filter(|w| !w.is_empty())
                        .collect();
                    if words.is_empty() {
                        return Err(bad());
                    }
                    Ok(HandleSpec::Keyword(words))
                }
                "table" => Ok(HandleSpec::Table(PathBuf::from(arg))),
                _ => Err(bad()),
            };
        }
        Err(bad())
    }

    /// Resolve relative paths in the spec against `base`.
    pub fn resolve(self, base: &Path) -> Self {
        match self {
            HandleSpec::Table(p) if p.is_relative() => HandleSpec::Table(base.join(p)),
            other => other,
        }
    }
}

/// Instantiate a classifier. `work_dir` holds files exchanged with external
/// processes.
pub fn open_classifier(
    name: &str,
    spec: &HandleSpec,
    work_dir: &Path,
    timeout: Duration,
) -> Result<Box<dyn Classifier>> {
    Ok(match spec {
        HandleSpec::Baseline => Box::new(BaselineClassifier::new(name)),
        HandleSpec::Constant(score) => Box::new(ConstantClassifier::new(name, *score)),
        HandleSpec::Keyword(words) => Box::new(KeywordClassifier::new(name, words.clone())),
        HandleSpec::Table(path) => Box::new(TableClassifier::from_file(name, path)?),
        HandleSpec::Subprocess { program, args } => {
            let channel = StdioChannel::spawn(program, args, timeout)?;
            Box::new(RemoteClassifier::new(name, channel, work_dir.join(name)))
        }
        HandleSpec::Http(url) => {
            let channel = HttpChannel::new(url, timeout);
            Box::new(RemoteClassifier::new(name, channel, work_dir.join(name)))
        }
    })
}
