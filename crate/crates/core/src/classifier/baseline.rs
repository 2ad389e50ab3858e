//! Logistic regression over hashed n-grams, trained with mini-batch
//! gradient descent. Stands in for fine-tuned encoders when no external
//! runtime is available.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::{
    featurize, should_stop, Classifier, PredictionRecord, SparseVector, TextItem, TextSample, TrainReport,
    TrainingConfig, FEATURE_DIM,
};
use crate::corpus::write_atomic;
use crate::error::{Error, Result};

const MODEL_FORMAT: &str = "relex-baseline";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    weights: Vec<f64>,
    bias: f64,
    config: TrainingConfig,
    epochs_run: u32,
    best_val_loss: f64,
    train_losses: Vec<f64>,
    val_losses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    format: String,
    version: u32,
    config: TrainingConfig,
    bias: f64,
    epochs_run: u32,
    best_val_loss: f64,
    weights: Vec<(u32, f64)>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

impl BaselineModel {
    pub fn score(&self, x: &SparseVector) -> f64 {
        sigmoid(x.dot_dense(&self.weights) + self.bias)
    }

    pub fn score_text(&self, text: &str) -> f64 {
        self.score(&featurize(text))
    }

    pub fn predict(&self, items: &[TextItem]) -> Vec<PredictionRecord> {
        items
            .iter()
            .map(|it| PredictionRecord::from_score(&it.pair_id, self.score_text(&it.masked)))
            .collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn epochs_run(&self) -> u32 {
        self.epochs_run
    }

    pub fn best_val_loss(&self) -> f64 {
        self.best_val_loss
    }

    /// Mean training loss after each epoch.
    pub fn train_losses(&self) -> &[f64] {
        &self.train_losses
    }

    /// Mean validation loss after each epoch; the training loss when no
    /// validation set was given.
    pub fn val_losses(&self) -> &[f64] {
        &self.val_losses
    }

    pub fn report(&self) -> TrainReport {
        TrainReport {
            epochs_run: self.epochs_run,
            best_val_loss: self.best_val_loss,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let stored = StoredModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config,
            bias: self.bias,
            epochs_run: self.epochs_run,
            best_val_loss: self.best_val_loss,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect(),
        };
        write_atomic(path, &serde_json::to_vec(&stored).expect("model serializes"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let stored: StoredModel = serde_json::from_slice(&raw).map_err(|e| Error::format(path, 1, e))?;
        if stored.format != MODEL_FORMAT || stored.version != MODEL_VERSION {
            return Err(Error::Version {
                found: format!("{} v{}", stored.format, stored.version),
                expected: format!("{MODEL_FORMAT} v{MODEL_VERSION}"),
            });
        }
        let mut weights = vec![0.0; FEATURE_DIM];
        for (i, w) in stored.weights {
            let slot = weights
                .get_mut(i as usize)
                .ok_or_else(|| Error::format(path, 1, format!("weight index {i} out of range")))?;
            *slot = w;
        }
        Ok(BaselineModel {
            weights,
            bias: stored.bias,
            config: stored.config,
            epochs_run: stored.epochs_run,
            best_val_loss: stored.best_val_loss,
            train_losses: Vec::new(),
            val_losses: Vec::new(),
        })
    }
}

fn mean_loss(weights: &[f64], bias: f64, xs: &[SparseVector], ys: &[u8]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let total: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| log_loss(sigmoid(x.dot_dense(weights) + bias), y))
        .sum();
    total / xs.len() as f64
}

/// Train the baseline. Runs at most `max_epochs`, stopping early on the
/// validation loss, and returns the snapshot with the lowest validation
/// loss. Deterministic in (sample order, config).
pub fn train_baseline(train: &[TextSample], val: &[TextSample], config: &TrainingConfig) -> Result<BaselineModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if let Some(bad) = train.iter().chain(val).find(|s| s.label > 1) {
        return Err(Error::Training(format!(
            "label {} for {} is not 0 or 1",
            bad.label, bad.pair_id
        )));
    }
    let positives = train.iter().filter(|s| s.label == 1).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::Training(
            "training set contains a single class; check the training strategy and fold assembly".into(),
        ));
    }

    let xs: Vec<SparseVector> = train.iter().map(|s| featurize(&s.masked)).collect();
    let ys: Vec<u8> = train.iter().map(|s| s.label).collect();
    let val_xs: Vec<SparseVector> = val.iter().map(|s| featurize(&s.masked)).collect();
    let val_ys: Vec<u8> = val.iter().map(|s| s.label).collect();

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut weights = vec![0.0f64; FEATURE_DIM];
    let mut grad = vec![0.0f64; FEATURE_DIM];
    let mut touched: Vec<u32> = Vec::new();
    let mut bias = 0.0f64;
    let lr = config.learning_rate;

    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut train_losses = Vec::new();
    let mut val_losses = Vec::new();
    let mut epochs_run = 0;

    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let scale = lr / batch.len() as f64;
            let mut bias_grad = 0.0;
            for &i in batch {
                let g = sigmoid(xs[i].dot_dense(&weights) + bias) - f64::from(ys[i]);
                for &(j, v) in xs[i].entries() {
                    grad[j as usize] += g * v;
                    touched.push(j);
                }
                bias_grad += g;
            }
            for &j in &touched {
                weights[j as usize] -= scale * grad[j as usize];
                grad[j as usize] = 0.0;
            }
            touched.clear();
            bias -= scale * bias_grad;
        }
        epochs_run += 1;

        let train_loss = mean_loss(&weights, bias, &xs, &ys);
        let val_loss = if val.is_empty() {
            train_loss
        } else {
            mean_loss(&weights, bias, &val_xs, &val_ys)
        };
        train_losses.push(train_loss);
        val_losses.push(val_loss);
        if best.as_ref().is_none_or(|b| val_loss < b.2) {
            best = Some((weights.clone(), bias, val_loss));
        }
        if should_stop(&val_losses, config.early_stop_delta, config.patience_epochs as usize) {
            break;
        }
    }

    let (weights, bias, best_val_loss) = best.expect("at least one epoch runs");
    Ok(BaselineModel {
        weights,
        bias,
        config: *config,
        epochs_run,
        best_val_loss,
        train_losses,
        val_losses,
    })
}

/// In-process [`Classifier`] backed by [`BaselineModel`].
pub struct BaselineClassifier {
    name: String,
    model: Option<BaselineModel>,
}

impl BaselineClassifier {
    pub fn new(name: impl Into<String>) -> Self {
        BaselineClassifier {
            name: name.into(),
            model: None,
        }
    }

    pub fn with_model(name: impl Into<String>, model: BaselineModel) -> Self {
        BaselineClassifier {
            name: name.into(),
            model: Some(model),
        }
    }

    pub fn model(&self) -> Option<&BaselineModel> {
        self.model.as_ref()
    }
}

impl Classifier for BaselineClassifier {
    fn name(&self) -> &str {
        &self.name
    }

    fn default_config(&self) -> TrainingConfig {
        TrainingConfig::baseline()
    }

    fn train(&mut self, train: &[TextSample], val: &[TextSample], config: &TrainingConfig) -> Result<TrainReport> {
        let model = train_baseline(train, val, config)?;
        let report = model.report();
        self.model = Some(model);
        Ok(report)
    }

    fn predict(&mut self, items: &[TextItem]) -> Result<Vec<PredictionRecord>> {
        match &self.model {
            Some(m) => Ok(m.predict(items)),
            None if items.is_empty() => Ok(Vec::new()),
            None => Err(Error::Classifier {
                model: self.name.clone(),
                message: "predict called before train".into(),
            }),
        }
    }
}
