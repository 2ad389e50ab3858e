use std::path::Path;

use super::{assemble_training_set, compute_metrics, select, stratified_kfold, FoldSplit, Metrics, Strategy};
use crate::classifier::{Classifier, TextItem, TextSample, TrainingOverrides};
use crate::error::{Error, Result};
use crate::pairs::LabeledSample;

pub const REPORT_HEADER: [&str; 12] = [
    "model",
    "strategy",
    "fold",
    "precision_0",
    "recall_0",
    "f1_0",
    "precision_1",
    "recall_1",
    "f1_1",
    "macro_f1",
    "support_0",
    "support_1",
];

const SUMMARY_HEADER: [&str; 10] = [
    "model",
    "strategy",
    "folds",
    "mean_precision_0",
    "mean_recall_0",
    "mean_f1_0",
    "mean_precision_1",
    "mean_recall_1",
    "mean_f1_1",
    "mean_macro_f1",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub model: String,
    pub strategy: Strategy,
    pub fold: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub model: String,
    pub strategy: Strategy,
    pub reason: String,
}

pub struct ExperimentPlan<'a> {
    pub golden: &'a [LabeledSample],
    pub silver: &'a [LabeledSample],
    /// Model names handed to the classifier factory.
    pub models: Vec<String>,
    pub strategies: Vec<Strategy>,
    pub k: usize,
    pub seed: u64,
    /// Applied to each classifier's default config; the seed is always
    /// `seed`.
    pub training: TrainingOverrides,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub folds: Vec<FoldSplit>,
    /// Sorted by (model, strategy, fold).
    pub rows: Vec<MetricsReport>,
    pub failures: Vec<CellFailure>,
}

fn run_cell(
    plan: &ExperimentPlan,
    folds: &[FoldSplit],
    model: &str,
    strategy: Strategy,
    factory: &mut dyn FnMut(&str) -> Result<Box<dyn Classifier>>,
) -> Result<Vec<MetricsReport>> {
    let mut rows = Vec::with_capacity(folds.len());
    for fold in folds {
        let train: Vec<TextSample> = assemble_training_set(
            strategy,
            fold,
            plan.golden,
            plan.silver,
            plan.seed.wrapping_add(fold.fold_id as u64),
        )?
        .iter()
        .map(LabeledSample::text_sample)
        .collect();
        let val: Vec<TextSample> = select(plan.golden, &fold.val_ids)
            .into_iter()
            .map(LabeledSample::text_sample)
            .collect();
        let test = select(plan.golden, &fold.test_ids);
        let items: Vec<TextItem> = test
            .iter()
            .map(|s| TextItem {
                pair_id: s.pair_id().to_string(),
                masked: s.pair.masked_text.clone(),
            })
            .collect();
        let gold: Vec<(String, u8)> = test.iter().map(|s| (s.pair_id().to_string(), s.label)).collect();

        let mut classifier = factory(model)?;
        let config = plan.training.apply(classifier.default_config()).with_seed(plan.seed);
        let report = classifier.train(&train, &val, &config)?;
        let predictions = classifier.predict(&items)?;
        let metrics = compute_metrics(&predictions, &gold)?;
        log::info!(
            "{model} {strategy} fold {}: {} epochs, macro F1 {:.4}",
            fold.fold_id,
            report.epochs_run,
            metrics.macro_f1
        );
        rows.push(MetricsReport {
            model: model.to_string(),
            strategy,
            fold: fold.fold_id,
            metrics,
        });
    }
    Ok(rows)
}

/// Train and score every (model, strategy, fold) cell. A failing cell is
/// logged and recorded; the others still run.
pub fn run_experiment(
    plan: &ExperimentPlan,
    factory: &mut dyn FnMut(&str) -> Result<Box<dyn Classifier>>,
) -> Result<ExperimentOutcome> {
    if plan.models.is_empty() {
        return Err(Error::Validation("no models configured for evaluation".into()));
    }
    if plan.strategies.is_empty() {
        return Err(Error::Validation("no training strategies configured".into()));
    }
    crate::silver::ensure_disjoint(plan.golden, plan.silver)?;
    let folds = stratified_kfold(plan.golden, plan.k, plan.seed)?;

    let mut models = plan.models.clone();
    models.sort();
    models.dedup();
    let mut strategies = plan.strategies.clone();
    strategies.sort();
    strategies.dedup();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for model in &models {
        for &strategy in &strategies {
            match run_cell(plan, &folds, model, strategy, factory) {
                Ok(cell) => rows.extend(cell),
                Err(e) => {
                    log::error!("{model} {strategy}: {e}");
                    failures.push(CellFailure {
                        model: model.clone(),
                        strategy,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(ExperimentOutcome { folds, rows, failures })
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn metric_cells(m: &Metrics) -> [f64; 7] {
    [
        m.precision[0],
        m.recall[0],
        m.f1[0],
        m.precision[1],
        m.recall[1],
        m.f1[1],
        m.macro_f1,
    ]
}

pub fn write_report(rows: &[MetricsReport], path: &Path) -> Result<()> {
    let bytes = csv_bytes(
        &REPORT_HEADER,
        rows.iter().map(|r| {
            let mut cells = vec![r.model.clone(), r.strategy.to_string(), r.fold.to_string()];
            cells.extend(metric_cells(&r.metrics).iter().map(f64::to_string));
            cells.push(r.metrics.support[0].to_string());
            cells.push(r.metrics.support[1].to_string());
            cells
        }),
    );
    crate::corpus::write_atomic(path, &bytes)
}

/// Per-(model, strategy) means of the per-fold rows.
pub fn write_summary(rows: &[MetricsReport], path: &Path) -> Result<()> {
    let mut groups: Vec<(&str, Strategy, Vec<&MetricsReport>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.model && g.1 == r.strategy) {
            Some(g) => g.2.push(r),
            None => groups.push((&r.model, r.strategy, vec![r])),
        }
    }
    let bytes = csv_bytes(
        &SUMMARY_HEADER,
        groups.into_iter().map(|(model, strategy, members)| {
            let n = members.len() as f64;
            let mut sums = [0.0; 7];
            for m in &members {
                for (s, v) in sums.iter_mut().zip(metric_cells(&m.metrics)) {
                    *s += v;
                }
            }
            let mut cells = vec![model.to_string(), strategy.to_string(), members.len().to_string()];
            cells.extend(sums.iter().map(|s| (s / n).to_string()));
            cells
        }),
    );
    crate::corpus::write_atomic(path, &bytes)
}

pub fn read_report(path: &Path) -> Result<Vec<MetricsReport>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| crate::ner::csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| crate::ner::csv_err(path, e))?;
    if headers.iter().ne(REPORT_HEADER) {
        return Err(Error::format(path, 1, "unexpected report header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| crate::ner::csv_err(path, e))?;
        let bad = |m: String| Error::format(path, i + 2, m);
        let f = |c: usize| rec[c].parse::<f64>().map_err(|e| bad(format!("column {c}: {e}")));
        let u = |c: usize| rec[c].parse::<usize>().map_err(|e| bad(format!("column {c}: {e}")));
        rows.push(MetricsReport {
            model: rec[0].to_string(),
            strategy: rec[1].parse().map_err(|e: Error| bad(e.to_string()))?,
            fold: u(2)?,
            metrics: Metrics {
                precision: [f(3)?, f(6)?],
                recall: [f(4)?, f(7)?],
                f1: [f(5)?, f(8)?],
                macro_f1: f(9)?,
                support: [u(10)?, u(11)?],
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{BaselineClassifier, ConstantClassifier};
    use crate::experiment::tests::synthetic;
    use crate::pairs::Provenance;

    fn plan<'a>(golden: &'a [LabeledSample], silver: &'a [LabeledSample], models: &[&str]) -> ExperimentPlan<'a> {
        ExperimentPlan {
            golden,
            silver,
            models: models.iter().map(|m| m.to_string()).collect(),
            strategies: Strategy::ALL.to_vec(),
            k: 3,
            seed: 11,
            training: TrainingOverrides::default(),
        }
    }

    #[test]
    fn cardinality_and_failures() {
        let golden = synthetic("g", 30, 15, Provenance::Golden);
        let silver = synthetic("s", 20, 40, Provenance::Silver);
        let p = plan(&golden, &silver, &["const", "broken"]);
        let mut factory = |name: &str| -> Result<Box<dyn Classifier>> {
            match name {
                "const" => Ok(Box::new(ConstantClassifier::new(name, 1.0))),
                _ => Err(Error::Classifier {
                    model: name.into(),
                    message: "unavailable".into(),
                }),
            }
        };
        let out = run_experiment(&p, &mut factory).unwrap();
        assert_eq!(out.rows.len(), 9);
        assert_eq!(out.failures.len(), 3);
        assert!(out.rows.iter().all(|r| r.metrics.recall[1] == 1.0));
        let keys: Vec<(Strategy, usize)> = out.rows.iter().map(|r| (r.strategy, r.fold)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn zero_models_rejected() {
        let golden = synthetic("g", 30, 15, Provenance::Golden);
        let p = plan(&golden, &[], &[]);
        let mut factory = |n: &str| -> Result<Box<dyn Classifier>> { Ok(Box::new(BaselineClassifier::new(n))) };
        assert!(matches!(run_experiment(&p, &mut factory), Err(Error::Validation(_))));
    }

    #[test]
    fn report_round_trip_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<MetricsReport> = (0..3)
            .map(|f| MetricsReport {
                model: "m".into(),
                strategy: Strategy::NonAugmented,
                fold: f,
                metrics: Metrics::from_confusion(2 + f, 1, 1, 6),
            })
            .collect();
        let path = dir.path().join("r.csv");
        write_report(&rows, &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "model,strategy,fold,precision_0,recall_0,f1_0,precision_1,recall_1,f1_1,macro_f1,support_0,support_1\n"
        ));
        let sp = dir.path().join("s.csv");
        write_summary(&rows, &sp).unwrap();
        let summary = std::fs::read_to_string(&sp).unwrap();
        let mean: f64 = rows.iter().map(|r| r.metrics.macro_f1).sum::<f64>() / 3.0;
        let last: f64 = summary
            .lines()
            .nth(1)
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!((last - mean).abs() < 1e-12);
    }
}
