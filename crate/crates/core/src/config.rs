//! Pipeline configuration, read from TOML. Relative paths resolve against
//! the directory holding the config file.
//!
//! ```toml
//! seed = 7
//! k = 10
//! strategies = ["non_augmented", "augmented_unbalanced", "augmented_balanced"]
//!
//! [paths]
//! work = "out"
//! cache = "cache"
//! gazetteer_common = "gazetteers/common.csv"
//! gazetteer_scientific = "gazetteers/scientific.csv"
//! gazetteer_chemical = "gazetteers/chemical.csv"
//! butter = "annotations/butter.jsonl"
//! golden = "golden.csv"
//!
//! [ingest]
//! query = "food chemical"
//! max_results = 20
//! offline = true
//!
//! [relevance]
//! classifier = "stub:constant:1"
//!
//! [voters]
//! bert = "subprocess:python -m adapter --model-name bert-base-cased"
//!
//! [models]
//! baseline = "baseline"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::classifier::{HandleSpec, TrainingOverrides, DECISION_THRESHOLD};
use crate::error::{Error, Result};
use crate::experiment::Strategy;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Directory receiving every artifact.
    pub work: PathBuf,
    pub cache: PathBuf,
    pub gazetteer_common: Option<PathBuf>,
    pub gazetteer_scientific: Option<PathBuf>,
    pub gazetteer_chemical: Option<PathBuf>,
    pub butter: Option<PathBuf>,
    pub saber: Option<PathBuf>,
    /// Knowledge-type TSV for training the relevance classifier.
    pub genia: Option<PathBuf>,
    pub golden: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            work: PathBuf::from("out"),
            cache: PathBuf::from("cache"),
            gazetteer_common: None,
            gazetteer_scientific: None,
            gazetteer_chemical: None,
            butter: None,
            saber: None,
            genia: None,
            golden: None,
        }
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.work);
        join(&mut self.cache);
        for p in [
            &mut self.gazetteer_common,
            &mut self.gazetteer_scientific,
            &mut self.gazetteer_chemical,
            &mut self.butter,
            &mut self.saber,
            &mut self.genia,
            &mut self.golden,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
    }

    /// Golden file location; defaults to `golden.csv` in the work dir.
    pub fn golden_file(&self) -> PathBuf {
        self.golden.clone().unwrap_or_else(|| self.work.join("golden.csv"))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    pub query: Option<String>,
    pub max_results: usize,
    pub offline: bool,
    pub batch_size: usize,
    pub max_attempts: u32,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            query: None,
            max_results: 100,
            offline: false,
            batch_size: 200,
            max_attempts: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NerConfig {
    pub strip_plurals: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelevanceConfig {
    pub classifier: Option<String>,
    pub threshold: f64,
    pub batch_size: usize,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        RelevanceConfig {
            classifier: None,
            threshold: DECISION_THRESHOLD,
            batch_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub k: usize,
    pub strategies: Vec<Strategy>,
    /// Seconds to wait for an external classifier to answer one request.
    pub timeout_secs: u64,
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub ner: NerConfig,
    pub relevance: RelevanceConfig,
    pub training: TrainingOverrides,
    /// Classifiers whose unanimous vote labels the silver corpus.
    pub voters: BTreeMap<String, String>,
    /// Classifiers evaluated by cross-validation.
    pub models: BTreeMap<String, String>,
    /// Directory relative paths were resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            k: 10,
            strategies: Strategy::ALL.to_vec(),
            timeout_secs: 3600,
            paths: Paths::default(),
            ingest: IngestConfig::default(),
            ner: NerConfig::default(),
            relevance: RelevanceConfig::default(),
            training: TrainingOverrides::default(),
            voters: BTreeMap::new(),
            models: BTreeMap::new(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl PipelineConfig {
    /// Read and validate a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.paths.resolve(base);
        cfg.base_dir = base.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults with paths relative to `base`.
    pub fn defaults_in(base: &Path) -> Self {
        let mut cfg = Self::default();
        cfg.paths.resolve(base);
        cfg.base_dir = base.to_path_buf();
        cfg
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    /// Checks values and that every configured input file exists.
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be >= 2, got {}", self.k)));
        }
        if !(0.0..=1.0).contains(&self.relevance.threshold) {
            return Err(Error::Config("relevance threshold must lie in [0,1]".into()));
        }
        let p = &self.paths;
        for (key, path) in [
            ("gazetteer_common", &p.gazetteer_common),
            ("gazetteer_scientific", &p.gazetteer_scientific),
            ("gazetteer_chemical", &p.gazetteer_chemical),
            ("butter", &p.butter),
            ("saber", &p.saber),
            ("genia", &p.genia),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "paths.{key} points to {}, which does not exist",
                        path.display()
                    )));
                }
            }
        }
        for (table, handles) in [("voters", &self.voters), ("models", &self.models)] {
            for (name, spec) in handles {
                HandleSpec::parse(spec).map_err(|e| Error::Config(format!("{table}.{name}: {e}")))?;
            }
        }
        if let Some(spec) = &self.relevance.classifier {
            HandleSpec::parse(spec).map_err(|e| Error::Config(format!("relevance.classifier: {e}")))?;
        }
        Ok(())
    }

    /// Parsed handle specs with relative paths resolved.
    pub fn handles(&self, table: &BTreeMap<String, String>) -> Result<Vec<(String, HandleSpec)>> {
        table
            .iter()
            .map(|(name, spec)| Ok((name.clone(), self.handle(spec)?)))
            .collect()
    }

    pub fn handle(&self, spec: &str) -> Result<HandleSpec> {
        Ok(HandleSpec::parse(spec)?.resolve(&self.base_dir))
    }
}
