//! Pipeline stages over a work directory. Each stage reads the artifacts of
//! earlier stages, writes its own, and records output digests plus the seed
//! in `manifest.json`.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{open_classifier, HandleSpec, PredictionRecord, TextItem};
use crate::config::PipelineConfig;
use crate::corpus::{fetch_abstracts, load_corpus, save_corpus, write_atomic, FetchOptions, UreqTransport};
use crate::error::{Error, Result};
use crate::experiment::{
    assemble_training_set, class_counts, run_experiment, stratified_kfold, write_report, write_summary, ExperimentPlan,
    FoldSplit,
};
use crate::ner::{
    export_mentions, food_vote, import_external_annotations, load_gazetteer, read_mentions, EntityClass, EntityMention,
    Matcher, MatcherOptions, MentionSource,
};
use crate::pairs::{
    export_samples, extract_all_pairs, import_samples, read_pairs, write_pairs, LabeledSample, Provenance,
};
use crate::relevance::{filter_relevant, load_genia_tsv, prefilter_cooccurrence};
use crate::segment::{read_jsonl, read_sentences, split_sentences, to_jsonl, write_sentences, Sentence};
use crate::silver::{build_silver_corpus, ensure_disjoint, unlabeled_pairs, write_discards};

/// Artifact locations inside the work directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.jsonl")
    }
    pub fn sentences(&self) -> PathBuf {
        self.root.join("sentences.jsonl")
    }
    pub fn mentions(&self) -> PathBuf {
        self.root.join("mentions.jsonl")
    }
    pub fn ner_rejects(&self) -> PathBuf {
        self.root.join("ner-rejects.jsonl")
    }
    pub fn relevant(&self) -> PathBuf {
        self.root.join("relevant.jsonl")
    }
    pub fn pairs(&self) -> PathBuf {
        self.root.join("pairs.jsonl")
    }
    pub fn predictions(&self, voter: &str) -> PathBuf {
        self.root.join("predictions").join(format!("{voter}.jsonl"))
    }
    pub fn silver(&self) -> PathBuf {
        self.root.join("silver.csv")
    }
    pub fn discards(&self) -> PathBuf {
        self.root.join("silver-discards.jsonl")
    }
    pub fn silver_summary(&self) -> PathBuf {
        self.root.join("silver-summary.json")
    }
    pub fn folds(&self) -> PathBuf {
        self.root.join("folds.json")
    }
    pub fn assembled(&self, fold: usize, strategy: &str) -> PathBuf {
        self.root
            .join("assembled")
            .join(format!("fold-{fold:02}-{strategy}.csv"))
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.csv")
    }
    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }
    pub fn failures(&self) -> PathBuf {
        self.root.join("eval-failures.jsonl")
    }
    pub fn classifier_dir(&self) -> PathBuf {
        self.root.join("classifiers")
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

/// What a stage did: human-readable lines plus the files it wrote.
#[derive(Debug, Clone, Default)]
pub struct StageReport {
    pub stage: &'static str,
    pub lines: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl StageReport {
    fn new(stage: &'static str) -> Self {
        StageReport {
            stage,
            ..Default::default()
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    seed: u64,
    stages: BTreeMap<String, BTreeMap<String, String>>,
}

fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn record(ws: &Workspace, seed: u64, report: &StageReport) -> Result<()> {
    let path = ws.manifest();
    let mut manifest = match std::fs::read(&path) {
        Ok(raw) => serde_json::from_slice::<Manifest>(&raw)
            .ok()
            .filter(|m| m.seed == seed)
            .unwrap_or_else(|| Manifest::empty(seed)),
        Err(_) => Manifest::empty(seed),
    };
    let mut outputs = BTreeMap::new();
    for out in &report.outputs {
        let name = out
            .strip_prefix(ws.root())
            .unwrap_or(out)
            .to_string_lossy()
            .replace('\\', "/");
        outputs.insert(name, digest_file(out)?);
    }
    manifest.stages.insert(report.stage.to_string(), outputs);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(&path, &bytes)
}

impl Manifest {
    fn empty(seed: u64) -> Self {
        Manifest {
            format: "relex-manifest".into(),
            version: 1,
            seed,
            stages: BTreeMap::new(),
        }
    }
}

fn require(path: &Path, producer: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput {
            path: path.to_path_buf(),
            producer,
        })
    }
}

fn configured<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("paths.{key} is not set")))
}

fn finish(cfg: &PipelineConfig, report: StageReport) -> Result<StageReport> {
    record(&Workspace::new(&cfg.paths.work), cfg.seed, &report)?;
    Ok(report)
}

fn workspace(cfg: &PipelineConfig) -> Result<Workspace> {
    std::fs::create_dir_all(&cfg.paths.work).map_err(|e| Error::io(&cfg.paths.work, e))?;
    Ok(Workspace::new(&cfg.paths.work))
}

pub fn ingest(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    let query = cfg
        .ingest
        .query
        .as_deref()
        .ok_or_else(|| Error::Config("ingest.query is not set (or pass --query)".into()))?;
    let mut opts = FetchOptions::new(&cfg.paths.cache);
    opts.offline = cfg.ingest.offline;
    opts.batch_size = cfg.ingest.batch_size;
    opts.max_attempts = cfg.ingest.max_attempts;
    let corpus = fetch_abstracts(query, cfg.ingest.max_results, &opts, &UreqTransport::default())?;
    save_corpus(&corpus, &ws.corpus())?;
    let mut report = StageReport::new("ingest");
    report.line(format!(
        "{} documents ({} without abstract) for {:?}",
        corpus.len(),
        corpus.skippable_count(),
        query
    ));
    report.outputs.push(ws.corpus());
    finish(cfg, report)
}

pub fn segment(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    require(&ws.corpus(), "ingest")?;
    let corpus = load_corpus(&ws.corpus())?;
    let sentences: Vec<Sentence> = corpus
        .documents()
        .iter()
        .filter(|d| !d.is_skippable())
        .flat_map(split_sentences)
        .collect();
    write_sentences(&sentences, &ws.sentences())?;
    let mut report = StageReport::new("segment");
    report.line(format!("{} sentences", sentences.len()));
    report.outputs.push(ws.sentences());
    finish(cfg, report)
}

#[derive(Serialize)]
struct RejectLine<'a> {
    file: String,
    row: usize,
    reason: &'a str,
}

fn dictionary_mentions(path: &Path, options: MatcherOptions, sentences: &[Sentence]) -> Result<Vec<EntityMention>> {
    let matcher = Matcher::new(&load_gazetteer(path)?, options)?;
    Ok(sentences.iter().flat_map(|s| matcher.match_sentence(s)).collect())
}

pub fn ner(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    require(&ws.sentences(), "segment")?;
    let sentences = read_sentences(&ws.sentences())?;
    let p = &cfg.paths;
    let food_opts = MatcherOptions {
        entity_class: EntityClass::Food,
        strip_plurals: cfg.ner.strip_plurals,
    };
    let chem_opts = MatcherOptions {
        entity_class: EntityClass::Chemical,
        strip_plurals: cfg.ner.strip_plurals,
    };
    let common = dictionary_mentions(
        configured(&p.gazetteer_common, "gazetteer_common")?,
        food_opts,
        &sentences,
    )?;
    let scientific = dictionary_mentions(
        configured(&p.gazetteer_scientific, "gazetteer_scientific")?,
        food_opts,
        &sentences,
    )?;

    let mut report = StageReport::new("ner");
    let mut rejects = Vec::new();
    let mut import = |path: &Option<PathBuf>, class, source| -> Result<Vec<EntityMention>> {
        let Some(path) = path else { return Ok(Vec::new()) };
        let imported = import_external_annotations(path, class, source, &sentences)?;
        for r in &imported.rejected {
            rejects.push(to_jsonl(&[RejectLine {
                file: path
                    .file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                row: r.row,
                reason: &r.reason,
            }]));
        }
        Ok(imported.mentions)
    };
    let butter = import(&p.butter, EntityClass::Food, MentionSource::Butter)?;
    let saber = import(&p.saber, EntityClass::Chemical, MentionSource::Saber)?;
    if p.butter.is_none() {
        log::warn!("no BuTTER annotations configured; only scientific-name foods will pass the vote");
    }
    let chemical_dict = match &p.gazetteer_chemical {
        Some(path) => dictionary_mentions(path, chem_opts, &sentences)?,
        None => Vec::new(),
    };

    let foods = food_vote(&butter, &common, &scientific);
    let mut seen = std::collections::HashSet::new();
    let chemicals: Vec<EntityMention> = saber
        .into_iter()
        .chain(chemical_dict)
        .filter(|m| seen.insert((m.sent_id.clone(), m.start, m.end)))
        .collect();

    let order: HashMap<&str, usize> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| (s.sent_id.as_str(), i))
        .collect();
    let mut mentions: Vec<EntityMention> = foods.iter().cloned().chain(chemicals.iter().cloned()).collect();
    mentions.sort_by_key(|m| (order[m.sent_id.as_str()], m.start, m.end, m.entity_class as u8));

    export_mentions(&mentions, &ws.mentions())?;
    write_atomic(&ws.ner_rejects(), &rejects.concat())?;
    report.line(format!(
        "{} food mentions ({} common-name hits, {} scientific-name hits, {} BuTTER mentions)",
        foods.len(),
        common.len(),
        scientific.len(),
        butter.len()
    ));
    report.line(format!("{} chemical mentions", chemicals.len()));
    if !rejects.is_empty() {
        report.line(format!(
            "{} annotation rows rejected; see {}",
            rejects.len(),
            ws.ner_rejects().display()
        ));
    }
    report.outputs.extend([ws.mentions(), ws.ner_rejects()]);
    finish(cfg, report)
}

/// A sentence kept by the relevance filter with its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    #[serde(flatten)]
    pub sentence: Sentence,
    pub score: f64,
}

pub fn filter(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    require(&ws.sentences(), "segment")?;
    require(&ws.mentions(), "ner")?;
    let sentences = read_sentences(&ws.sentences())?;
    let mentions = read_mentions(&ws.mentions())?;
    let candidates = prefilter_cooccurrence(&sentences, &mentions);

    let spec_text = cfg
        .relevance
        .classifier
        .as_deref()
        .ok_or_else(|| Error::Config("relevance.classifier is not set".into()))?;
    let spec = cfg.handle(spec_text)?;
    let mut classifier = open_classifier("relevance", &spec, &ws.classifier_dir(), cfg.timeout())?;
    let mut report = StageReport::new("filter");
    match (&cfg.paths.genia, &spec) {
        (Some(genia), _) => {
            let set = load_genia_tsv(genia)?;
            let samples = set.samples();
            let config = cfg.training.apply(classifier.default_config()).with_seed(cfg.seed);
            let trained = classifier.train(&samples, &[], &config)?;
            report.line(format!(
                "relevance classifier trained on {} sentences ({} conflicting dropped), {} epochs",
                samples.len(),
                set.conflicts.len(),
                trained.epochs_run
            ));
        }
        (None, HandleSpec::Baseline) => {
            return Err(Error::Config(
                "a baseline relevance classifier needs paths.genia to train on".into(),
            ))
        }
        (None, _) => {}
    }
    let kept = filter_relevant(
        &candidates,
        classifier.as_mut(),
        cfg.relevance.threshold,
        cfg.relevance.batch_size,
    )?;
    let rows: Vec<ScoredSentence> = kept
        .into_iter()
        .map(|(sentence, score)| ScoredSentence { sentence, score })
        .collect();
    write_atomic(&ws.relevant(), &to_jsonl(&rows))?;
    report.line(format!(
        "{} of {} sentences mention a food and a chemical; {} judged relevant",
        candidates.len(),
        sentences.len(),
        rows.len()
    ));
    report.outputs.push(ws.relevant());
    finish(cfg, report)
}

pub fn pairs(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    require(&ws.relevant(), "filter")?;
    require(&ws.mentions(), "ner")?;
    let relevant: Vec<ScoredSentence> = read_jsonl(&ws.relevant())?;
    let sentences: Vec<Sentence> = relevant.into_iter().map(|r| r.sentence).collect();
    let mentions = read_mentions(&ws.mentions())?;
    let pairs = extract_all_pairs(&sentences, &mentions);
    write_pairs(&pairs, &ws.pairs())?;
    let mut report = StageReport::new("pairs");
    report.line(format!(
        "{} candidate pairs from {} sentences",
        pairs.len(),
        sentences.len()
    ));
    report.outputs.push(ws.pairs());
    finish(cfg, report)
}

pub fn annotate(
    cfg: &PipelineConfig,
    input: impl std::io::BufRead,
    output: impl std::io::Write,
) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    require(&ws.pairs(), "pairs")?;
    let pairs = read_pairs(&ws.pairs())?;
    let golden = cfg.paths.golden_file();
    let s = crate::pairs::annotate(&pairs, &golden, input, output)?;
    let mut report = StageReport::new("annotate");
    report.line(format!(
        "labeled {} positive, {} negative; skipped {}; {} already labeled; {} left",
        s.positive, s.negative, s.skipped, s.already_labeled, s.remaining
    ));
    Ok(report)
}

fn load_golden(cfg: &PipelineConfig) -> Result<Vec<LabeledSample>> {
    let path = cfg.paths.golden_file();
    require(&path, "annotate")?;
    let golden = import_samples(&path)?;
    if let Some(s) = golden.iter().find(|s| s.provenance != Provenance::Golden) {
        return Err(Error::Validation(format!(
            "{} contains non-golden sample {}",
            path.display(),
            s.pair_id()
        )));
    }
    Ok(golden)
}

fn voter_names(cfg: &PipelineConfig) -> Result<Vec<String>> {
    if cfg.voters.len() < 2 {
        return Err(Error::Validation(format!(
            "silver voting needs at least 2 voters in [voters], found {}",
            cfg.voters.len()
        )));
    }
    Ok(cfg.voters.keys().cloned().collect())
}

/// Train every voter on the full golden set and predict the unlabeled pairs.
pub fn train(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    voter_names(cfg)?;
    let golden = load_golden(cfg)?;
    require(&ws.pairs(), "pairs")?;
    let unlabeled = unlabeled_pairs(&read_pairs(&ws.pairs())?, &golden);
    let train: Vec<_> = golden.iter().map(LabeledSample::text_sample).collect();
    let items: Vec<TextItem> = unlabeled
        .iter()
        .map(|p| TextItem {
            pair_id: p.pair_id.clone(),
            masked: p.masked_text.clone(),
        })
        .collect();
    let mut report = StageReport::new("train");
    for (name, spec) in cfg.handles(&cfg.voters)? {
        let mut classifier = open_classifier(&name, &spec, &ws.classifier_dir(), cfg.timeout())?;
        let config = cfg.training.apply(classifier.default_config()).with_seed(cfg.seed);
        let trained = classifier.train(&train, &[], &config)?;
        let predictions = classifier.predict(&items)?;
        let path = ws.predictions(&name);
        write_atomic(&path, &to_jsonl(&predictions))?;
        let positives = predictions.iter().filter(|p| p.label == 1).count();
        let trained = match trained.epochs_run {
            0 => "no training".to_string(),
            1 => "1 epoch".to_string(),
            n => format!("{n} epochs"),
        };
        report.line(format!(
            "{name}: {trained}; {positives} of {} unlabeled pairs predicted positive",
            predictions.len()
        ));
        report.outputs.push(path);
    }
    finish(cfg, report)
}

pub fn vote(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    let names = voter_names(cfg)?;
    let golden = load_golden(cfg)?;
    require(&ws.pairs(), "pairs")?;
    let unlabeled = unlabeled_pairs(&read_pairs(&ws.pairs())?, &golden);
    let mut predictions: Vec<Vec<PredictionRecord>> = Vec::new();
    for name in &names {
        let path = ws.predictions(name);
        require(&path, "train")?;
        predictions.push(read_jsonl(&path)?);
    }
    let silver = build_silver_corpus(&unlabeled, &predictions)?;
    ensure_disjoint(&golden, &silver.samples)?;
    export_samples(&silver.samples, &ws.silver())?;
    write_discards(&silver.discards, &ws.discards())?;
    let mut summary = serde_json::to_vec_pretty(&silver.summary).expect("summary serializes");
    summary.push(b'\n');
    write_atomic(&ws.silver_summary(), &summary)?;
    let mut report = StageReport::new("vote");
    report.line(format!(
        "silver: {} positive, {} negative, {} discarded (voters: {})",
        silver.summary.positive,
        silver.summary.negative,
        silver.summary.discarded,
        names.join(", ")
    ));
    report.outputs.extend([ws.silver(), ws.discards(), ws.silver_summary()]);
    finish(cfg, report)
}

fn load_silver(ws: &Workspace) -> Result<Vec<LabeledSample>> {
    require(&ws.silver(), "vote")?;
    import_samples(&ws.silver())
}

pub fn assemble(cfg: &PipelineConfig) -> Result<StageReport> {
    let ws = workspace(cfg)?;
    let golden = load_golden(cfg)?;
    let silver = load_silver(&ws)?;
    ensure_disjoint(&golden, &silver)?;
    let folds: Vec<FoldSplit> = stratified_kfold(&golden, cfg.k, cfg.seed)?;
    let mut bytes = serde_json::to_vec_pretty(&folds).expect("folds serialize");
    bytes.push(b'\n');
    write_atomic(&ws.folds(), &bytes)?;
    let mut report = StageReport::new("assemble");
    report.outputs.push(ws.folds());
    for fold in &folds {
        let mut counts = Vec::new();
        for &strategy in &cfg.strategies {
            let set = assemble_training_set(
                strategy,
                fold,
                &golden,
                &silver,
                cfg.seed.wrapping_add(fold.fold_id as u64),
            )?;
            let (neg, pos) = class_counts(&set);
            counts.push(format!("{strategy} {pos}/{neg}"));
            let path = ws.assembled(fold.fold_id, strategy.as_str());
            export_samples(&set, &path)?;
            report.outputs.push(path);
        }
        report.line(format!(
            "fold {}: val {}, test {}; train (pos/neg) {}",
            fold.fold_id,
            fold.val_ids.len(),
            fold.test_ids.len(),
            counts.join(", ")
        ));
    }
    finish(cfg, report)
}

pub fn eval(cfg: &PipelineConfig) -> Result<StageReport> {
    if cfg.models.is_empty() {
        return Err(Error::Validation(
            "no models configured in [models]; nothing to evaluate".into(),
        ));
    }
    let ws = workspace(cfg)?;
    let golden = load_golden(cfg)?;
    let silver = load_silver(&ws)?;
    let handles: BTreeMap<String, HandleSpec> = cfg.handles(&cfg.models)?.into_iter().collect();
    let plan = ExperimentPlan {
        golden: &golden,
        silver: &silver,
        models: handles.keys().cloned().collect(),
        strategies: cfg.strategies.clone(),
        k: cfg.k,
        seed: cfg.seed,
        training: cfg.training,
    };
    let work = ws.classifier_dir().join("eval");
    let timeout = cfg.timeout();
    let mut factory = |name: &str| open_classifier(name, &handles[name], &work, timeout);
    let outcome = run_experiment(&plan, &mut factory)?;
    write_report(&outcome.rows, &ws.report())?;
    write_summary(&outcome.rows, &ws.summary())?;

    #[derive(Serialize)]
    struct FailureLine<'a> {
        model: &'a str,
        strategy: &'a str,
        reason: &'a str,
    }
    let failures: Vec<FailureLine> = outcome
        .failures
        .iter()
        .map(|f| FailureLine {
            model: &f.model,
            strategy: f.strategy.as_str(),
            reason: &f.reason,
        })
        .collect();
    write_atomic(&ws.failures(), &to_jsonl(&failures))?;

    let mut report = StageReport::new("eval");
    report.line(format!(
        "{} report rows over {} folds; {} failed cells",
        outcome.rows.len(),
        outcome.folds.len(),
        outcome.failures.len()
    ));
    for f in &outcome.failures {
        report.line(format!("failed: {} {}: {}", f.model, f.strategy, f.reason));
    }
    report.outputs.extend([ws.report(), ws.summary(), ws.failures()]);
    let report = finish(cfg, report)?;
    if outcome.rows.is_empty() {
        return Err(Error::Training("every evaluation cell failed".into()));
    }
    Ok(report)
}

/// Every stage in order except interactive annotation; the golden file
/// must already exist.
pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<StageReport>> {
    let stages: [fn(&PipelineConfig) -> Result<StageReport>; 9] =
        [ingest, segment, ner, filter, pairs, train, vote, assemble, eval];
    let mut reports = Vec::new();
    for (i, stage) in stages.iter().enumerate() {
        if i == 5 {
            require(&cfg.paths.golden_file(), "annotate")?;
        }
        reports.push(stage(cfg)?);
    }
    Ok(reports)
}
