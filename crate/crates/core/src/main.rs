use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relex::classifier::protocol::{serve, BaselineBackend};
use relex::config::PipelineConfig;
use relex::pipeline::{self, StageReport};
use relex::Error;

/// Food–chemical relation extraction corpus pipeline.
#[derive(Parser)]
#[command(name = "relex", version)]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides paths.work.
    #[arg(long, global = true, value_name = "DIR")]
    work_dir: Option<PathBuf>,
    /// More log output; repeat for debug detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch abstracts from PubMed (through the cache) into corpus.jsonl.
    Ingest(IngestArgs),
    /// Split abstracts into sentences.
    Segment,
    /// Dictionary matching, annotation import and food voting.
    Ner(NerArgs),
    /// Keep relevant sentences mentioning a food and a chemical.
    Filter,
    /// Build masked food–chemical candidate pairs.
    Pairs,
    /// Label candidate pairs interactively into the golden file.
    Annotate,
    /// Train the voters on the golden set and predict unlabeled pairs.
    Train,
    /// Combine voter predictions into the silver corpus.
    Vote,
    /// Write cross-validation folds and per-strategy training sets.
    Assemble,
    /// Cross-validate the configured models and write the report.
    Eval,
    /// Run every stage except annotate.
    Pipeline,
    /// Answer classifier protocol requests on stdin/stdout with the
    /// native baseline.
    #[command(hide = true)]
    Serve,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    max_results: Option<usize>,
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Use cached payloads only.
    #[arg(long)]
    offline: bool,
}

#[derive(Args)]
struct NerArgs {
    #[arg(long, value_name = "CSV")]
    gazetteer_common: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    gazetteer_scientific: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    gazetteer_chemical: Option<PathBuf>,
    #[arg(long, value_name = "JSONL")]
    import_butter: Option<PathBuf>,
    #[arg(long, value_name = "JSONL")]
    import_saber: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> relex::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::defaults_in(&std::env::current_dir().map_err(|e| Error::io(".", e))?),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.work_dir {
        cfg.paths.work = dir.clone();
    }
    match &cli.command {
        Command::Ingest(a) => {
            if a.query.is_some() {
                cfg.ingest.query = a.query.clone();
            }
            if let Some(n) = a.max_results {
                cfg.ingest.max_results = n;
            }
            if let Some(dir) = &a.cache_dir {
                cfg.paths.cache = dir.clone();
            }
            cfg.ingest.offline |= a.offline;
        }
        Command::Ner(a) => {
            let p = &mut cfg.paths;
            for (slot, flag) in [
                (&mut p.gazetteer_common, &a.gazetteer_common),
                (&mut p.gazetteer_scientific, &a.gazetteer_scientific),
                (&mut p.gazetteer_chemical, &a.gazetteer_chemical),
                (&mut p.butter, &a.import_butter),
                (&mut p.saber, &a.import_saber),
            ] {
                if flag.is_some() {
                    *slot = flag.clone();
                }
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> relex::Result<Vec<StageReport>> {
    if let Command::Serve = cli.command {
        let stdin = io::stdin().lock();
        let stdout = BufWriter::new(io::stdout().lock());
        serve(stdin, stdout, &mut BaselineBackend::default()).map_err(|e| Error::Protocol(e.to_string()))?;
        return Ok(Vec::new());
    }
    let cfg = load_config(cli)?;
    println!("seed {}", cfg.seed);
    Ok(match &cli.command {
        Command::Ingest(_) => vec![pipeline::ingest(&cfg)?],
        Command::Segment => vec![pipeline::segment(&cfg)?],
        Command::Ner(_) => vec![pipeline::ner(&cfg)?],
        Command::Filter => vec![pipeline::filter(&cfg)?],
        Command::Pairs => vec![pipeline::pairs(&cfg)?],
        Command::Annotate => vec![pipeline::annotate(&cfg, io::stdin().lock(), io::stdout().lock())?],
        Command::Train => vec![pipeline::train(&cfg)?],
        Command::Vote => vec![pipeline::vote(&cfg)?],
        Command::Assemble => vec![pipeline::assemble(&cfg)?],
        Command::Eval => vec![pipeline::eval(&cfg)?],
        Command::Pipeline => pipeline::run_all(&cfg)?,
        Command::Serve => unreachable!("handled above"),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RELEX_LOG")
        .format_timestamp(None)
        .init();

    match run(&cli) {
        Ok(reports) => {
            for r in reports {
                for line in &r.lines {
                    println!("{}: {line}", r.stage);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
