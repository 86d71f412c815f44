//! The `bkpred` command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::dataset::Part;
use crate::error::{Error, Result};
use crate::pipeline::{self, Layout, LlmSample, Stage};
use crate::synth::{self, SynthConfig};
use crate::train::Family;
use crate::transport::http_or_replay;

#[derive(Debug, Parser)]
#[command(name = "bkpred", version, about = "Next-year bankruptcy prediction from annual reports")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct InputPaths {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub fundamentals: Option<PathBuf>,
    #[arg(long)]
    pub calendar: Option<PathBuf>,
    #[arg(long)]
    pub deflator: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the corpus into filings.jsonl with corpus statistics.
    Ingest(#[command(flatten)] InputPaths),
    /// Link filings to 10-K fundamentals.
    Link(#[command(flatten)] InputPaths),
    /// Qualify, label and split linked records.
    Label(#[command(flatten)] InputPaths),
    /// Reassign splits of labelled records under the configured years.
    Split(#[command(flatten)] InputPaths),
    /// Compute ratios, MD&A texts and the training scaler.
    Featurize(#[command(flatten)] InputPaths),
    /// Grid-search families on train, selecting by validation ROC-AUC.
    Tune {
        /// Families to tune; default: all configured.
        #[arg(long, value_enum)]
        family: Vec<Family>,
    },
    /// Fit the tuned (or first) grid point on a part.
    Train {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, value_enum, default_value = "full-train")]
        part: Part,
    },
    /// Score a part with a saved model.
    Score {
        #[arg(long, value_enum)]
        family: Family,
        /// Model file; default: the full-train model of the family.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        part: Part,
    },
    /// Stack two train-only base models with a meta-classifier fitted on validation.
    Ensemble {
        /// First base model; default: the tuned GBT.
        #[arg(long)]
        base_a: Option<PathBuf>,
        /// Second base model; default: the tuned TF-IDF model.
        #[arg(long)]
        base_b: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        part: Part,
    },
    /// Compute metrics for score files.
    Evaluate {
        /// `name=path` score files; default: every test score file in the output directory.
        #[arg(long = "scores", value_parser = named_path)]
        scores: Vec<(String, PathBuf)>,
        /// Labelled JSONL or `record_id,label` CSV; default: labeled.jsonl.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Write curve tables and plots from metrics files.
    Report {
        /// `name=path` metrics files; default: every metrics file in the output directory.
        #[arg(long = "metrics", value_parser = named_path)]
        metrics: Vec<(String, PathBuf)>,
    },
    /// Ask the LLM about a sample of MD&A sections.
    LlmCollect {
        #[arg(long, value_enum, default_value = "test-random")]
        sample: LlmSample,
        /// Answer from recorded responses instead of the network.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Shuffle-evaluate collected LLM scores.
    LlmEval {
        #[arg(long, value_enum, default_value = "test-random")]
        sample: LlmSample,
        #[arg(long)]
        responses: Option<PathBuf>,
    },
    /// Corpus and labelled-dataset statistics.
    Stats(#[command(flatten)] InputPaths),
    /// Generate the synthetic benchmark into the output directory.
    Synth {
        /// A tenth of the standard size.
        #[arg(long)]
        small: bool,
    },
    /// Every stage in one process.
    Run(#[command(flatten)] InputPaths),
}

fn named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((n, p)) if !n.is_empty() && !p.is_empty() => Ok((n.to_string(), PathBuf::from(p))),
        _ => Err(format!("expected name=path, got `{s}`")),
    }
}

fn resolve_config(cli: &Cli, inputs: Option<&InputPaths>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.paths.out = cli.out.clone();
    }
    if let Some(i) = inputs {
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                *slot = v.clone();
            }
        };
        set(&mut cfg.paths.corpus, &i.corpus);
        set(&mut cfg.paths.fundamentals, &i.fundamentals);
        set(&mut cfg.paths.calendar, &i.calendar);
        set(&mut cfg.paths.deflator, &i.deflator);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.paths.out.clone().ok_or_else(|| Error::Config("no output directory (config paths.out or --out)".into()))?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}

/// Per-model files for the configured families and the ensemble, in that
/// order, that exist.
fn default_named(cfg: &RunConfig, path: impl Fn(&str) -> PathBuf) -> Vec<(String, PathBuf)> {
    cfg.models
        .families
        .iter()
        .map(|f| f.as_str())
        .chain(["ensemble"])
        .map(|n| (n.to_string(), path(n)))
        .filter(|(_, p)| p.exists())
        .collect()
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("summaries serialize"));
}

pub fn execute(cli: &Cli) -> Result<()> {
    let inputs = match &cli.command {
        Command::Ingest(i)
        | Command::Link(i)
        | Command::Label(i)
        | Command::Split(i)
        | Command::Featurize(i)
        | Command::Stats(i)
        | Command::Run(i) => Some(i),
        _ => None,
    };
    let cfg = resolve_config(cli, inputs)?;
    let out = out_dir(&cfg)?;
    let layout = Layout::new(&out);
    let st = Stage { cfg: &cfg, layout: &layout };
    match &cli.command {
        Command::Ingest(_) => {
            let r = st.ingest()?;
            eprintln!("ingested {} filings, skipped {}", r.n_loaded, r.n_skipped);
        }
        Command::Link(_) => print_json(&st.link()?),
        Command::Label(_) => {
            let r = st.label()?;
            eprintln!("{} examples, {} qualified, {} positive", r.n_examples, r.n_qualified, r.n_positive);
        }
        Command::Split(_) => print_json(&st.split()?),
        Command::Featurize(_) => {
            let n = st.featurize()?;
            eprintln!("featurized {n} qualified examples");
        }
        Command::Tune { family } => {
            let fams = if family.is_empty() { cfg.models.families.clone() } else { family.clone() };
            for f in fams {
                let r = st.tune(f)?;
                eprintln!("{}: best validation ROC-AUC {:.4} at grid point {}", f.as_str(), r.best_val_auc, r.best_index);
            }
        }
        Command::Train { family, part } => {
            let p = st.train(*family, *part)?;
            eprintln!("wrote {}", p.display());
        }
        Command::Score { family, model, part } => {
            let m = model.clone().unwrap_or_else(|| layout.model(*family, Part::FullTrain));
            let m = if m.exists() { m } else { return Err(Error::Usage(format!("model {} not found", m.display()))) };
            let p = st.score(&m, family.as_str(), *part)?;
            eprintln!("wrote {}", p.display());
        }
        Command::Ensemble { base_a, base_b, part } => {
            let a = base_a.clone().unwrap_or_else(|| layout.tuned_model(Family::Gbt));
            let b = base_b.clone().unwrap_or_else(|| layout.tuned_model(Family::Tfidf));
            for p in [&a, &b] {
                if !p.exists() {
                    return Err(Error::Usage(format!("base model {} not found", p.display())));
                }
            }
            let p = st.ensemble(&a, &b, *part)?;
            eprintln!("wrote {}", p.display());
        }
        Command::Evaluate { scores, labels } => {
            let scores =
                if scores.is_empty() { default_named(&cfg, |n| layout.scores(n, Part::Test)) } else { scores.clone() };
            if scores.is_empty() {
                return Err(Error::Usage("no score files given or found".into()));
            }
            let labels = labels.clone().unwrap_or_else(|| layout.labeled());
            st.evaluate(&scores, &labels)?;
            print!("{}", crate::io::read_string(&layout.metrics_csv())?);
        }
        Command::Report { metrics } => {
            let metrics =
                if metrics.is_empty() { default_named(&cfg, |n| layout.metrics_json(n)) } else { metrics.clone() };
            if metrics.is_empty() {
                return Err(Error::Usage("no metrics files given or found".into()));
            }
            for p in st.report(&metrics)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::LlmCollect { sample, replay } => {
            let t = http_or_replay(&cfg.llm, replay.as_deref())?;
            print_json(&st.llm_collect(*sample, t.as_ref())?);
        }
        Command::LlmEval { sample, responses } => {
            let r = st.llm_eval(*sample, responses.as_deref())?;
            println!("{}", bkpred_core::llm::describe(&r));
        }
        Command::Stats(_) => print_json(&st.stats()?),
        Command::Synth { small } => {
            let seed = cfg.seed()?;
            let sc = if *small { SynthConfig::small(seed) } else { SynthConfig::standard(seed) };
            let data = synth::generate(&sc)?;
            let paths = synth::write(&data, &out)?;
            let mut m = crate::manifest::Manifest::new("synth", &cfg)?;
            for p in paths.all() {
                m.output(&out, p)?;
            }
            m.write(&out)?;
            print_json(&data.summary());
        }
        Command::Run(_) => {
            pipeline::run(&cfg, &layout)?;
            print!("{}", crate::io::read_string(&layout.metrics_csv())?);
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bkpred: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}

/// Runs `bkpred` in-process with the given arguments (without the program
/// name), returning the exit code.
pub fn run_args(args: &[&str]) -> i32 {
    main_with(std::iter::once("bkpred").chain(args.iter().copied()))
}
