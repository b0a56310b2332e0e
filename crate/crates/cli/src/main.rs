//! `shaper`: batch pipelines from raw reports to lexicons, classifiers and
//! significance reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::FileConfig;

#[derive(Debug, Parser)]
#[command(
    name = "shaper",
    version,
    about = "Lexicon induction and cause identification for incident reports"
)]
struct Cli {
    /// Flat TOML file; its keys mirror the long flags, which override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize, expand abbreviations, restore case, tag and chunk.
    Preprocess(PreprocessArgs),
    /// Build the pattern/target co-occurrence index.
    Index(IndexArgs),
    /// Grow a lexicon from seeds.
    Bootstrap(BootstrapArgs),
    /// Label documents with the Occurrence Heuristic.
    Label(LabelArgs),
    /// Train a multi-label classifier.
    Train(TrainArgs),
    /// Label documents with a trained classifier.
    Predict(PredictArgs),
    /// Per-category and micro-averaged P/R/F.
    Evaluate(EvaluateArgs),
    /// Compare two systems with McNemar and approximate randomization.
    Significance(SignificanceArgs),
    /// Grid search on a development set.
    Tune(TuneArgs),
    /// Cross-validation over an evaluation pool.
    Cv(CvArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    /// Corpus records, one JSON object per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// `ABBREV<TAB>expansion` lines.
    #[arg(long)]
    abbreviations: Option<PathBuf>,
    /// Known words, one per line; matching all-caps tokens are lowercased.
    #[arg(long)]
    dictionary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Context width of n-gram patterns.
    #[arg(long)]
    n: Option<usize>,
    /// Pattern kinds: word, phrase, syntactic.
    #[arg(long, value_delimiter = ',')]
    patterns: Option<Vec<String>>,
    /// Pre-extracted syntactic events (`doc_id<TAB>pattern<TAB>target<TAB>kind`).
    #[arg(long)]
    syntactic_events: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Seed file (`category<TAB>phrase`); the bundled aviation seeds by default.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// original or modified.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    /// One of the five predefined threshold combinations (1-5).
    #[arg(long)]
    combination: Option<usize>,
    #[arg(long)]
    min_w: Option<u64>,
    #[arg(long)]
    max_w: Option<u64>,
    #[arg(long)]
    min_p: Option<u64>,
    #[arg(long)]
    max_p: Option<usize>,
    /// Words added per category per iteration in modified mode.
    #[arg(long)]
    cap: Option<usize>,
    /// Write pattern pools and additions per iteration here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Learned lexicon; without it the seeds are used.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
struct SchemeArgs {
    /// ova, meta or prunedsets.
    #[arg(long)]
    scheme: Option<String>,
    /// Feature kinds: unigrams, bigrams, lexicon.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Category universe; labels seen in the data are always included.
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    percent: Option<u32>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    sample_fraction: Option<f64>,
    /// SVM cost.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Labelled training corpus.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Pick the SVM cost by k-fold cross-validation on the training set.
    #[arg(long)]
    select_c: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Labelled corpus or a predictions-format file.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SignificanceArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// mcnemar, ar or both.
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    shuffles: Option<usize>,
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Report with every grid point.
    #[arg(long)]
    output: PathBuf,
    /// Write the winning settings as a config file.
    #[arg(long)]
    best: Option<PathBuf>,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thetas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    percents: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    bs: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    ps: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    ts: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct CvArgs {
    /// Documents split into folds; every one is predicted once.
    #[arg(long)]
    pool: PathBuf,
    /// Extra training documents added to every fold.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Pooled predictions.
    #[arg(long)]
    output: PathBuf,
    /// Metrics over the whole pool.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[command(flatten)]
    scheme: SchemeArgs,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or parameter values.
    Usage(String),
    /// Missing or malformed input.
    Data(String),
}

impl From<shaper::Error> for CliError {
    fn from(e: shaper::Error) -> Self {
        match e {
            shaper::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seed = cli.seed.or(file.seed);
    match cli.command {
        Command::Preprocess(a) => commands::preprocess(a, &file),
        Command::Index(a) => commands::index(a, &file),
        Command::Bootstrap(a) => commands::bootstrap(a, &file),
        Command::Label(a) => commands::label(a, &file),
        Command::Train(a) => commands::train(a, &file, seed),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a, &file),
        Command::Significance(a) => commands::significance(a, &file, seed),
        Command::Tune(a) => commands::tune(a, &file, seed),
        Command::Cv(a) => commands::cv(a, &file, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CliError::Usage(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Ok(Err(CliError::Data(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
