//! One function per subcommand: resolve settings, read inputs, run one
//! library pipeline, write outputs with a header.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use shaper::bootstrap::{self, Mode};
use shaper::corpus::{self, AbbreviationMap, Dictionary, Preprocessor};
use shaper::eval;
use shaper::features::{FeatureFlags, Stopwords};
use shaper::io;
use shaper::labeler;
use shaper::multilabel::{
    self, Grid, LinearSvm, PipelineConfig, PrunedSetsParams, Scheme, TrainedModel,
};
use shaper::patterns::{self, SyntacticEvent};
use shaper::{
    Category, CooccurrenceIndex, Document, LabelSet, Lexicon, PatternConfig, SeedLexicon,
    Thresholds,
};

use crate::config::{FileConfig, Settings};
use crate::{
    BootstrapArgs, CliError, CvArgs, EvaluateArgs, IndexArgs, LabelArgs, PredictArgs,
    PreprocessArgs, SchemeArgs, SignificanceArgs, TrainArgs, TuneArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn write(path: &Path, text: &str) -> Result<()> {
    Ok(io::write_text(path, text)?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_seeds(path: Option<&PathBuf>) -> Result<SeedLexicon> {
    Ok(match path {
        Some(p) => SeedLexicon::load(p)?,
        None => SeedLexicon::bundled(),
    })
}

fn load_labelled(path: &Path) -> Result<Vec<Document>> {
    let docs = corpus::load_corpus(path)?;
    if let Some(d) = docs.iter().find(|d| d.labels.is_none()) {
        return Err(CliError::Data(format!(
            "{}: document `{}` has no labels",
            path.display(),
            d.id
        )));
    }
    Ok(docs)
}

/// Gold label sets from a labelled corpus or a predictions-format file.
fn load_gold(path: &Path) -> Result<Vec<LabelSet>> {
    let text = io::read_text(path)?;
    let first = io::data_lines(&text).next().map(|(_, l)| l.trim_start());
    if first.is_some_and(|l| l.starts_with('{')) {
        let docs = corpus::parse_corpus(&text, &path.display().to_string(), None)?;
        if let Some(d) = docs.iter().find(|d| d.labels.is_none()) {
            return Err(CliError::Data(format!(
                "{}: document `{}` has no labels",
                path.display(),
                d.id
            )));
        }
        Ok(labeler::gold_labels(&docs))
    } else {
        Ok(labeler::parse_predictions(
            &text,
            &path.display().to_string(),
        )?)
    }
}

/// Categories named in the seed file (when given) plus every label seen.
fn universe<'a>(
    seeds: Option<&SeedLexicon>,
    sets: impl IntoIterator<Item = &'a BTreeSet<Category>>,
) -> Vec<Category> {
    let mut all: BTreeSet<Category> = seeds
        .map(|s| s.categories().cloned().collect())
        .unwrap_or_default();
    for s in sets {
        all.extend(s.iter().cloned());
    }
    all.into_iter().collect()
}

// ---------------------------------------------------------------------------

pub fn preprocess(a: PreprocessArgs, file: &FileConfig) -> Result<()> {
    let mut s = Settings::new("preprocess");
    let abbreviations = s.take_opt("abbreviations", a.abbreviations, file.abbreviations.clone());
    let dictionary = s.take_opt("dictionary", a.dictionary, file.dictionary.clone());
    let pre = Preprocessor {
        abbreviations: match &abbreviations {
            Some(p) => AbbreviationMap::load(p)?,
            None => AbbreviationMap::new(),
        },
        dictionary: match &dictionary {
            Some(p) => Dictionary::load(p)?,
            None => Dictionary::default(),
        },
    };
    let docs = corpus::load_corpus_with(&a.input, &pre)?;
    write(
        &a.output,
        &corpus::corpus_to_string(&docs, Some(&s.header())),
    )
}

pub fn index(a: IndexArgs, file: &FileConfig) -> Result<()> {
    let mut s = Settings::new("index");
    let n = s.take("n", a.n, file.n, patterns::DEFAULT_CONTEXT_WIDTH);
    let kinds = s.take(
        "patterns",
        a.patterns,
        file.patterns.clone(),
        vec!["word".to_string(), "phrase".to_string()],
    );
    let events_path = s.take_opt(
        "syntactic_events",
        a.syntactic_events,
        file.syntactic_events.clone(),
    );
    let mut cfg = PatternConfig {
        word_ngrams: false,
        phrase_ngrams: false,
        syntactic: false,
        n,
    };
    for k in &kinds {
        match k.trim() {
            "word" => cfg.word_ngrams = true,
            "phrase" => cfg.phrase_ngrams = true,
            "syntactic" => cfg.syntactic = true,
            other => return Err(usage(format!("patterns: unknown kind `{other}`"))),
        }
    }
    if !(cfg.word_ngrams || cfg.phrase_ngrams || cfg.syntactic) {
        return Err(usage("patterns: at least one kind is required"));
    }
    let events: Vec<SyntacticEvent> = match (&events_path, cfg.syntactic) {
        (Some(p), true) => patterns::load_syntactic_events(p)?,
        (None, true) => return Err(usage("syntactic_events: required for syntactic patterns")),
        (_, false) => Vec::new(),
    };
    let docs = corpus::load_corpus(&a.corpus)?;
    let index = CooccurrenceIndex::build(&docs, &cfg, &events)?;
    Ok(index.save(&a.output, Some(&s.header()))?)
}

fn thresholds(a: &BootstrapArgs, file: &FileConfig, s: &mut Settings) -> Result<Thresholds> {
    // only the resolved thresholds enter the hash
    let combination = a.combination.or(file.combination);
    let base = match combination {
        Some(n) => Thresholds::combination(n)
            .ok_or_else(|| usage(format!("combination: expected 1-5, got {n}")))?,
        None => bootstrap::COMBINATIONS[2],
    };
    let th = Thresholds::new(
        s.take("min_w", a.min_w, file.min_w, base.min_word_freq),
        s.take("max_w", a.max_w, file.max_w, base.max_word_freq),
        s.take("min_p", a.min_p, file.min_p, base.min_pattern_freq),
        s.take(
            "max_p",
            a.max_p,
            file.max_p,
            base.max_pattern_distinct_targets,
        ),
    );
    th.validate()?;
    Ok(th)
}

fn trace_tsv(run: &bootstrap::BootstrapRun, header: &str) -> String {
    let mut out = String::from(header);
    out.push_str("iteration\tcategory\tkind\ttext\tscore\n");
    for step in &run.trace {
        for (cat, pool) in &step.pattern_pools {
            for p in pool {
                out.push_str(&format!("{}\t{cat}\tpattern\t{p}\t\n", step.iteration));
            }
        }
        for (cat, added) in &step.added {
            for e in added {
                out.push_str(&format!(
                    "{}\t{cat}\tadded\t{}\t{}\n",
                    step.iteration,
                    e.form.text(),
                    e.score
                ));
            }
        }
    }
    out
}

pub fn bootstrap(a: BootstrapArgs, file: &FileConfig) -> Result<()> {
    let mut s = Settings::new("bootstrap");
    let seeds_path = s.take_opt("seeds", a.seeds.clone(), file.seeds.clone());
    let mode_name = s.take(
        "mode",
        a.mode.clone(),
        file.mode.clone(),
        "modified".to_string(),
    );
    let iterations = s.take("iterations", a.iterations, file.iterations, 10);
    let mode = match mode_name.as_str() {
        "original" => Mode::Original,
        "modified" => Mode::Modified {
            thresholds: thresholds(&a, file, &mut s)?,
            per_category_cap: s.take("cap", a.cap, file.cap, bootstrap::WORDS_PER_ITERATION),
        },
        other => {
            return Err(usage(format!(
                "mode: expected original or modified, got `{other}`"
            )))
        }
    };
    let seeds = load_seeds(seeds_path.as_ref())?;
    let index = CooccurrenceIndex::load(&a.index)?;
    let run = bootstrap::run(&seeds, &index, iterations, mode)?;
    let header = s.header();
    run.lexicon.save(&a.output, Some(&header))?;
    if let Some(p) = &a.trace {
        write(p, &trace_tsv(&run, &header))?;
    }
    Ok(())
}

pub fn label(a: LabelArgs, file: &FileConfig) -> Result<()> {
    let mut s = Settings::new("label");
    let lexicon_path = s.take_opt("lexicon", a.lexicon, file.lexicon.clone());
    let seeds_path = s.take_opt("seeds", a.seeds, file.seeds.clone());
    let lexicon = match &lexicon_path {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::from_seeds(&load_seeds(seeds_path.as_ref())?),
    };
    let docs = corpus::load_corpus(&a.corpus)?;
    let sets = labeler::label_corpus(&docs, &lexicon);
    Ok(labeler::save_predictions(
        &a.output,
        &sets,
        Some(&s.header()),
    )?)
}

// ---------------------------------------------------------------------------
// Classification

/// Everything a scheme needs besides the documents.
struct ClassifierSetup {
    cfg: PipelineConfig,
    lexicon: Option<Lexicon>,
    seeds: Option<SeedLexicon>,
    scheme_name: String,
    percent: u32,
    theta: f64,
    pruned: PrunedSetsParams,
    t: f64,
}

impl ClassifierSetup {
    fn resolve(
        a: &SchemeArgs,
        file: &FileConfig,
        seed: Option<u64>,
        s: &mut Settings,
    ) -> Result<Self> {
        let seed = s.take("seed", seed, file.seed, 0);
        let lexicon_path = s.take_opt("lexicon", a.lexicon.clone(), file.lexicon.clone());
        let stopwords_path = s.take_opt("stopwords", a.stopwords.clone(), file.stopwords.clone());
        let seeds_path = s.take_opt("seeds", a.seeds.clone(), file.seeds.clone());
        let mut default_features = vec!["unigrams".to_string(), "bigrams".to_string()];
        if lexicon_path.is_some() {
            default_features.push("lexicon".to_string());
        }
        let features = s.take(
            "features",
            a.features.clone(),
            file.features.clone(),
            default_features,
        );
        let mut flags = FeatureFlags {
            unigrams: false,
            bigrams: false,
            lexicon: false,
        };
        for f in &features {
            match f.trim() {
                "unigrams" => flags.unigrams = true,
                "bigrams" => flags.bigrams = true,
                "lexicon" => flags.lexicon = true,
                other => return Err(usage(format!("features: unknown kind `{other}`"))),
            }
        }
        if flags.lexicon && lexicon_path.is_none() {
            return Err(usage("features: `lexicon` needs a lexicon file"));
        }
        let defaults = LinearSvm::default();
        let learner = LinearSvm {
            c: s.take("c", a.c, file.c, defaults.c),
            epochs: s.take("epochs", a.epochs, file.epochs, defaults.epochs),
        };
        let pd = PrunedSetsParams::default();
        let setup = ClassifierSetup {
            cfg: PipelineConfig {
                flags,
                stopwords: match &stopwords_path {
                    Some(p) => Stopwords::load(p)?,
                    None => Stopwords::english(),
                },
                learner,
                seed,
            },
            lexicon: match &lexicon_path {
                Some(p) => Some(Lexicon::load(p)?),
                None => None,
            },
            seeds: match &seeds_path {
                Some(p) => Some(SeedLexicon::load(p)?),
                None => None,
            },
            scheme_name: s.take(
                "scheme",
                a.scheme.clone(),
                file.scheme.clone(),
                "ova".to_string(),
            ),
            percent: s.take("percent", a.percent, file.percent, 100),
            theta: s.take("theta", a.theta, file.theta, 0.0),
            pruned: PrunedSetsParams {
                p: s.take("p", a.p, file.p, pd.p),
                b: s.take("b", a.b, file.b, pd.b),
                m: s.take("m", a.m, file.m, pd.m),
                sample_fraction: s.take(
                    "sample_fraction",
                    a.sample_fraction,
                    file.sample_fraction,
                    pd.sample_fraction,
                ),
            },
            t: s.take("t", a.t, file.t, 0.5),
        };
        setup.scheme()?;
        Ok(setup)
    }

    fn scheme(&self) -> Result<Scheme> {
        Ok(match self.scheme_name.as_str() {
            "ova" => Scheme::Ova {
                theta: self.theta,
                percent: self.percent,
            },
            "meta" => Scheme::Meta {
                percent: self.percent,
            },
            "prunedsets" => Scheme::PrunedSets {
                b: self.pruned.b,
                p: self.pruned.p,
                t: self.t,
                percent: self.percent,
                m: self.pruned.m,
                sample_fraction: self.pruned.sample_fraction,
            },
            other => {
                return Err(usage(format!(
                    "scheme: expected ova, meta or prunedsets, got `{other}`"
                )))
            }
        })
    }

    fn categories<'a>(&self, docs: impl IntoIterator<Item = &'a Document>) -> Vec<Category> {
        let sets: Vec<BTreeSet<Category>> = docs.into_iter().map(Document::label_set).collect();
        universe(self.seeds.as_ref(), &sets)
    }
}

pub fn train(a: TrainArgs, file: &FileConfig, seed: Option<u64>) -> Result<()> {
    let mut s = Settings::new("train");
    let mut setup = ClassifierSetup::resolve(&a.scheme, file, seed, &mut s)?;
    let folds = s.take_opt("select_c", a.select_c, file.select_c);
    let grid = s.take(
        "c_grid",
        a.c_grid,
        file.c_grid.clone(),
        multilabel::c_grid(),
    );
    let docs = load_labelled(&a.train)?;
    let categories = setup.categories(&docs);
    let scheme = setup.scheme()?;
    if let Some(k) = folds {
        let (c, scores) = multilabel::select_c(
            &docs,
            &categories,
            setup.lexicon.as_ref(),
            &setup.cfg,
            &scheme,
            &grid,
            k,
        )?;
        for (cost, prf) in &scores {
            eprintln!("C={cost}\tF={:.4}", 100.0 * prf.f);
        }
        setup.cfg.learner.c = c;
    }
    let model = TrainedModel::fit(
        &docs,
        &categories,
        setup.lexicon.as_ref(),
        &setup.cfg,
        &scheme,
    )?;
    Ok(model.save(&a.output, Some(&s.header()))?)
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let mut s = Settings::new("predict");
    s.take("model_seed", Some(model.seed), None, 0);
    s.take(
        "model_scheme",
        Some(model.scheme.clone()),
        None,
        model.scheme.clone(),
    );
    let docs = corpus::load_corpus(&a.corpus)?;
    Ok(labeler::save_predictions(
        &a.output,
        &model.predict(&docs),
        Some(&s.header()),
    )?)
}

pub fn evaluate(a: EvaluateArgs, file: &FileConfig) -> Result<()> {
    let mut s = Settings::new("evaluate");
    let seeds_path = s.take_opt("seeds", a.seeds, file.seeds.clone());
    let seeds = match &seeds_path {
        Some(p) => Some(SeedLexicon::load(p)?),
        None => None,
    };
    let predictions = labeler::load_predictions(&a.predictions)?;
    let gold = load_gold(&a.gold)?;
    let categories = universe(
        seeds.as_ref(),
        predictions.iter().chain(&gold).map(|l| &l.labels),
    );
    let counts = eval::count(&predictions, &gold, &categories)?;
    write_or_print(
        a.output.as_deref(),
        &eval::metrics_tsv(&counts, Some(&s.header())),
    )
}

fn system_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn significance(a: SignificanceArgs, file: &FileConfig, seed: Option<u64>) -> Result<()> {
    let mut s = Settings::new("significance");
    let test = s.take("test", a.test, file.test.clone(), "both".to_string());
    let shuffles = s.take("shuffles", a.shuffles, file.shuffles, 9999);
    let seed = s.take("seed", seed, file.seed, 0);
    let seeds_path = s.take_opt("seeds", a.seeds, file.seeds.clone());
    let (mcnemar, ar) = match test.as_str() {
        "mcnemar" => (true, false),
        "ar" => (false, true),
        "both" => (true, true),
        other => {
            return Err(usage(format!(
                "test: expected mcnemar, ar or both, got `{other}`"
            )))
        }
    };
    let seeds = match &seeds_path {
        Some(p) => Some(SeedLexicon::load(p)?),
        None => None,
    };
    let sys_a = labeler::load_predictions(&a.a)?;
    let sys_b = labeler::load_predictions(&a.b)?;
    let gold = load_gold(&a.gold)?;
    let categories = universe(
        seeds.as_ref(),
        sys_a.iter().chain(&sys_b).chain(&gold).map(|l| &l.labels),
    );
    let (name_a, name_b) = (system_name(&a.a), system_name(&a.b));
    let mut out = s.header();
    out.push_str(eval::SIGNIFICANCE_HEADER);
    if mcnemar {
        let ca = eval::decision_correctness(&sys_a, &gold, &categories)?;
        let cb = eval::decision_correctness(&sys_b, &gold, &categories)?;
        let r = eval::mcnemar(&ca, &cb)?;
        out.push_str(&eval::significance_row(&name_a, &name_b, "mcnemar", &r));
    }
    if ar {
        let p = eval::approx_randomization(&sys_a, &sys_b, &gold, &categories, shuffles, seed)?;
        let fa = eval::micro_prf(&eval::count(&sys_a, &gold, &categories)?).f;
        let fb = eval::micro_prf(&eval::count(&sys_b, &gold, &categories)?).f;
        let r = eval::TestResult {
            statistic: (fa - fb).abs(),
            p,
        };
        out.push_str(&eval::significance_row(&name_a, &name_b, "ar", &r));
    }
    write_or_print(a.output.as_deref(), &out)
}

pub fn tune(a: TuneArgs, file: &FileConfig, seed: Option<u64>) -> Result<()> {
    let mut s = Settings::new("tune");
    let setup = ClassifierSetup::resolve(&a.scheme, file, seed, &mut s)?;
    let percents = s.take(
        "percents",
        a.percents,
        file.percents.clone(),
        multilabel::percent_grid(),
    );
    let grid = match setup.scheme_name.as_str() {
        "ova" => Grid::Ova {
            thetas: s.take(
                "thetas",
                a.thetas,
                file.thetas.clone(),
                multilabel::theta_grid(),
            ),
            percents,
        },
        "meta" => Grid::Meta { percents },
        "prunedsets" => Grid::PrunedSets {
            bs: s.take("bs", a.bs, file.bs.clone(), vec![2, 3, 5]),
            ps: s.take("ps", a.ps, file.ps.clone(), vec![3, 5, 10]),
            ts: s.take("ts", a.ts, file.ts.clone(), multilabel::vote_grid()),
            percents,
            m: setup.pruned.m,
            sample_fraction: setup.pruned.sample_fraction,
        },
        other => {
            return Err(usage(format!(
                "scheme: expected ova, meta or prunedsets, got `{other}`"
            )))
        }
    };
    let train = load_labelled(&a.train)?;
    let dev = load_labelled(&a.dev)?;
    let categories = setup.categories(train.iter().chain(&dev));
    let report = multilabel::tune(
        &train,
        &dev,
        &categories,
        setup.lexicon.as_ref(),
        &setup.cfg,
        &grid,
    )?;
    let header = s.header();
    write(&a.output, &report.to_tsv(Some(&header)))?;
    if let Some(p) = &a.best {
        write(p, &best_config(&report.best().scheme, &header))?;
    }
    Ok(())
}

/// The winning point as config keys, ready for `train --config`.
fn best_config(scheme: &Scheme, header: &str) -> String {
    let body = match scheme {
        Scheme::Ova { theta, percent } => format!("scheme = \"ova\"\ntheta = {theta:?}\npercent = {percent}\n"),
        Scheme::Meta { percent } => format!("scheme = \"meta\"\npercent = {percent}\n"),
        Scheme::PrunedSets {
            b,
            p,
            t,
            percent,
            m,
            sample_fraction,
        } => format!(
            "scheme = \"prunedsets\"\nb = {b}\np = {p}\nt = {t:?}\npercent = {percent}\nm = {m}\nsample_fraction = {sample_fraction:?}\n"
        ),
    };
    format!("{header}{body}")
}

pub fn cv(a: CvArgs, file: &FileConfig, seed: Option<u64>) -> Result<()> {
    let mut s = Settings::new("cv");
    let setup = ClassifierSetup::resolve(&a.scheme, file, seed, &mut s)?;
    let k = s.take("folds", a.folds, file.folds, 5);
    let pool = load_labelled(&a.pool)?;
    let base = match &a.base {
        Some(p) => load_labelled(p)?,
        None => Vec::new(),
    };
    let categories = setup.categories(pool.iter().chain(&base));
    let scheme = setup.scheme()?;
    let result = multilabel::cross_validate_augmented(
        &base,
        &pool,
        &categories,
        k,
        setup.cfg.seed,
        |tr, te| {
            Ok(
                TrainedModel::fit(tr, &categories, setup.lexicon.as_ref(), &setup.cfg, &scheme)?
                    .predict(te),
            )
        },
    )?;
    let header = s.header();
    labeler::save_predictions(&a.output, &result.predictions, Some(&header))?;
    if let Some(p) = &a.metrics {
        write(p, &eval::metrics_tsv(&result.counts, Some(&header)))?;
    }
    Ok(())
}
