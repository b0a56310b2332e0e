use std::collections::BTreeSet;
use std::fs;

use proptest::prelude::*;
use shaper::bootstrap::{self, Mode};
use shaper::corpus;
use shaper::eval;
use shaper::labeler;
use shaper::multilabel::{PipelineConfig, Scheme, TrainedModel};
use shaper::{
    Category, CooccurrenceIndex, LabelSet, Lexicon, PatternConfig, SeedLexicon, Thresholds,
};
use tempfile::TempDir;

const REPORTS: [(&str, &str); 6] = [
    (
        "THE CREW REPORTED FATIGUE AFTER A LONG DUTY DAY.",
        r#"["Duty Cycle"]"#,
    ),
    (
        "DENSE FOG OVER THE RUNWAY REDUCED VISIBILITY.",
        r#"["Physical Environment"]"#,
    ),
    (
        "FOG AND CREW FATIGUE DELAYED THE FLIGHT.",
        r#"["Duty Cycle","Physical Environment"]"#,
    ),
    ("ROUTINE FLIGHT WITH NO ISSUES.", "[]"),
    (
        "THE CREW REPORTED FOG OVER THE FIELD.",
        r#"["Physical Environment"]"#,
    ),
    (
        "THE CREW REPORTED HAZE OVER THE FIELD.",
        r#"["Physical Environment"]"#,
    ),
];

fn write_corpus(dir: &TempDir, n: usize) -> std::path::PathBuf {
    let mut text = String::from("# fixture\n");
    for i in 0..n {
        let (t, l) = REPORTS[i % REPORTS.len()];
        text.push_str(&format!(
            "{{\"id\":\"r{i:03}\",\"text\":\"{t}\",\"labels\":{l}}}\n"
        ));
    }
    let path = dir.path().join("corpus.jsonl");
    fs::write(&path, text).unwrap();
    path
}

fn set(id: &str, labels: &[&str]) -> LabelSet {
    LabelSet {
        document_id: id.to_string(),
        labels: labels.iter().map(|s| Category::new(*s)).collect(),
    }
}

#[test]
fn corpus_survives_save_and_load() {
    let dir = TempDir::new().unwrap();
    let docs = corpus::load_corpus(&write_corpus(&dir, 8)).unwrap();
    let out = dir.path().join("saved.jsonl");
    corpus::save_corpus(&out, &docs, Some("# header\n")).unwrap();
    assert_eq!(corpus::load_corpus(&out).unwrap(), docs);
}

#[test]
fn index_and_lexicon_survive_save_and_load() {
    let dir = TempDir::new().unwrap();
    let docs = corpus::load_corpus(&write_corpus(&dir, 40)).unwrap();
    let index = CooccurrenceIndex::build(&docs, &PatternConfig::default(), &[]).unwrap();
    let ipath = dir.path().join("index.json");
    index.save(&ipath, None).unwrap();
    let reloaded = CooccurrenceIndex::load(&ipath).unwrap();
    assert_eq!(reloaded, index);

    let mode = Mode::Modified {
        thresholds: Thresholds::new(1, 1000, 1, 1000),
        per_category_cap: 5,
    };
    let run = bootstrap::run(&SeedLexicon::bundled(), &reloaded, 2, mode).unwrap();
    let lpath = dir.path().join("lexicon.tsv");
    run.lexicon.save(&lpath, None).unwrap();
    // entries are compared in their canonical written order
    let back = Lexicon::load(&lpath).unwrap();
    assert_eq!(back.to_tsv(None), run.lexicon.to_tsv(None));
    assert!(run
        .trace
        .iter()
        .any(|t| t.added.values().any(|a| !a.is_empty())));
}

#[test]
fn model_predictions_survive_save_and_load() {
    let dir = TempDir::new().unwrap();
    let docs = corpus::load_corpus(&write_corpus(&dir, 40)).unwrap();
    let cats: Vec<Category> = ["Duty Cycle", "Physical Environment"]
        .map(Category::new)
        .to_vec();
    let mut cfg = PipelineConfig::default();
    cfg.flags.lexicon = false;
    let scheme = Scheme::Ova {
        theta: 0.0,
        percent: 100,
    };
    let model = TrainedModel::fit(&docs, &cats, None, &cfg, &scheme).unwrap();
    let path = dir.path().join("model.json");
    model.save(&path, None).unwrap();
    let reloaded = TrainedModel::load(&path).unwrap();
    assert_eq!(reloaded.predict(&docs), model.predict(&docs));

    let ppath = dir.path().join("pred.tsv");
    labeler::save_predictions(&ppath, &model.predict(&docs), None).unwrap();
    let counts = eval::count(
        &labeler::load_predictions(&ppath).unwrap(),
        &labeler::gold_labels(&docs),
        &cats,
    )
    .unwrap();
    assert_eq!(eval::micro_prf(&counts).f, 1.0);
}

#[test]
fn mismatched_documents_are_rejected() {
    let a = vec![set("d1", &["A"])];
    let g = vec![set("d2", &["A"])];
    assert!(eval::count(&a, &g, &[Category::new("A")]).is_err());
}

type Pair = (BTreeSet<u8>, BTreeSet<u8>);

fn label_sets() -> impl Strategy<Value = Vec<Pair>> {
    let one = proptest::collection::btree_set(0u8..4, 0..4);
    proptest::collection::vec((one.clone(), one), 1..12)
}

proptest! {
    #[test]
    fn masi_is_a_bounded_symmetric_distance(pairs in label_sets()) {
        for (a, b) in &pairs {
            let d = eval::masi_distance(a, b);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, eval::masi_distance(b, a));
            prop_assert_eq!(eval::masi_distance(a, a), 0.0);
        }
    }

    #[test]
    fn micro_scores_are_bounded(pairs in label_sets()) {
        let cats: Vec<Category> = (0..4).map(|c| Category::new(format!("c{c}"))).collect();
        let to_sets = |pick: fn(&Pair) -> &BTreeSet<u8>| -> Vec<LabelSet> {
            pairs
                .iter()
                .enumerate()
                .map(|(i, p)| LabelSet {
                    document_id: format!("d{i:02}"),
                    labels: pick(p).iter().map(|c| Category::new(format!("c{c}"))).collect(),
                })
                .collect()
        };
        let pred = to_sets(|p| &p.0);
        let gold = to_sets(|p| &p.1);
        let s = eval::micro_prf(&eval::count(&pred, &gold, &cats).unwrap());
        for v in [s.precision, s.recall, s.f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let perfect = eval::micro_prf(&eval::count(&gold, &gold, &cats).unwrap());
        if gold.iter().any(|g| !g.labels.is_empty()) {
            prop_assert_eq!(perfect.f, 1.0);
        }
    }
}
