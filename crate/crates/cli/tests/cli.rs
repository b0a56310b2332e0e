use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_shaper");

fn shaper(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = shaper(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    shaper(dir, args).status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    let reports = [
        (
            "THE CREW REPORTED FATIGUE AFTER A LONG DUTY DAY.",
            r#"["Duty Cycle"]"#,
        ),
        (
            "DENSE FOG OVER THE RWY REDUCED VISIBILITY.",
            r#"["Physical Environment"]"#,
        ),
        (
            "FOG AND CREW FATIGUE DELAYED THE FLT.",
            r#"["Duty Cycle","Physical Environment"]"#,
        ),
        ("ROUTINE FLT WITH NO ISSUES.", "[]"),
        (
            "THE CREW REPORTED FOG OVER THE FIELD.",
            r#"["Physical Environment"]"#,
        ),
        (
            "THE CREW REPORTED HAZE OVER THE FIELD.",
            r#"["Physical Environment"]"#,
        ),
    ];
    let mut corpus = String::new();
    for i in 0..40 {
        let (text, labels) = reports[i % reports.len()];
        corpus.push_str(&format!(
            "{{\"id\":\"r{i:03}\",\"text\":\"{text}\",\"labels\":{labels}}}\n"
        ));
    }
    fs::write(dir.path().join("raw.jsonl"), corpus).unwrap();
    fs::write(dir.path().join("abbr.tsv"), "RWY\trunway\nFLT\tflight\n").unwrap();
    fs::write(
        dir.path().join("dict.txt"),
        "haze\nfield\nthe\ncrew\nreported\nfatigue\nafter\na\nlong\nduty\nday\ndense\nfog\nover\nreduced\nvisibility\nand\ndelayed\nroutine\nwith\nno\nissues\n",
    )
    .unwrap();
    dir
}

fn pipeline(d: &Path) {
    ok(
        d,
        &[
            "preprocess",
            "--input",
            "raw.jsonl",
            "--output",
            "pre.jsonl",
            "--abbreviations",
            "abbr.tsv",
            "--dictionary",
            "dict.txt",
        ],
    );
    ok(
        d,
        &["index", "--corpus", "pre.jsonl", "--output", "idx.json"],
    );
    ok(
        d,
        &[
            "bootstrap",
            "--index",
            "idx.json",
            "--output",
            "lex.tsv",
            "--iterations",
            "3",
            "--min-w",
            "1",
            "--min-p",
            "1",
            "--trace",
            "trace.tsv",
        ],
    );
    ok(
        d,
        &[
            "label",
            "--corpus",
            "pre.jsonl",
            "--output",
            "lab.tsv",
            "--lexicon",
            "lex.tsv",
        ],
    );
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = workspace();
    let d = dir.path();
    pipeline(d);
    let pre = read(d, "pre.jsonl");
    assert!(pre.starts_with("# shaper "));
    assert!(pre.contains("runway"), "abbreviation expanded");
    assert!(pre.contains("\"fog\""), "case restored");
    let lexicon = read(d, "lex.tsv");
    assert!(lexicon.contains("Physical Environment\tfog\t0\t"));
    assert!(
        lexicon.contains("Physical Environment\thaze\t1\t"),
        "learned"
    );
    let report = ok(
        d,
        &[
            "evaluate",
            "--predictions",
            "lab.tsv",
            "--gold",
            "pre.jsonl",
        ],
    );
    assert!(report.lines().any(|l| l.starts_with("Overall\t")));
}

#[test]
fn reruns_are_byte_identical() {
    let a = workspace();
    let b = workspace();
    pipeline(a.path());
    pipeline(b.path());
    for f in ["pre.jsonl", "idx.json", "lex.tsv", "trace.tsv", "lab.tsv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn gold_equal_predictions_score_100() {
    let dir = workspace();
    let d = dir.path();
    fs::write(
        d.join("gold.tsv"),
        "r1\tDuty Cycle\nr2\tPhysical Environment\tDuty Cycle\nr3\n",
    )
    .unwrap();
    let report = ok(
        d,
        &[
            "evaluate",
            "--predictions",
            "gold.tsv",
            "--gold",
            "gold.tsv",
        ],
    );
    let overall = report.lines().find(|l| l.starts_with("Overall\t")).unwrap();
    assert!(overall.ends_with("\t100.00\t100.00\t100.00"), "{overall}");
}

#[test]
fn classifier_commands_round_trip() {
    let dir = workspace();
    let d = dir.path();
    pipeline(d);
    ok(
        d,
        &[
            "train",
            "--train",
            "pre.jsonl",
            "--output",
            "m.json",
            "--seed",
            "3",
        ],
    );
    ok(
        d,
        &[
            "predict",
            "--model",
            "m.json",
            "--corpus",
            "pre.jsonl",
            "--output",
            "pred.tsv",
        ],
    );
    let report = ok(
        d,
        &[
            "evaluate",
            "--predictions",
            "pred.tsv",
            "--gold",
            "pre.jsonl",
        ],
    );
    let overall = report.lines().find(|l| l.starts_with("Overall\t")).unwrap();
    assert!(overall.ends_with("\t100.00\t100.00\t100.00"), "{overall}");

    ok(
        d,
        &[
            "tune",
            "--train",
            "pre.jsonl",
            "--dev",
            "pre.jsonl",
            "--output",
            "tune.tsv",
            "--best",
            "best.toml",
            "--scheme",
            "ova",
            "--thetas",
            "-1,0",
            "--percents",
            "50,100",
        ],
    );
    assert_eq!(
        read(d, "tune.tsv")
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        5
    );
    ok(
        d,
        &[
            "train",
            "--train",
            "pre.jsonl",
            "--output",
            "m2.json",
            "--config",
            "best.toml",
        ],
    );

    ok(
        d,
        &[
            "cv",
            "--pool",
            "pre.jsonl",
            "--output",
            "cv.tsv",
            "--metrics",
            "cvm.tsv",
            "--folds",
            "4",
            "--scheme",
            "prunedsets",
            "--p",
            "2",
        ],
    );
    assert_eq!(
        read(d, "cv.tsv")
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        40
    );
}

#[test]
fn significance_reports_both_tests() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("gold.tsv"), "r1\tA\nr2\tB\nr3\tA\tB\nr4\n").unwrap();
    fs::write(d.join("sys1.tsv"), "r1\tA\nr2\tB\nr3\tA\nr4\n").unwrap();
    let same = ok(
        d,
        &[
            "significance",
            "--a",
            "sys1.tsv",
            "--b",
            "sys1.tsv",
            "--gold",
            "gold.tsv",
            "--test",
            "ar",
            "--shuffles",
            "9999",
        ],
    );
    let row = same.lines().last().unwrap();
    assert!(row.contains("\tar\t"), "{row}");
    assert!(row.contains("\t1.000000\t"), "{row}");
    let both = ok(
        d,
        &[
            "significance",
            "--a",
            "sys1.tsv",
            "--b",
            "gold.tsv",
            "--gold",
            "gold.tsv",
            "--shuffles",
            "99",
        ],
    );
    assert_eq!(both.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn combination_flags_match_config() {
    let dir = workspace();
    let d = dir.path();
    pipeline(d);
    fs::write(
        d.join("c3.toml"),
        "min_w = 10\nmax_w = 2500\nmin_p = 250\nmax_p = 100\n",
    )
    .unwrap();
    let a = ["bootstrap", "--index", "idx.json", "--iterations", "2"];
    ok(
        d,
        &[&a[..], &["--output", "x.tsv", "--combination", "3"]].concat(),
    );
    ok(
        d,
        &[&a[..], &["--output", "y.tsv", "--config", "c3.toml"]].concat(),
    );
    ok(
        d,
        &[
            &a[..],
            &[
                "--output", "z.tsv", "--min-w", "10", "--max-w", "2500", "--min-p", "250",
                "--max-p", "100",
            ],
        ]
        .concat(),
    );
    let x = read(d, "x.tsv");
    assert_eq!(x, read(d, "y.tsv"));
    assert_eq!(x, read(d, "z.tsv"));
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let d = dir.path();
    assert_eq!(code(d, &["--version"]), 0);
    assert_eq!(code(d, &["index", "--bogus"]), 1);
    fs::write(d.join("bad.toml"), "bogus = 1\n").unwrap();
    assert_eq!(
        code(
            d,
            &[
                "label",
                "--corpus",
                "raw.jsonl",
                "--output",
                "o",
                "--config",
                "bad.toml"
            ]
        ),
        1
    );
    assert_eq!(
        code(
            d,
            &[
                "bootstrap",
                "--index",
                "i",
                "--output",
                "o",
                "--combination",
                "9"
            ]
        ),
        1
    );
    let missing: PathBuf = d.join("missing.jsonl");
    assert_eq!(
        code(
            d,
            &[
                "index",
                "--corpus",
                missing.to_str().unwrap(),
                "--output",
                "o"
            ]
        ),
        2
    );
}
