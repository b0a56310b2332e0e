//! Micro-averaged scores, significance tests and set-valued agreement.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Category;
use crate::error::{Error, Result};
use crate::io;
use crate::labeler::LabelSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CategoryCounts {
    /// Gold positives.
    pub n: u64,
    /// Predicted positives.
    pub p: u64,
    pub tp: u64,
}

impl CategoryCounts {
    pub fn fp(&self) -> u64 {
        self.p - self.tp
    }

    pub fn fn_(&self) -> u64 {
        self.n - self.tp
    }

    fn add(&mut self, other: &CategoryCounts) {
        self.n += other.n;
        self.p += other.p;
        self.tp += other.tp;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub docs: u64,
    pub per_category: BTreeMap<Category, CategoryCounts>,
}

impl EvalCounts {
    pub fn totals(&self) -> CategoryCounts {
        let mut t = CategoryCounts::default();
        for c in self.per_category.values() {
            t.add(c);
        }
        t
    }

    pub fn tn(&self, c: &CategoryCounts) -> u64 {
        self.docs - c.n - c.fp()
    }

    pub fn merge(&mut self, other: &EvalCounts) {
        self.docs += other.docs;
        for (cat, c) in &other.per_category {
            self.per_category.entry(cat.clone()).or_default().add(c);
        }
    }
}

fn check_ids(predictions: &[LabelSet], gold: &[LabelSet]) -> Result<()> {
    let a: BTreeSet<&str> = predictions.iter().map(|l| l.document_id.as_str()).collect();
    let b: BTreeSet<&str> = gold.iter().map(|l| l.document_id.as_str()).collect();
    if a.len() != predictions.len() {
        return Err(Error::IdMismatch("duplicate id in predictions".into()));
    }
    if a != b {
        let missing: Vec<&str> = a.symmetric_difference(&b).take(5).copied().collect();
        return Err(Error::IdMismatch(missing.join(", ")));
    }
    Ok(())
}

/// Pairs predictions with gold by document id, in id order.
fn align<'a>(
    predictions: &'a [LabelSet],
    gold: &'a [LabelSet],
) -> Result<Vec<(&'a LabelSet, &'a LabelSet)>> {
    check_ids(predictions, gold)?;
    let by_id: BTreeMap<&str, &LabelSet> =
        gold.iter().map(|g| (g.document_id.as_str(), g)).collect();
    let mut out: Vec<(&LabelSet, &LabelSet)> = predictions
        .iter()
        .map(|p| (p, by_id[p.document_id.as_str()]))
        .collect();
    out.sort_by(|a, b| a.0.document_id.cmp(&b.0.document_id));
    Ok(out)
}

fn doc_counts(
    pred: &BTreeSet<Category>,
    gold: &BTreeSet<Category>,
    cat: &Category,
) -> CategoryCounts {
    let p = pred.contains(cat);
    let g = gold.contains(cat);
    CategoryCounts {
        n: g as u64,
        p: p as u64,
        tp: (p && g) as u64,
    }
}

/// Per-category tallies over the given categories; labels outside the list
/// are ignored.
pub fn count(
    predictions: &[LabelSet],
    gold: &[LabelSet],
    categories: &[Category],
) -> Result<EvalCounts> {
    let pairs = align(predictions, gold)?;
    let mut counts = EvalCounts {
        docs: pairs.len() as u64,
        per_category: categories
            .iter()
            .map(|c| (c.clone(), CategoryCounts::default()))
            .collect(),
    };
    for (p, g) in pairs {
        for (cat, c) in counts.per_category.iter_mut() {
            c.add(&doc_counts(&p.labels, &g.labels, cat));
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn prf(c: &CategoryCounts) -> Prf {
    let precision = ratio(c.tp, c.p);
    let recall = ratio(c.tp, c.n);
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f,
    }
}

pub fn micro_prf(counts: &EvalCounts) -> Prf {
    prf(&counts.totals())
}

/// Metrics report: `category TP FN TN FP P R F` with percentages, then `Overall`.
pub fn metrics_tsv(counts: &EvalCounts, header: Option<&str>) -> String {
    let mut out = String::from("category\tTP\tFN\tTN\tFP\tP\tR\tF\n");
    let row = |name: &str, c: &CategoryCounts, tn: u64| {
        let s = prf(c);
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\n",
            name,
            c.tp,
            c.fn_(),
            tn,
            c.fp(),
            100.0 * s.precision,
            100.0 * s.recall,
            100.0 * s.f
        )
    };
    let mut tn_total = 0;
    for (cat, c) in &counts.per_category {
        let tn = counts.tn(c);
        tn_total += tn;
        out.push_str(&row(cat.as_str(), c, tn));
    }
    out.push_str(&row("Overall", &counts.totals(), tn_total));
    io::with_header(header, out)
}

// ---------------------------------------------------------------------------
// McNemar

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_1_tail(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    libm::erfc((x / 2.0).sqrt())
}

/// Continuity-corrected test from the two discordant counts.
pub fn mcnemar_counts(b: u64, c: u64) -> TestResult {
    if b + c == 0 {
        return TestResult {
            statistic: 0.0,
            p: 1.0,
        };
    }
    let d = (b as f64 - c as f64).abs() - 1.0;
    let statistic = d.max(0.0).powi(2) / (b + c) as f64;
    TestResult {
        statistic,
        p: chi2_1_tail(statistic),
    }
}

/// Correctness indicators of two systems over the same decision units.
pub fn mcnemar(a: &[bool], b: &[bool]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let only_a = a.iter().zip(b).filter(|(x, y)| **x && !**y).count() as u64;
    let only_b = a.iter().zip(b).filter(|(x, y)| !**x && **y).count() as u64;
    Ok(mcnemar_counts(only_a, only_b))
}

/// One correctness flag per (document, category), documents in id order.
pub fn decision_correctness(
    predictions: &[LabelSet],
    gold: &[LabelSet],
    categories: &[Category],
) -> Result<Vec<bool>> {
    let pairs = align(predictions, gold)?;
    let mut out = Vec::with_capacity(pairs.len() * categories.len());
    for (p, g) in pairs {
        for cat in categories {
            out.push(p.labels.contains(cat) == g.labels.contains(cat));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Approximate randomization

#[derive(Debug, Clone, Copy)]
struct DocTally {
    tp_a: u64,
    p_a: u64,
    tp_b: u64,
    p_b: u64,
    n: u64,
}

fn f_from_totals(tp: u64, p: u64, n: u64) -> f64 {
    if p + n == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (p + n) as f64
    }
}

fn stat_for(tallies: &[DocTally], swap: impl Fn(usize) -> bool) -> f64 {
    let (mut tp_a, mut p_a, mut tp_b, mut p_b, mut n) = (0, 0, 0, 0, 0);
    for (i, d) in tallies.iter().enumerate() {
        let (ta, pa, tb, pb) = if swap(i) {
            (d.tp_b, d.p_b, d.tp_a, d.p_a)
        } else {
            (d.tp_a, d.p_a, d.tp_b, d.p_b)
        };
        tp_a += ta;
        p_a += pa;
        tp_b += tb;
        p_b += pb;
        n += d.n;
    }
    (f_from_totals(tp_a, p_a, n) - f_from_totals(tp_b, p_b, n)).abs()
}

const TIE_EPS: f64 = 1e-12;

/// Swaps whole per-document label sets between the systems with probability
/// one half; p = (1 + #{shuffled ≥ observed}) / (shuffles + 1).
pub fn approx_randomization(
    a: &[LabelSet],
    b: &[LabelSet],
    gold: &[LabelSet],
    categories: &[Category],
    shuffles: usize,
    seed: u64,
) -> Result<f64> {
    if shuffles == 0 {
        return Err(Error::InvalidArgument("shuffles must be >= 1".into()));
    }
    let pa = align(a, gold)?;
    let pb = align(b, gold)?;
    let tallies: Vec<DocTally> = pa
        .iter()
        .zip(&pb)
        .map(|((sa, g), (sb, _))| {
            let mut t = DocTally {
                tp_a: 0,
                p_a: 0,
                tp_b: 0,
                p_b: 0,
                n: 0,
            };
            for cat in categories {
                let ca = doc_counts(&sa.labels, &g.labels, cat);
                let cb = doc_counts(&sb.labels, &g.labels, cat);
                t.tp_a += ca.tp;
                t.p_a += ca.p;
                t.tp_b += cb.tp;
                t.p_b += cb.p;
                t.n += ca.n;
            }
            t
        })
        .collect();
    let observed = stat_for(&tallies, |_| false);
    let hits: usize = (0..shuffles)
        .into_par_iter()
        .filter(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mask: Vec<bool> = (0..tallies.len()).map(|_| rng.random_bool(0.5)).collect();
            stat_for(&tallies, |i| mask[i]) >= observed - TIE_EPS
        })
        .count();
    Ok((1 + hits) as f64 / (shuffles + 1) as f64)
}

/// Significance report line.
pub fn significance_row(system_a: &str, system_b: &str, test: &str, r: &TestResult) -> String {
    let stat = if r.statistic.is_nan() {
        "NA".to_string()
    } else {
        format!("{:.6}", r.statistic)
    };
    format!(
        "{}\t{}\t{}\t{}\t{:.6}\t{}\n",
        system_a,
        system_b,
        test,
        stat,
        r.p,
        r.p < 0.05
    )
}

pub const SIGNIFICANCE_HEADER: &str = "systemA\tsystemB\ttest\tstatistic\tp\tsignificant@0.05\n";

// ---------------------------------------------------------------------------
// Agreement

/// `1 − J·M`, with M = 1, 2/3, 1/3, 0 for equal, nested, overlapping and
/// disjoint sets.
pub fn masi_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a == b {
        return 0.0;
    }
    let inter = a.intersection(b).count() as u64;
    let union = a.union(b).count() as u64;
    // M as num/den so the result is one correctly rounded division
    let (num, den) = if a.is_subset(b) || b.is_subset(a) {
        (2, 3)
    } else if inter > 0 {
        (1, 3)
    } else {
        (0, 1)
    };
    (union * den - inter * num) as f64 / (union * den) as f64
}

/// Two-annotator α with MASI distance. Expected disagreement averages the
/// distance over all ordered pairs of distinct positions among the pooled
/// 2N values.
pub fn krippendorff_alpha<T: Ord>(pairs: &[(BTreeSet<T>, BTreeSet<T>)]) -> Result<f64> {
    krippendorff_alpha_with(pairs, masi_distance)
}

pub fn krippendorff_alpha_with<T, D>(pairs: &[(T, T)], distance: D) -> Result<f64>
where
    D: Fn(&T, &T) -> f64,
{
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(
            "alpha needs at least 2 items".into(),
        ));
    }
    let n = pairs.len() as f64;
    let d_o = pairs.iter().map(|(a, b)| distance(a, b)).sum::<f64>() / n;
    let pooled: Vec<&T> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    let m = pooled.len();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                total += distance(pooled[i], pooled[j]);
            }
        }
    }
    let d_e = total / (m * (m - 1)) as f64;
    if d_e == 0.0 {
        return if d_o == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::InvalidArgument(
                "expected disagreement is zero".into(),
            ))
        };
    }
    Ok(1.0 - d_o / d_e)
}
