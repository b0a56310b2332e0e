//! Pattern scoring and the two bootstrapping loops.
//!
//! Lexicon membership is decided by surface form: a target extracted as a
//! word and the same form extracted as a one-token phrase are the same
//! candidate, and a candidate's score is the best score among its targets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{phrase_key, Category, SeedLexicon};
use crate::error::{Error, Result};
use crate::io;
use crate::patterns::{CooccurrenceIndex, Pattern, PatternId, Target, TargetId, TargetKind};

pub const BASE_POOL_SIZE: usize = 20;
pub const WORDS_PER_ITERATION: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub form: Target,
    pub iteration_added: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<Category, Vec<LexiconEntry>>,
    members: HashMap<Vec<String>, Category>,
}

fn form_target(form: Vec<String>) -> Target {
    let kind = if form.len() == 1 {
        TargetKind::Word
    } else {
        TargetKind::Phrase
    };
    Target { kind, form }
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_seeds(seeds: &SeedLexicon) -> Self {
        let mut lex = Lexicon::new();
        for cat in seeds.categories() {
            lex.entries.entry(cat.clone()).or_default();
            for phrase in seeds.phrases(cat) {
                let key = phrase_key(phrase);
                if key.is_empty() {
                    continue;
                }
                lex.insert(
                    cat.clone(),
                    LexiconEntry {
                        form: form_target(key),
                        iteration_added: 0,
                        score: 0.0,
                    },
                );
            }
        }
        lex
    }

    /// Adds an entry unless its form is already present in any category.
    pub fn insert(&mut self, category: Category, entry: LexiconEntry) -> bool {
        if self.members.contains_key(&entry.form.form) {
            return false;
        }
        self.members
            .insert(entry.form.form.clone(), category.clone());
        self.entries.entry(category).or_default().push(entry);
        true
    }

    pub fn category_of(&self, form: &[String]) -> Option<&Category> {
        self.members.get(form)
    }

    pub fn contains(&self, form: &[String]) -> bool {
        self.members.contains_key(form)
    }

    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.entries.keys()
    }

    pub fn entries(&self, category: &Category) -> &[LexiconEntry] {
        self.entries.get(category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Category, &LexiconEntry)> {
        self.entries
            .iter()
            .flat_map(|(c, es)| es.iter().map(move |e| (c, e)))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn to_tsv(&self, header: Option<&str>) -> String {
        let mut out = String::new();
        for (cat, entries) in &self.entries {
            let mut sorted: Vec<&LexiconEntry> = entries.iter().collect();
            sorted.sort_by(|a, b| {
                a.iteration_added
                    .cmp(&b.iteration_added)
                    .then(b.score.total_cmp(&a.score))
                    .then_with(|| a.form.form.cmp(&b.form.form))
            });
            for e in sorted {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    cat,
                    e.form.text(),
                    e.iteration_added,
                    e.score
                ));
            }
        }
        io::with_header(header, out)
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (line_no, line) in io::data_lines(text) {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 && fields.len() != 4 {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    "expected `category<TAB>form[<TAB>iteration<TAB>score]`",
                ));
            }
            let form = phrase_key(fields[1]);
            if fields[0].trim().is_empty() || form.is_empty() {
                return Err(Error::parse(source_name, line_no, "empty field"));
            }
            let (iteration_added, score) = if fields.len() == 4 {
                let it = fields[2]
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::parse(source_name, line_no, format!("iteration: {e}")))?;
                let sc = fields[3]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(source_name, line_no, format!("score: {e}")))?;
                (it, sc)
            } else {
                (0, 0.0)
            };
            let category = Category::new(fields[0].trim());
            if let Some(prev) = lex.category_of(&form) {
                if *prev != category {
                    return Err(Error::SeedConflict {
                        phrase: form.join(" "),
                        first: prev.to_string(),
                        second: category.to_string(),
                    });
                }
                continue;
            }
            lex.insert(
                category,
                LexiconEntry {
                    form: form_target(form),
                    iteration_added,
                    score,
                },
            );
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_text(path)?, &io::source_name(path))
    }

    pub fn save(&self, path: &Path, header: Option<&str>) -> Result<()> {
        io::write_text(path, &self.to_tsv(header))
    }
}

// ---------------------------------------------------------------------------
// Thresholds

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_word_freq: u64,
    pub max_word_freq: u64,
    pub min_pattern_freq: u64,
    pub max_pattern_distinct_targets: usize,
}

impl Thresholds {
    pub const fn new(min_w: u64, max_w: u64, min_p: u64, max_p: usize) -> Self {
        Thresholds {
            min_word_freq: min_w,
            max_word_freq: max_w,
            min_pattern_freq: min_p,
            max_pattern_distinct_targets: max_p,
        }
    }

    /// The five published threshold combinations, numbered from 1.
    pub fn combination(n: usize) -> Option<Self> {
        COMBINATIONS.get(n.checked_sub(1)?).copied()
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_word_freq == 0
            || self.max_word_freq == 0
            || self.min_pattern_freq == 0
            || self.max_pattern_distinct_targets == 0
        {
            return Err(Error::InvalidArgument("thresholds must be positive".into()));
        }
        if self.min_word_freq > self.max_word_freq {
            return Err(Error::InvalidArgument(format!(
                "min word frequency {} exceeds max {}",
                self.min_word_freq, self.max_word_freq
            )));
        }
        Ok(())
    }
}

pub const COMBINATIONS: [Thresholds; 5] = [
    Thresholds::new(25, 2500, 250, 100),
    Thresholds::new(25, 2500, 100, 100),
    Thresholds::new(10, 2500, 250, 100),
    Thresholds::new(10, 2500, 250, 250),
    Thresholds::new(10, 5000, 250, 100),
];

// ---------------------------------------------------------------------------
// Scores from raw counts

/// `F/N · log2 F`, or negative infinity when `F = 0`.
pub fn rlogf_from_counts(f: usize, n: usize) -> f64 {
    if f == 0 || n == 0 {
        return f64::NEG_INFINITY;
    }
    (f as f64 / n as f64) * (f as f64).log2()
}

/// Mean of `log2(F + 1)` over the patterns extracting a word.
pub fn avglog_from_counts(fs: &[usize]) -> f64 {
    if fs.is_empty() {
        return 0.0;
    }
    fs.iter().map(|&f| (f as f64 + 1.0).log2()).sum::<f64>() / fs.len() as f64
}

/// One `(pair count, category extractions, pattern frequency)` term per
/// pattern extracting the word.
pub fn semprob_from_counts(word_freq: u64, terms: &[(u64, u64, u64)]) -> f64 {
    if word_freq == 0 {
        return 0.0;
    }
    terms
        .iter()
        .filter(|&&(_, _, pf)| pf > 0)
        .map(|&(pair, ext, pf)| (pair as f64 / word_freq as f64) * (ext as f64 / pf as f64))
        .sum()
}

// ---------------------------------------------------------------------------
// Scoring against an index and a lexicon

/// Per-pattern counts relative to the current lexicon, for every category.
struct Snapshot<'a> {
    index: &'a CooccurrenceIndex,
    categories: Vec<Category>,
    /// `f[p][k]`: distinct targets of `p` in category `k`.
    f: Vec<Vec<usize>>,
    /// `ext[p][k]`: extraction events of `p` whose target is in category `k`.
    ext: Vec<Vec<u64>>,
    /// Targets of `p` already in the lexicon (any category).
    known: Vec<usize>,
    target_category: Vec<Option<usize>>,
}

impl<'a> Snapshot<'a> {
    fn new(index: &'a CooccurrenceIndex, lexicon: &Lexicon, categories: &[Category]) -> Self {
        let cat_pos: HashMap<&Category, usize> =
            categories.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let target_category: Vec<Option<usize>> = index
            .targets()
            .map(|(_, t)| {
                lexicon
                    .category_of(&t.form)
                    .and_then(|c| cat_pos.get(c).copied())
            })
            .collect();
        let k = categories.len();
        let rows: Vec<(Vec<usize>, Vec<u64>, usize)> = (0..index.num_patterns())
            .into_par_iter()
            .map(|p| {
                let mut f = vec![0usize; k];
                let mut ext = vec![0u64; k];
                let mut known = 0;
                for &(t, c) in index.extractions(PatternId(p as u32)) {
                    if let Some(cat) = target_category[t.index()] {
                        f[cat] += 1;
                        ext[cat] += c;
                        known += 1;
                    }
                }
                (f, ext, known)
            })
            .collect();
        let mut f = Vec::with_capacity(rows.len());
        let mut ext = Vec::with_capacity(rows.len());
        let mut known = Vec::with_capacity(rows.len());
        for (a, b, c) in rows {
            f.push(a);
            ext.push(b);
            known.push(c);
        }
        Snapshot {
            index,
            categories: categories.to_vec(),
            f,
            ext,
            known,
            target_category,
        }
    }

    fn rlogf(&self, p: PatternId, k: usize) -> f64 {
        rlogf_from_counts(self.f[p.index()][k], self.index.distinct_targets(p))
    }

    fn depleted(&self, p: PatternId) -> bool {
        self.known[p.index()] == self.index.distinct_targets(p)
    }

    fn avglog(&self, t: TargetId, k: usize) -> f64 {
        let fs: Vec<usize> = self
            .index
            .extractors(t)
            .iter()
            .map(|&(p, _)| self.f[p.index()][k])
            .collect();
        avglog_from_counts(&fs)
    }

    fn diff(&self, t: TargetId, k: usize) -> f64 {
        let own = self.avglog(t, k);
        let best_other = (0..self.categories.len())
            .filter(|&l| l != k)
            .map(|l| self.avglog(t, l))
            .fold(None, |acc: Option<f64>, x| {
                Some(acc.map_or(x, |a| a.max(x)))
            });
        match best_other {
            Some(o) => own - o,
            None => own,
        }
    }

    fn semprob(&self, t: TargetId, k: usize) -> f64 {
        let terms: Vec<(u64, u64, u64)> = self
            .index
            .extractors(t)
            .iter()
            .map(|&(p, c)| (c, self.ext[p.index()][k], self.index.pattern_freq(p)))
            .collect();
        semprob_from_counts(self.index.target_freq(t), &terms)
    }

    fn pattern_pool(
        &self,
        k: usize,
        iteration: usize,
        thresholds: Option<&Thresholds>,
    ) -> Vec<PatternId> {
        let mut candidates: Vec<(PatternId, f64, String)> = self
            .index
            .patterns()
            .filter(|&(p, _)| self.f[p.index()][k] >= 1 && !self.depleted(p))
            .filter(|&(p, _)| match thresholds {
                Some(th) => {
                    self.index.pattern_freq(p) >= th.min_pattern_freq
                        && self.index.distinct_targets(p) <= th.max_pattern_distinct_targets
                }
                None => true,
            })
            .map(|(p, pat)| (p, self.rlogf(p, k), pat.to_string()))
            .collect();
        candidates.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| a.2.cmp(&b.2))
                .then_with(|| self.index.pattern(a.0).cmp(self.index.pattern(b.0)))
        });
        candidates.truncate(BASE_POOL_SIZE + iteration);
        candidates.into_iter().map(|(p, _, _)| p).collect()
    }
}

fn category_list(lexicon: &Lexicon, extra: &[Category]) -> Vec<Category> {
    let set: BTreeSet<Category> = lexicon
        .categories()
        .cloned()
        .chain(extra.iter().cloned())
        .collect();
    set.into_iter().collect()
}

fn category_pos(categories: &[Category], category: &Category) -> Result<usize> {
    categories
        .iter()
        .position(|c| c == category)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown category `{category}`")))
}

fn lookup_pattern(index: &CooccurrenceIndex, pattern: &Pattern) -> Result<PatternId> {
    index
        .pattern_id(pattern)
        .ok_or_else(|| Error::UnknownPattern(pattern.to_string()))
}

fn lookup_extracted_target(index: &CooccurrenceIndex, target: &Target) -> Result<TargetId> {
    let id = index
        .target_id(target)
        .ok_or_else(|| Error::UnextractedTarget(target.text()))?;
    if index.extractors(id).is_empty() {
        return Err(Error::UnextractedTarget(target.text()));
    }
    Ok(id)
}

pub fn rlogf(
    index: &CooccurrenceIndex,
    lexicon: &Lexicon,
    pattern: &Pattern,
    category: &Category,
) -> Result<f64> {
    let p = lookup_pattern(index, pattern)?;
    let cats = category_list(lexicon, std::slice::from_ref(category));
    let k = category_pos(&cats, category)?;
    Ok(Snapshot::new(index, lexicon, &cats).rlogf(p, k))
}

pub fn avglog(
    index: &CooccurrenceIndex,
    lexicon: &Lexicon,
    word: &Target,
    category: &Category,
) -> Result<f64> {
    let t = lookup_extracted_target(index, word)?;
    let cats = category_list(lexicon, std::slice::from_ref(category));
    let k = category_pos(&cats, category)?;
    Ok(Snapshot::new(index, lexicon, &cats).avglog(t, k))
}

pub fn diff_score(
    index: &CooccurrenceIndex,
    lexicon: &Lexicon,
    word: &Target,
    category: &Category,
    all_categories: &[Category],
) -> Result<f64> {
    let t = lookup_extracted_target(index, word)?;
    let mut cats: Vec<Category> = all_categories.to_vec();
    if !cats.contains(category) {
        cats.push(category.clone());
    }
    cats.sort();
    cats.dedup();
    let k = category_pos(&cats, category)?;
    Ok(Snapshot::new(index, lexicon, &cats).diff(t, k))
}

pub fn semprob(
    index: &CooccurrenceIndex,
    lexicon: &Lexicon,
    word: &Target,
    category: &Category,
) -> Result<f64> {
    let t = index
        .target_id(word)
        .ok_or_else(|| Error::ZeroFrequency(word.text()))?;
    if index.target_freq(t) == 0 {
        return Err(Error::ZeroFrequency(word.text()));
    }
    let cats = category_list(lexicon, std::slice::from_ref(category));
    let k = category_pos(&cats, category)?;
    Ok(Snapshot::new(index, lexicon, &cats).semprob(t, k))
}

pub fn select_pattern_pool(
    category: &Category,
    iteration: usize,
    index: &CooccurrenceIndex,
    lexicon: &Lexicon,
    thresholds: Option<&Thresholds>,
) -> Result<Vec<Pattern>> {
    if iteration == 0 {
        return Err(Error::InvalidArgument(
            "iterations are numbered from 1".into(),
        ));
    }
    let cats = category_list(lexicon, std::slice::from_ref(category));
    let k = category_pos(&cats, category)?;
    let snap = Snapshot::new(index, lexicon, &cats);
    Ok(snap
        .pattern_pool(k, iteration, thresholds)
        .into_iter()
        .map(|p| index.pattern(p).clone())
        .collect())
}

// ---------------------------------------------------------------------------
// Loops

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    Original,
    Modified {
        thresholds: Thresholds,
        per_category_cap: usize,
    },
}

/// What one iteration did, for inspection and reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    pub pattern_pools: BTreeMap<Category, Vec<Pattern>>,
    pub added: BTreeMap<Category, Vec<LexiconEntry>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapRun {
    pub lexicon: Lexicon,
    pub trace: Vec<IterationTrace>,
}

/// Candidate forms with their targets, in form order.
fn group_by_form(
    index: &CooccurrenceIndex,
    targets: BTreeSet<TargetId>,
) -> BTreeMap<Vec<String>, Vec<TargetId>> {
    let mut by_form: BTreeMap<Vec<String>, Vec<TargetId>> = BTreeMap::new();
    for t in targets {
        by_form
            .entry(index.target(t).form.clone())
            .or_default()
            .push(t);
    }
    by_form
}

fn best_of(ids: &[TargetId], score: impl Fn(TargetId) -> f64) -> (f64, TargetId) {
    let mut best = (score(ids[0]), ids[0]);
    for &t in &ids[1..] {
        let s = score(t);
        if s > best.0 {
            best = (s, t);
        }
    }
    best
}

fn admit(
    lexicon: &mut Lexicon,
    index: &CooccurrenceIndex,
    categories: &[Category],
    assigned: Vec<Vec<(f64, Vec<String>, TargetId)>>,
    cap: usize,
    iteration: usize,
) -> BTreeMap<Category, Vec<LexiconEntry>> {
    let mut added = BTreeMap::new();
    for (k, mut list) in assigned.into_iter().enumerate() {
        list.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        list.truncate(cap);
        let mut entries = Vec::new();
        for (score, _, t) in list {
            let entry = LexiconEntry {
                form: index.target(t).clone(),
                iteration_added: iteration,
                score,
            };
            if lexicon.insert(categories[k].clone(), entry.clone()) {
                entries.push(entry);
            }
        }
        added.insert(categories[k].clone(), entries);
    }
    added
}

fn iterate_original(
    lexicon: &mut Lexicon,
    index: &CooccurrenceIndex,
    categories: &[Category],
    iteration: usize,
) -> IterationTrace {
    let snap = Snapshot::new(index, lexicon, categories);
    let k_count = categories.len();
    let pools: Vec<Vec<PatternId>> = (0..k_count)
        .map(|k| snap.pattern_pool(k, iteration, None))
        .collect();
    // word pools: per category, candidate targets
    let word_pools: Vec<BTreeSet<TargetId>> = pools
        .iter()
        .map(|pool| {
            pool.iter()
                .flat_map(|&p| index.extractions(p).iter().map(|&(t, _)| t))
                .filter(|&t| {
                    snap.target_category[t.index()].is_none()
                        && !lexicon.contains(&index.target(t).form)
                })
                .collect()
        })
        .collect();
    let all: BTreeSet<TargetId> = word_pools.iter().flatten().copied().collect();
    let by_form: Vec<(Vec<String>, Vec<TargetId>)> =
        group_by_form(index, all).into_iter().collect();

    // (category index, score, form, representative target)
    type Resolved = (usize, f64, Vec<String>, TargetId);
    let resolved: Vec<Option<Resolved>> = by_form
        .par_iter()
        .map(|(form, ids)| {
            let mut best: Option<(usize, f64, TargetId)> = None;
            for (k, pool) in word_pools.iter().enumerate() {
                let in_pool: Vec<TargetId> =
                    ids.iter().copied().filter(|t| pool.contains(t)).collect();
                if in_pool.is_empty() {
                    continue;
                }
                let (s, t) = best_of(&in_pool, |t| snap.diff(t, k));
                if best.is_none_or(|(_, bs, _)| s > bs) {
                    best = Some((k, s, t));
                }
            }
            best.map(|(k, s, t)| (k, s, form.clone(), t))
        })
        .collect();

    let mut assigned = vec![Vec::new(); k_count];
    for (k, s, form, t) in resolved.into_iter().flatten() {
        assigned[k].push((s, form, t));
    }
    let pattern_pools = pools_to_map(index, categories, &pools);
    let added = admit(
        lexicon,
        index,
        categories,
        assigned,
        WORDS_PER_ITERATION,
        iteration,
    );
    IterationTrace {
        iteration,
        pattern_pools,
        added,
    }
}

fn iterate_modified(
    lexicon: &mut Lexicon,
    index: &CooccurrenceIndex,
    categories: &[Category],
    iteration: usize,
    thresholds: &Thresholds,
    cap: usize,
) -> IterationTrace {
    let snap = Snapshot::new(index, lexicon, categories);
    let k_count = categories.len();
    let pools: Vec<Vec<PatternId>> = (0..k_count)
        .map(|k| snap.pattern_pool(k, iteration, Some(thresholds)))
        .collect();
    let common: BTreeSet<TargetId> = pools
        .iter()
        .flatten()
        .flat_map(|&p| index.extractions(p).iter().map(|&(t, _)| t))
        .filter(|&t| !lexicon.contains(&index.target(t).form))
        .filter(|&t| {
            let f = index.target_freq(t);
            thresholds.min_word_freq <= f && f <= thresholds.max_word_freq
        })
        .collect();
    let by_form: Vec<(Vec<String>, Vec<TargetId>)> =
        group_by_form(index, common).into_iter().collect();

    let resolved: Vec<(usize, f64, Vec<String>, TargetId)> = by_form
        .par_iter()
        .map(|(form, ids)| {
            let mut best: Option<(usize, f64, TargetId)> = None;
            for k in 0..k_count {
                let (s, t) = best_of(ids, |t| snap.semprob(t, k));
                if best.is_none_or(|(_, bs, _)| s > bs) {
                    best = Some((k, s, t));
                }
            }
            let (k, s, t) = best.expect("at least one category");
            (k, s, form.clone(), t)
        })
        .collect();

    let mut assigned = vec![Vec::new(); k_count];
    for (k, s, form, t) in resolved {
        assigned[k].push((s, form, t));
    }
    let pattern_pools = pools_to_map(index, categories, &pools);
    let added = admit(lexicon, index, categories, assigned, cap, iteration);
    IterationTrace {
        iteration,
        pattern_pools,
        added,
    }
}

fn pools_to_map(
    index: &CooccurrenceIndex,
    categories: &[Category],
    pools: &[Vec<PatternId>],
) -> BTreeMap<Category, Vec<Pattern>> {
    categories
        .iter()
        .zip(pools)
        .map(|(c, pool)| {
            (
                c.clone(),
                pool.iter().map(|&p| index.pattern(p).clone()).collect(),
            )
        })
        .collect()
}

pub fn run(
    seeds: &SeedLexicon,
    index: &CooccurrenceIndex,
    iterations: usize,
    mode: Mode,
) -> Result<BootstrapRun> {
    let mut lexicon = Lexicon::from_seeds(seeds);
    let categories = category_list(&lexicon, &[]);
    if let Mode::Modified { thresholds, .. } = mode {
        thresholds.validate()?;
    }
    let mut trace = Vec::with_capacity(iterations);
    if categories.is_empty() {
        return Ok(BootstrapRun { lexicon, trace });
    }
    for i in 1..=iterations {
        let step = match mode {
            Mode::Original => iterate_original(&mut lexicon, index, &categories, i),
            Mode::Modified {
                thresholds,
                per_category_cap,
            } => iterate_modified(
                &mut lexicon,
                index,
                &categories,
                i,
                &thresholds,
                per_category_cap,
            ),
        };
        trace.push(step);
    }
    Ok(BootstrapRun { lexicon, trace })
}

pub fn bootstrap_original(
    seeds: &SeedLexicon,
    index: &CooccurrenceIndex,
    iterations: usize,
) -> Result<Lexicon> {
    Ok(run(seeds, index, iterations, Mode::Original)?.lexicon)
}

pub fn bootstrap_modified(
    seeds: &SeedLexicon,
    index: &CooccurrenceIndex,
    iterations: usize,
    thresholds: Thresholds,
    per_category_cap: usize,
) -> Result<Lexicon> {
    Ok(run(
        seeds,
        index,
        iterations,
        Mode::Modified {
            thresholds,
            per_category_cap,
        },
    )?
    .lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Sentence};
    use crate::patterns::{chunk_phrases, Direction, PatternConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rlogf_counts() {
        assert_eq!(rlogf_from_counts(1, 1), 0.0);
        assert_abs_diff_eq!(rlogf_from_counts(4, 8), 1.0, epsilon = 1e-12);
        assert_eq!(rlogf_from_counts(0, 3), f64::NEG_INFINITY);
    }

    #[test]
    fn avglog_counts() {
        assert_abs_diff_eq!(avglog_from_counts(&[5, 5, 5]), 6f64.log2(), epsilon = 1e-12);
        assert_eq!(avglog_from_counts(&[0]), 0.0);
        assert_eq!(avglog_from_counts(&[1]), 1.0);
    }

    #[test]
    fn semprob_counts() {
        let v = semprob_from_counts(100, &[(10, 5, 100), (20, 5, 500), (70, 5, 1000)]);
        assert_abs_diff_eq!(v, 0.0105, epsilon = 1e-12);
        assert_eq!(semprob_from_counts(10, &[]), 0.0);
        assert_eq!(semprob_from_counts(4, &[(4, 9, 9)]), 1.0);
    }

    #[test]
    fn thresholds_presets() {
        assert_eq!(
            Thresholds::combination(3),
            Some(Thresholds::new(10, 2500, 250, 100))
        );
        assert_eq!(Thresholds::combination(0), None);
        assert!(Thresholds::new(30, 20, 1, 1).validate().is_err());
    }

    fn doc(id: &str, tagged: &[&str]) -> Document {
        Document {
            id: id.into(),
            raw_text: String::new(),
            sentences: tagged
                .iter()
                .map(|s| {
                    let s = Sentence::from_tagged(s);
                    Sentence {
                        phrases: chunk_phrases(&s),
                        ..s
                    }
                })
                .collect(),
            labels: None,
        }
    }

    fn toy() -> (CooccurrenceIndex, SeedLexicon) {
        let docs = vec![
            doc("1", &["saw/VBD heavy/JJ fog/NN near/IN runway/NN"]),
            doc("2", &["saw/VBD heavy/JJ rain/NN near/IN runway/NN"]),
            doc("3", &["saw/VBD heavy/JJ snow/NN near/IN ramp/NN"]),
            doc("4", &["was/VBD very/RB tired/JJ after/IN duty/NN"]),
            doc("5", &["was/VBD very/RB sleepy/JJ after/IN duty/NN"]),
        ];
        let cfg = PatternConfig {
            word_ngrams: true,
            phrase_ngrams: false,
            syntactic: false,
            n: 2,
        };
        let idx = CooccurrenceIndex::build(&docs, &cfg, &[]).unwrap();
        let seeds = SeedLexicon::parse("Weather\tfog\nFatigue\ttired\n", "seeds").unwrap();
        (idx, seeds)
    }

    #[test]
    fn scorers_on_toy_index() {
        let (idx, seeds) = toy();
        let lex = Lexicon::from_seeds(&seeds);
        let weather = Category::new("Weather");
        let p = Pattern::ngram(Direction::Left, &["saw", "heavy"], TargetKind::Word);
        // extracts fog, rain, snow; one is a Weather seed
        assert_abs_diff_eq!(
            rlogf(&idx, &lex, &p, &weather).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let sp = semprob(&idx, &lex, &Target::word("rain"), &weather).unwrap();
        // rain occurs once; `saw heavy <X>` has 1 fog event of 3, `<X> near runway` 1 of 2
        assert_abs_diff_eq!(sp, 1.0 / 3.0 + 1.0 / 2.0, epsilon = 1e-12);
        let unknown = Pattern::ngram(Direction::Left, &["nope", "nope"], TargetKind::Word);
        assert!(matches!(
            rlogf(&idx, &lex, &unknown, &weather),
            Err(Error::UnknownPattern(_))
        ));
        assert!(avglog(&idx, &lex, &Target::word("zzz"), &weather).is_err());
        assert!(semprob(&idx, &lex, &Target::word("zzz"), &weather).is_err());
        let fatigue = Category::new("Fatigue");
        let d = diff_score(
            &idx,
            &lex,
            &Target::word("rain"),
            &weather,
            &[weather.clone(), fatigue],
        )
        .unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn original_learns_on_toy() {
        let (idx, seeds) = toy();
        assert_eq!(
            bootstrap_original(&seeds, &idx, 0).unwrap(),
            Lexicon::from_seeds(&seeds)
        );
        let lex = bootstrap_original(&seeds, &idx, 1).unwrap();
        let weather = Category::new("Weather");
        assert_eq!(lex.category_of(&["rain".to_string()]), Some(&weather));
        assert_eq!(
            lex.category_of(&["sleepy".to_string()]),
            Some(&Category::new("Fatigue"))
        );
        for (_, e) in lex.iter() {
            assert!(e.iteration_added <= 1);
        }
    }

    #[test]
    fn modified_respects_word_frequency_floor() {
        let (idx, seeds) = toy();
        let lex = bootstrap_modified(&seeds, &idx, 2, Thresholds::new(2, 100, 1, 100), 5).unwrap();
        // every candidate word occurs once except runway and duty
        for (_, e) in lex.iter().filter(|(_, e)| e.iteration_added > 0) {
            assert!(
                ["runway", "duty"].contains(&e.form.text().as_str()),
                "{}",
                e.form
            );
        }
    }

    #[test]
    fn lexicon_tsv_round_trip() {
        let (idx, seeds) = toy();
        let lex = bootstrap_original(&seeds, &idx, 2).unwrap();
        let text = lex.to_tsv(Some("# h"));
        let back = Lexicon::parse(&text, "lex").unwrap();
        assert_eq!(back.len(), lex.len());
        assert_eq!(back.to_tsv(None), lex.to_tsv(None));
        assert!(Lexicon::parse("A\tfog\nB\tfog\n", "x").is_err());
    }
}
