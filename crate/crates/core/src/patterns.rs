//! N-gram extraction patterns and the co-occurrence index.
//!
//! Every noun or adjective `X` gets two patterns, the `n` tokens before it
//! (`line of <X>`) and the `n` tokens after it (`<X> was detected`), when the
//! sentence has room for them. Noun and adjective phrases get the same
//! treatment after leading articles and possessives are stripped; the left
//! context is then taken from before the stripped determiner. Word-kind and
//! phrase-kind patterns live in separate spaces even when their contexts
//! coincide.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, PhraseKind, PhraseSpan, Sentence, TaggedToken};
use crate::error::{Error, Result};
use crate::io;

pub const DEFAULT_CONTEXT_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Word,
    Phrase,
}

impl TargetKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "word" => Some(TargetKind::Word),
            "phrase" => Some(TargetKind::Phrase),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternOrigin {
    Ngram,
    Syntactic,
}

/// A context with one extraction slot.
///
/// Imported syntactic patterns keep their raw pattern string as the single
/// context element; their direction is always `Left`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub target_kind: TargetKind,
    pub origin: PatternOrigin,
    pub direction: Direction,
    pub context: Vec<String>,
}

impl Pattern {
    pub fn ngram(direction: Direction, context: &[&str], target_kind: TargetKind) -> Self {
        Pattern {
            target_kind,
            origin: PatternOrigin::Ngram,
            direction,
            context: context.iter().map(|s| s.to_lowercase()).collect(),
        }
    }

    pub fn syntactic(pattern: &str, target_kind: TargetKind) -> Self {
        Pattern {
            target_kind,
            origin: PatternOrigin::Syntactic,
            direction: Direction::Left,
            context: vec![pattern.to_string()],
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ctx = self.context.join(" ");
        match (self.origin, self.direction) {
            (PatternOrigin::Syntactic, _) => f.write_str(&ctx),
            (PatternOrigin::Ngram, Direction::Left) => write!(f, "{ctx} <X>"),
            (PatternOrigin::Ngram, Direction::Right) => write!(f, "<X> {ctx}"),
        }
    }
}

/// A lowercased word or phrase that patterns extract.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Target {
    pub kind: TargetKind,
    pub form: Vec<String>,
}

impl Target {
    pub fn word(w: &str) -> Self {
        Target {
            kind: TargetKind::Word,
            form: vec![w.to_lowercase()],
        }
    }

    pub fn phrase(p: &str) -> Self {
        Target {
            kind: TargetKind::Phrase,
            form: p.split_whitespace().map(str::to_lowercase).collect(),
        }
    }

    pub fn text(&self) -> String {
        self.form.join(" ")
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

// ---------------------------------------------------------------------------
// Chunking

const ARTICLES: &[&str] = &["a", "an", "the"];
const POSSESSIVES: &[&str] = &["my", "his", "her", "its", "our", "their", "your"];

fn is_determiner(tok: &TaggedToken) -> bool {
    let lower = tok.surface.to_lowercase();
    ARTICLES.contains(&lower.as_str()) || POSSESSIVES.contains(&lower.as_str()) || tok.pos == "PRP$"
}

fn is_modifier(tok: &TaggedToken) -> bool {
    tok.is_adjective() || tok.pos == "CD"
}

/// Fallback chunker. Noun phrases are maximal runs of adjectives, numbers
/// and nouns that end in a noun; adjective runs not followed by a noun are
/// adjective phrases. Determiners never enter a span.
pub fn chunk_phrases(sentence: &Sentence) -> Vec<PhraseSpan> {
    let toks = &sentence.tokens;
    let mut spans = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if !(is_modifier(&toks[i]) || toks[i].is_noun()) {
            i += 1;
            continue;
        }
        let start = i;
        while i < toks.len() && (is_modifier(&toks[i]) || toks[i].is_noun()) {
            i += 1;
        }
        let run = start..i;
        match run.clone().rev().find(|&k| toks[k].is_noun()) {
            Some(last_noun) => {
                spans.push(PhraseSpan {
                    start,
                    end: last_noun + 1,
                    kind: PhraseKind::Noun,
                });
                if let Some(adj) = adjective_span(toks, last_noun + 1, run.end) {
                    spans.push(adj);
                }
            }
            None => spans.extend(adjective_span(toks, start, run.end)),
        }
    }
    spans
}

fn adjective_span(toks: &[TaggedToken], from: usize, to: usize) -> Option<PhraseSpan> {
    let first = (from..to).find(|&k| toks[k].is_adjective())?;
    let last = (from..to).rev().find(|&k| toks[k].is_adjective())?;
    Some(PhraseSpan {
        start: first,
        end: last + 1,
        kind: PhraseKind::Adjective,
    })
}

// ---------------------------------------------------------------------------
// Extraction

fn lower_slice(toks: &[TaggedToken]) -> Vec<String> {
    toks.iter().map(|t| t.surface.to_lowercase()).collect()
}

fn context_patterns(
    sentence: &Sentence,
    start: usize,
    end: usize,
    n: usize,
    kind: TargetKind,
    target: &Target,
    out: &mut Vec<(Target, Pattern)>,
) {
    let toks = &sentence.tokens;
    if start >= n {
        out.push((
            target.clone(),
            Pattern {
                target_kind: kind,
                origin: PatternOrigin::Ngram,
                direction: Direction::Left,
                context: lower_slice(&toks[start - n..start]),
            },
        ));
    }
    if end + n <= toks.len() {
        out.push((
            target.clone(),
            Pattern {
                target_kind: kind,
                origin: PatternOrigin::Ngram,
                direction: Direction::Right,
                context: lower_slice(&toks[end..end + n]),
            },
        ));
    }
}

/// Word targets of a sentence: every noun/adjective occurrence.
pub fn word_targets(sentence: &Sentence) -> impl Iterator<Item = (usize, Target)> + '_ {
    sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_extractable())
        .map(|(i, t)| (i, Target::word(&t.surface)))
}

pub fn extract_word_patterns(sentence: &Sentence, n: usize) -> Vec<(Target, Pattern)> {
    assert!(n >= 1, "context width must be at least 1");
    let mut out = Vec::new();
    for (i, target) in word_targets(sentence) {
        context_patterns(sentence, i, i + 1, n, TargetKind::Word, &target, &mut out);
    }
    out
}

/// A phrase occurrence after determiner stripping: the target plus the
/// token range whose outside neighbours form the left and right contexts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseOccurrence {
    pub target: Target,
    /// First token before which the left context is read (determiners included).
    pub context_start: usize,
    pub end: usize,
}

pub fn phrase_occurrences(sentence: &Sentence) -> Vec<PhraseOccurrence> {
    let toks = &sentence.tokens;
    let mut out = Vec::new();
    for span in &sentence.phrases {
        let mut body = span.start;
        while body < span.end && is_determiner(&toks[body]) {
            body += 1;
        }
        if body == span.end {
            continue;
        }
        let mut context_start = span.start;
        while context_start > 0 && is_determiner(&toks[context_start - 1]) {
            context_start -= 1;
        }
        out.push(PhraseOccurrence {
            target: Target {
                kind: TargetKind::Phrase,
                form: lower_slice(&toks[body..span.end]),
            },
            context_start,
            end: span.end,
        });
    }
    out
}

pub fn extract_phrase_patterns(sentence: &Sentence, n: usize) -> Vec<(Target, Pattern)> {
    assert!(n >= 1, "context width must be at least 1");
    let mut out = Vec::new();
    for occ in phrase_occurrences(sentence) {
        context_patterns(
            sentence,
            occ.context_start,
            occ.end,
            n,
            TargetKind::Phrase,
            &occ.target,
            &mut out,
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Syntactic pattern import: `doc_id<TAB>pattern<TAB>target<TAB>kind`

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntacticEvent {
    pub doc_id: String,
    pub pattern: String,
    pub target: Target,
}

pub fn parse_syntactic_events(text: &str, source_name: &str) -> Result<Vec<SyntacticEvent>> {
    io::data_lines(text)
        .map(|(line_no, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let kind = TargetKind::parse(fields[3].trim()).ok_or_else(|| {
                Error::parse(
                    source_name,
                    line_no,
                    format!("unknown target kind `{}`", fields[3]),
                )
            })?;
            let form: Vec<String> = fields[2]
                .split_whitespace()
                .map(str::to_lowercase)
                .collect();
            if fields[0].is_empty() || fields[1].trim().is_empty() || form.is_empty() {
                return Err(Error::parse(source_name, line_no, "empty field"));
            }
            Ok(SyntacticEvent {
                doc_id: fields[0].to_string(),
                pattern: fields[1].trim().to_string(),
                target: Target { kind, form },
            })
        })
        .collect()
}

pub fn load_syntactic_events(path: &Path) -> Result<Vec<SyntacticEvent>> {
    parse_syntactic_events(&io::read_text(path)?, &io::source_name(path))
}

// ---------------------------------------------------------------------------
// Index

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternConfig {
    pub word_ngrams: bool,
    pub phrase_ngrams: bool,
    pub syntactic: bool,
    pub n: usize,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig {
            word_ngrams: true,
            phrase_ngrams: true,
            syntactic: false,
            n: DEFAULT_CONTEXT_WIDTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PatternId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TargetId(pub u32);

impl PatternId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TargetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Token-level and type-level counts over targets, patterns and their pairs.
///
/// Patterns and targets are interned in sorted order, so two indexes built
/// from the same events are identical regardless of construction order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CooccurrenceIndex {
    patterns: Vec<Pattern>,
    targets: Vec<Target>,
    pattern_ids: HashMap<Pattern, PatternId>,
    target_ids: HashMap<Target, TargetId>,
    target_freq: Vec<u64>,
    pattern_freq: Vec<u64>,
    /// Per pattern, `(target, count)` sorted by target.
    extractions: Vec<Vec<(TargetId, u64)>>,
    /// Per target, `(pattern, count)` sorted by pattern.
    extractors: Vec<Vec<(PatternId, u64)>>,
}

#[derive(Debug, Default)]
struct Tally {
    targets: HashMap<Target, u64>,
    pairs: HashMap<(Pattern, Target), u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (k, v) in other.targets {
            *self.targets.entry(k).or_default() += v;
        }
        for (k, v) in other.pairs {
            *self.pairs.entry(k).or_default() += v;
        }
        self
    }

    fn document(doc: &Document, config: &PatternConfig) -> Tally {
        let mut tally = Tally::default();
        for sentence in &doc.sentences {
            if config.word_ngrams {
                for (_, t) in word_targets(sentence) {
                    *tally.targets.entry(t).or_default() += 1;
                }
                for pair in extract_word_patterns(sentence, config.n) {
                    *tally.pairs.entry((pair.1, pair.0)).or_default() += 1;
                }
            }
            if config.phrase_ngrams {
                for occ in phrase_occurrences(sentence) {
                    *tally.targets.entry(occ.target).or_default() += 1;
                }
                for pair in extract_phrase_patterns(sentence, config.n) {
                    *tally.pairs.entry((pair.1, pair.0)).or_default() += 1;
                }
            }
        }
        tally
    }
}

impl CooccurrenceIndex {
    /// Aggregates every pattern emission over the corpus. Imported syntactic
    /// events are counted only when `config.syntactic` is set; a target seen
    /// more often through imports than as a corpus occurrence has its
    /// frequency raised to match, so pair counts never exceed it.
    pub fn build(
        corpus: &[Document],
        config: &PatternConfig,
        syntactic: &[SyntacticEvent],
    ) -> Result<Self> {
        if config.n == 0 {
            return Err(Error::InvalidArgument(
                "context width n must be >= 1".into(),
            ));
        }
        let mut tally = corpus
            .par_iter()
            .map(|doc| Tally::document(doc, config))
            .reduce(Tally::default, Tally::merge);

        if config.syntactic {
            let known: std::collections::HashSet<&str> =
                corpus.iter().map(|d| d.id.as_str()).collect();
            for ev in syntactic {
                if !known.contains(ev.doc_id.as_str()) {
                    return Err(Error::UnknownDocument(ev.doc_id.clone()));
                }
                let pattern = Pattern::syntactic(&ev.pattern, ev.target.kind);
                *tally.pairs.entry((pattern, ev.target.clone())).or_default() += 1;
            }
        }
        Ok(Self::from_tally(tally))
    }

    fn from_tally(tally: Tally) -> Self {
        let pairs: BTreeMap<(Pattern, Target), u64> = tally.pairs.into_iter().collect();
        let mut target_counts: BTreeMap<Target, u64> = tally.targets.into_iter().collect();
        let mut pattern_set: BTreeMap<Pattern, ()> = BTreeMap::new();
        for (p, t) in pairs.keys() {
            pattern_set.insert(p.clone(), ());
            target_counts.entry(t.clone()).or_insert(0);
        }
        let patterns: Vec<Pattern> = pattern_set.into_keys().collect();
        let targets: Vec<Target> = target_counts.keys().cloned().collect();
        let target_freq: Vec<u64> = target_counts.values().copied().collect();
        let triples = pairs.into_iter().map(|((p, t), c)| (p, t, c));
        Self::assemble(patterns, targets, target_freq, triples)
    }

    fn assemble(
        patterns: Vec<Pattern>,
        targets: Vec<Target>,
        mut target_freq: Vec<u64>,
        pairs: impl Iterator<Item = (Pattern, Target, u64)>,
    ) -> Self {
        let pattern_ids: HashMap<Pattern, PatternId> = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), PatternId(i as u32)))
            .collect();
        let target_ids: HashMap<Target, TargetId> = targets
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TargetId(i as u32)))
            .collect();
        let mut extractions = vec![Vec::new(); patterns.len()];
        let mut extractors = vec![Vec::new(); targets.len()];
        let mut pattern_freq = vec![0u64; patterns.len()];
        for (p, t, c) in pairs {
            let pid = pattern_ids[&p];
            let tid = target_ids[&t];
            extractions[pid.index()].push((tid, c));
            extractors[tid.index()].push((pid, c));
            pattern_freq[pid.index()] += c;
        }
        for list in &mut extractions {
            list.sort_unstable();
        }
        for (tid, list) in extractors.iter_mut().enumerate() {
            list.sort_unstable();
            let max_pair = list.iter().map(|&(_, c)| c).max().unwrap_or(0);
            if target_freq[tid] < max_pair {
                target_freq[tid] = max_pair;
            }
        }
        CooccurrenceIndex {
            patterns,
            targets,
            pattern_ids,
            target_ids,
            target_freq,
            pattern_freq,
            extractions,
            extractors,
        }
    }

    pub fn num_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn patterns(&self) -> impl Iterator<Item = (PatternId, &Pattern)> {
        self.patterns
            .iter()
            .enumerate()
            .map(|(i, p)| (PatternId(i as u32), p))
    }

    pub fn targets(&self) -> impl Iterator<Item = (TargetId, &Target)> {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, t)| (TargetId(i as u32), t))
    }

    pub fn pattern(&self, id: PatternId) -> &Pattern {
        &self.patterns[id.index()]
    }

    pub fn target(&self, id: TargetId) -> &Target {
        &self.targets[id.index()]
    }

    pub fn pattern_id(&self, p: &Pattern) -> Option<PatternId> {
        self.pattern_ids.get(p).copied()
    }

    pub fn target_id(&self, t: &Target) -> Option<TargetId> {
        self.target_ids.get(t).copied()
    }

    /// Occurrences of the target in the corpus.
    pub fn target_freq(&self, id: TargetId) -> u64 {
        self.target_freq[id.index()]
    }

    /// Occurrences (extraction events) of the pattern.
    pub fn pattern_freq(&self, id: PatternId) -> u64 {
        self.pattern_freq[id.index()]
    }

    /// Number of distinct targets the pattern extracts.
    pub fn distinct_targets(&self, id: PatternId) -> usize {
        self.extractions[id.index()].len()
    }

    pub fn extractions(&self, id: PatternId) -> &[(TargetId, u64)] {
        &self.extractions[id.index()]
    }

    pub fn extractors(&self, id: TargetId) -> &[(PatternId, u64)] {
        &self.extractors[id.index()]
    }

    pub fn pair_count(&self, p: PatternId, t: TargetId) -> u64 {
        let list = &self.extractions[p.index()];
        list.binary_search_by_key(&t, |&(id, _)| id)
            .map(|i| list[i].1)
            .unwrap_or(0)
    }

    // -- persistence -------------------------------------------------------

    pub const FORMAT_VERSION: u32 = 1;

    pub fn to_json(&self) -> String {
        let dump = IndexDump {
            format_version: Self::FORMAT_VERSION,
            patterns: self.patterns.clone(),
            targets: self.targets.clone(),
            target_freq: self.target_freq.clone(),
            pairs: self
                .extractions
                .iter()
                .enumerate()
                .flat_map(|(p, list)| list.iter().map(move |&(t, c)| (p as u32, t.0, c)))
                .collect(),
        };
        let mut s = serde_json::to_string(&dump).expect("index always serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .skip_while(|l| l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        let dump: IndexDump = serde_json::from_str(&body)?;
        if dump.format_version != Self::FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: dump.format_version,
                expected: Self::FORMAT_VERSION,
            });
        }
        let n_p = dump.patterns.len();
        let n_t = dump.targets.len();
        if dump.target_freq.len() != n_t {
            return Err(Error::InvalidArgument("target_freq length mismatch".into()));
        }
        if dump
            .pairs
            .iter()
            .any(|&(p, t, _)| p as usize >= n_p || t as usize >= n_t)
        {
            return Err(Error::InvalidArgument("pair references unknown id".into()));
        }
        let patterns = dump.patterns;
        let targets = dump.targets;
        let triples: Vec<(Pattern, Target, u64)> = dump
            .pairs
            .iter()
            .map(|&(p, t, c)| (patterns[p as usize].clone(), targets[t as usize].clone(), c))
            .collect();
        Ok(Self::assemble(
            patterns,
            targets,
            dump.target_freq,
            triples.into_iter(),
        ))
    }

    pub fn save(&self, path: &Path, header: Option<&str>) -> Result<()> {
        io::write_text(path, &io::with_header(header, self.to_json()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&io::read_text(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexDump {
    format_version: u32,
    patterns: Vec<Pattern>,
    targets: Vec<Target>,
    target_freq: Vec<u64>,
    /// `(pattern, target, count)`
    pairs: Vec<(u32, u32, u64)>,
}
