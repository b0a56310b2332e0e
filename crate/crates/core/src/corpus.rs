//! Documents, preprocessing, and the corpus / seed file formats.
//!
//! Narratives arrive upper-cased and full of domain abbreviations. The
//! preprocessing chain is: whitespace-plus-punctuation tokenization,
//! abbreviation expansion, dictionary-driven case restoration, then a
//! naive sentence split and tagger used only when the record does not
//! already carry tagged tokens.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::patterns;

/// A cause category (shaping factor) or any user-supplied label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Category(String);

impl Category {
    pub fn new(name: impl Into<String>) -> Self {
        Category(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Category {
    fn from(s: &str) -> Self {
        Category(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    /// Penn Treebank tag.
    pub pos: String,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>) -> Self {
        TaggedToken {
            surface: surface.into(),
            pos: pos.into(),
        }
    }

    pub fn is_noun(&self) -> bool {
        self.pos.starts_with("NN")
    }

    pub fn is_adjective(&self) -> bool {
        self.pos.starts_with("JJ")
    }

    /// Nouns and adjectives are the only tokens that get extracted.
    pub fn is_extractable(&self) -> bool {
        self.is_noun() || self.is_adjective()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhraseKind {
    #[serde(rename = "NP")]
    Noun,
    #[serde(rename = "ADJP")]
    Adjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhraseSpan {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub kind: PhraseKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<TaggedToken>,
    pub phrases: Vec<PhraseSpan>,
}

impl Sentence {
    /// Builds a sentence from `surface/TAG` items, e.g. `"line/NN of/IN"`.
    pub fn from_tagged(text: &str) -> Self {
        let tokens = text
            .split_whitespace()
            .map(|item| match item.rsplit_once('/') {
                Some((surface, pos)) if !surface.is_empty() => TaggedToken::new(surface, pos),
                _ => TaggedToken::new(item, "NN"),
            })
            .collect();
        Sentence {
            tokens,
            phrases: Vec::new(),
        }
    }

    pub fn with_phrases(mut self, phrases: Vec<PhraseSpan>) -> Self {
        self.phrases = phrases;
        self
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.tokens.is_empty() {
            return Err("empty sentence".into());
        }
        if let Some(t) = self.tokens.iter().find(|t| t.surface.is_empty()) {
            return Err(format!("empty token surface (tag {})", t.pos));
        }
        let mut spans = self.phrases.clone();
        spans.sort();
        let mut prev_end = 0;
        for (i, span) in spans.iter().enumerate() {
            if span.start >= span.end {
                return Err(format!("phrase span {}..{} is empty", span.start, span.end));
            }
            if span.end > self.tokens.len() {
                return Err(format!(
                    "phrase span {}..{} exceeds {} tokens",
                    span.start,
                    span.end,
                    self.tokens.len()
                ));
            }
            if i > 0 && span.start < prev_end {
                return Err(format!("phrase span {}..{} overlaps", span.start, span.end));
            }
            prev_end = span.end;
        }
        Ok(())
    }
}

/// One incident report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub sentences: Vec<Sentence>,
    pub labels: Option<BTreeSet<Category>>,
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidDocument {
                id: String::new(),
                message: "empty id".into(),
            });
        }
        for (i, s) in self.sentences.iter().enumerate() {
            s.validate().map_err(|message| Error::InvalidDocument {
                id: self.id.clone(),
                message: format!("sentence {i}: {message}"),
            })?;
        }
        Ok(())
    }

    /// Lowercased surfaces, one list per sentence.
    pub fn lowercased_sentences(&self) -> Vec<Vec<String>> {
        self.sentences
            .iter()
            .map(|s| s.tokens.iter().map(|t| t.surface.to_lowercase()).collect())
            .collect()
    }

    pub fn label_set(&self) -> BTreeSet<Category> {
        self.labels.clone().unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------
// Preprocessing

const LEADING_PUNCT: &[char] = &['"', '\'', '(', '[', '{', '`'];
const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '}'];
const SENTENCE_TERMINATORS: &[&str] = &[".", "!", "?", ";"];

/// Whitespace split, then leading and trailing punctuation peeled off into
/// their own tokens. Word-internal punctuation (`10/28`, `DIDN'T`,
/// `all-night`) stays attached.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = chunk;
        let mut leading = Vec::new();
        while let Some(c) = word.chars().next() {
            if word.len() > c.len_utf8() && LEADING_PUNCT.contains(&c) {
                leading.push(c.to_string());
                word = &word[c.len_utf8()..];
            } else {
                break;
            }
        }
        let mut trailing = Vec::new();
        while let Some(c) = word.chars().next_back() {
            if word.len() > c.len_utf8() && TRAILING_PUNCT.contains(&c) {
                trailing.push(c.to_string());
                word = &word[..word.len() - c.len_utf8()];
            } else {
                break;
            }
        }
        out.extend(leading);
        out.push(word.to_string());
        out.extend(trailing.into_iter().rev());
    }
    out
}

/// Abbreviation → expansion map. When a source file lists the same
/// abbreviation twice, the first expansion wins.
#[derive(Debug, Clone, Default)]
pub struct AbbreviationMap {
    map: HashMap<String, Vec<String>>,
}

impl AbbreviationMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless the key is already present; returns whether it was inserted.
    pub fn insert(&mut self, abbrev: &str, expansion: &str) -> bool {
        if self.map.contains_key(abbrev) {
            return false;
        }
        let tokens = expansion.split_whitespace().map(str::to_string).collect();
        self.map.insert(abbrev.to_string(), tokens);
        true
    }

    pub fn get(&self, token: &str) -> Option<&[String]> {
        self.map.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut map = AbbreviationMap::new();
        for (line_no, line) in io::data_lines(text) {
            let (abbrev, expansion) = line.split_once('\t').ok_or_else(|| {
                Error::parse(source_name, line_no, "expected ABBREV<TAB>expansion")
            })?;
            let abbrev = abbrev.trim();
            let expansion = expansion.trim();
            if abbrev.is_empty() || expansion.is_empty() {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    "empty abbreviation or expansion",
                ));
            }
            map.insert(abbrev, expansion);
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_text(path)?, &io::source_name(path))
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for AbbreviationMap {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut map = AbbreviationMap::new();
        for (k, v) in iter {
            map.insert(k, v);
        }
        map
    }
}

/// Known lowercase words used for case restoration.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: HashSet<String>,
}

impl Dictionary {
    pub fn contains(&self, lowercase: &str) -> bool {
        self.words.contains(lowercase)
    }

    pub fn parse(text: &str) -> Self {
        io::data_lines(text)
            .map(|(_, l)| l.trim())
            .filter(|l| !l.is_empty())
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&io::read_text(path)?))
    }
}

impl<S: AsRef<str>> FromIterator<S> for Dictionary {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Dictionary {
            words: iter
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }
}

pub fn expand_abbreviations(tokens: &[String], abbrevs: &AbbreviationMap) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        match abbrevs.get(tok) {
            Some(expansion) => out.extend(expansion.iter().cloned()),
            None => out.push(tok.clone()),
        }
    }
    out
}

/// Known words are lowercased, `I` stays `I`, everything else is left as is.
/// No sentence-initial recapitalization is done.
pub fn restore_case(tokens: &[String], dictionary: &Dictionary) -> Vec<String> {
    tokens
        .iter()
        .map(|tok| {
            if tok == "I" {
                return tok.clone();
            }
            let lower = tok.to_lowercase();
            if dictionary.contains(&lower) {
                lower
            } else {
                tok.clone()
            }
        })
        .collect()
}

/// Splits after `.`, `!`, `?` and `;`; trailing material forms a final sentence.
pub fn split_sentences(tokens: &[String]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for tok in tokens {
        current.push(tok.clone());
        if SENTENCE_TERMINATORS.contains(&tok.as_str()) {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Closed-class and suffix rules; only a fallback for untagged input.
pub fn naive_tag(tokens: &[String]) -> Vec<TaggedToken> {
    tokens
        .iter()
        .map(|t| TaggedToken::new(t.clone(), naive_pos(t)))
        .collect()
}

fn naive_pos(token: &str) -> &'static str {
    let lower = token.to_lowercase();
    match lower.as_str() {
        "." | "!" | "?" => return ".",
        "," => return ",",
        ";" | ":" | "-" | "--" => return ":",
        "(" | "[" | "{" => return "(",
        ")" | "]" | "}" => return ")",
        "\"" | "'" | "`" => return "''",
        "a" | "an" | "the" | "this" | "that" | "these" | "those" | "each" | "every" | "some"
        | "any" | "no" | "all" | "both" | "another" => return "DT",
        "my" | "his" | "her" | "its" | "our" | "their" | "your" => return "PRP$",
        "i" | "you" | "he" | "she" | "it" | "we" | "they" | "me" | "him" | "us" | "them" => {
            return "PRP"
        }
        "of" | "in" | "on" | "at" | "by" | "for" | "from" | "with" | "into" | "over" | "under"
        | "after" | "before" | "about" | "between" | "through" | "during" | "without"
        | "within" | "near" | "above" | "below" | "across" | "around" | "via" | "as" | "than"
        | "because" | "while" | "if" | "since" | "until" | "upon" | "onto" | "off" => return "IN",
        "to" => return "TO",
        "and" | "or" | "but" | "nor" => return "CC",
        "will" | "would" | "can" | "could" | "should" | "may" | "might" | "must" | "shall" => {
            return "MD"
        }
        "is" | "has" | "does" => return "VBZ",
        "are" | "am" | "have" | "do" => return "VBP",
        "was" | "were" | "had" | "did" => return "VBD",
        "be" => return "VB",
        "been" => return "VBN",
        "being" => return "VBG",
        "not" | "very" | "also" | "then" | "too" | "never" | "just" => return "RB",
        "there" => return "EX",
        "which" => return "WDT",
        "who" | "what" => return "WP",
        "when" | "where" | "why" | "how" => return "WRB",
        _ => {}
    }
    if lower.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return "CD";
    }
    if !lower.chars().any(char::is_alphanumeric) {
        return ":";
    }
    if lower.len() > 4 && lower.ends_with("ing") {
        "VBG"
    } else if lower.len() > 3 && lower.ends_with("ed") {
        "VBD"
    } else if lower.len() > 3 && lower.ends_with("ly") {
        "RB"
    } else {
        "NN"
    }
}

/// Resources for the full preprocessing chain.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    pub abbreviations: AbbreviationMap,
    pub dictionary: Dictionary,
}

impl Preprocessor {
    pub fn normalize(&self, text: &str) -> Vec<String> {
        let tokens = tokenize(text);
        let expanded = expand_abbreviations(&tokens, &self.abbreviations);
        restore_case(&expanded, &self.dictionary)
    }
}

/// Builds tagged sentences from raw text with the naive fallback splitter,
/// tagger and chunker. `pre` adds abbreviation expansion and case restoration.
pub fn sentences_from_text(text: &str, pre: Option<&Preprocessor>) -> Vec<Sentence> {
    let tokens = match pre {
        Some(p) => p.normalize(text),
        None => tokenize(text),
    };
    split_sentences(&tokens)
        .into_iter()
        .map(|toks| {
            let mut s = Sentence {
                tokens: naive_tag(&toks),
                phrases: Vec::new(),
            };
            s.phrases = patterns::chunk_phrases(&s);
            s
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Corpus file: one JSON object per line.

/// `[sentence_index, start, end, kind]`
pub type PhraseRecord = (usize, usize, usize, PhraseKind);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<Vec<(String, String)>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrases: Option<Vec<PhraseRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl CorpusRecord {
    /// Untagged records go through the fallback chain (with `pre` when
    /// given); tagged records keep their tokens, and get chunked only when
    /// they carry no phrase spans.
    pub fn into_document(self, pre: Option<&Preprocessor>) -> Result<Document> {
        let mut sentences = match self.tokens {
            Some(sents) => sents
                .into_iter()
                .map(|toks| Sentence {
                    tokens: toks
                        .into_iter()
                        .map(|(surface, pos)| TaggedToken { surface, pos })
                        .collect(),
                    phrases: Vec::new(),
                })
                .collect::<Vec<_>>(),
            None => {
                let mut sents = sentences_from_text(&self.text, pre);
                if self.phrases.is_some() {
                    for s in &mut sents {
                        s.phrases.clear();
                    }
                }
                sents
            }
        };
        match self.phrases {
            Some(spans) => {
                for (si, start, end, kind) in spans {
                    let s = sentences
                        .get_mut(si)
                        .ok_or_else(|| Error::InvalidDocument {
                            id: self.id.clone(),
                            message: format!("phrase references missing sentence {si}"),
                        })?;
                    s.phrases.push(PhraseSpan { start, end, kind });
                }
                for s in &mut sentences {
                    s.phrases.sort();
                }
            }
            None => {
                for s in &mut sentences {
                    if s.phrases.is_empty() {
                        s.phrases = patterns::chunk_phrases(s);
                    }
                }
            }
        }
        let doc = Document {
            id: self.id,
            raw_text: self.text,
            sentences,
            labels: self
                .labels
                .map(|ls| ls.into_iter().map(Category::new).collect()),
        };
        doc.validate()?;
        Ok(doc)
    }
}

impl From<&Document> for CorpusRecord {
    fn from(doc: &Document) -> Self {
        let tokens = doc
            .sentences
            .iter()
            .map(|s| {
                s.tokens
                    .iter()
                    .map(|t| (t.surface.clone(), t.pos.clone()))
                    .collect()
            })
            .collect();
        let phrases = doc
            .sentences
            .iter()
            .enumerate()
            .flat_map(|(si, s)| s.phrases.iter().map(move |p| (si, p.start, p.end, p.kind)))
            .collect();
        CorpusRecord {
            id: doc.id.clone(),
            text: doc.raw_text.clone(),
            tokens: Some(tokens),
            phrases: Some(phrases),
            labels: doc
                .labels
                .as_ref()
                .map(|ls| ls.iter().map(|c| c.as_str().to_string()).collect()),
        }
    }
}

pub fn parse_corpus_records(text: &str, source_name: &str) -> Result<Vec<(usize, CorpusRecord)>> {
    io::data_lines(text)
        .map(|(line_no, line)| {
            serde_json::from_str::<CorpusRecord>(line)
                .map(|r| (line_no, r))
                .map_err(|e| Error::parse(source_name, line_no, e.to_string()))
        })
        .collect()
}

/// Parses a corpus, running `pre` on untagged records.
pub fn parse_corpus(
    text: &str,
    source_name: &str,
    pre: Option<&Preprocessor>,
) -> Result<Vec<Document>> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (line_no, record) in parse_corpus_records(text, source_name)? {
        if record.id.is_empty() {
            return Err(Error::parse(source_name, line_no, "empty document id"));
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        let doc = record.into_document(pre).map_err(|e| match e {
            Error::InvalidDocument { message, .. } => Error::parse(source_name, line_no, message),
            other => other,
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    parse_corpus(&io::read_text(path)?, &io::source_name(path), None)
}

pub fn load_corpus_with(path: &Path, pre: &Preprocessor) -> Result<Vec<Document>> {
    parse_corpus(&io::read_text(path)?, &io::source_name(path), Some(pre))
}

pub fn corpus_to_string(docs: &[Document], header: Option<&str>) -> String {
    let mut body = String::new();
    for doc in docs {
        let record = CorpusRecord::from(doc);
        body.push_str(&serde_json::to_string(&record).expect("corpus records always serialize"));
        body.push('\n');
    }
    io::with_header(header, body)
}

pub fn save_corpus(path: &Path, docs: &[Document], header: Option<&str>) -> Result<()> {
    io::write_text(path, &corpus_to_string(docs, header))
}

// ---------------------------------------------------------------------------
// Seed lexicon: `category<TAB>phrase`

const BUNDLED_SEEDS: &str = include_str!("../data/seed_lexicon.tsv");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedLexicon {
    /// Phrases per category, in file order.
    pub entries: BTreeMap<Category, Vec<String>>,
}

impl SeedLexicon {
    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phrases(&self, category: &Category) -> &[String] {
        self.entries.get(category).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut lexicon = SeedLexicon::default();
        let mut owner: HashMap<Vec<String>, Category> = HashMap::new();
        for (line_no, line) in io::data_lines(text) {
            let (cat, phrase) = line.split_once('\t').ok_or_else(|| {
                Error::parse(source_name, line_no, "expected category<TAB>phrase")
            })?;
            let (cat, phrase) = (cat.trim(), phrase.trim());
            if cat.is_empty() || phrase.is_empty() {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    "empty category or phrase",
                ));
            }
            let category = Category::new(cat);
            let key = phrase_key(phrase);
            match owner.get(&key) {
                Some(existing) if *existing == category => continue,
                Some(existing) => {
                    return Err(Error::SeedConflict {
                        phrase: phrase.to_string(),
                        first: existing.to_string(),
                        second: category.to_string(),
                    })
                }
                None => {}
            }
            owner.insert(key, category.clone());
            lexicon
                .entries
                .entry(category)
                .or_default()
                .push(phrase.to_string());
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_text(path)?, &io::source_name(path))
    }

    /// The 14-category aviation seed list shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_SEEDS, "seed_lexicon.tsv").expect("bundled seed file is well formed")
    }

    pub fn bundled_text() -> &'static str {
        BUNDLED_SEEDS
    }
}

/// Lowercased token sequence used to compare phrases.
pub fn phrase_key(phrase: &str) -> Vec<String> {
    tokenize(phrase)
        .into_iter()
        .map(|t| t.to_lowercase())
        .collect()
}
