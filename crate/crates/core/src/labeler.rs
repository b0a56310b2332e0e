//! Occurrence Heuristic: a document gets every category with a lexicon entry
//! that occurs in it as a contiguous, case-insensitive token sequence.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use crate::bootstrap::Lexicon;
use crate::corpus::{Category, Document};
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub document_id: String,
    pub labels: BTreeSet<Category>,
}

/// Number of places `needle` occurs contiguously in any of `sentences`.
pub fn count_matches(sentences: &[Vec<String>], needle: &[String]) -> usize {
    if needle.is_empty() {
        return 0;
    }
    sentences
        .iter()
        .map(|s| s.windows(needle.len()).filter(|w| *w == needle).count())
        .sum()
}

pub fn label_document(doc: &Document, lexicon: &Lexicon) -> LabelSet {
    let sentences = doc.lowercased_sentences();
    let labels = lexicon
        .iter()
        .filter(|(_, e)| count_matches(&sentences, &e.form.form) > 0)
        .map(|(c, _)| c.clone())
        .collect();
    LabelSet {
        document_id: doc.id.clone(),
        labels,
    }
}

pub fn label_corpus(corpus: &[Document], lexicon: &Lexicon) -> Vec<LabelSet> {
    let mut out: Vec<LabelSet> = corpus
        .par_iter()
        .map(|d| label_document(d, lexicon))
        .collect();
    out.sort_by(|a, b| a.document_id.cmp(&b.document_id));
    out
}

/// Gold label sets of an annotated corpus, ordered by id.
pub fn gold_labels(corpus: &[Document]) -> Vec<LabelSet> {
    let mut out: Vec<LabelSet> = corpus
        .iter()
        .map(|d| LabelSet {
            document_id: d.id.clone(),
            labels: d.label_set(),
        })
        .collect();
    out.sort_by(|a, b| a.document_id.cmp(&b.document_id));
    out
}

pub fn predictions_to_string(sets: &[LabelSet], header: Option<&str>) -> String {
    let mut out = String::new();
    for s in sets {
        let cats: Vec<&str> = s.labels.iter().map(Category::as_str).collect();
        out.push_str(&s.document_id);
        out.push('\t');
        out.push_str(&cats.join(","));
        out.push('\n');
    }
    io::with_header(header, out)
}

pub fn parse_predictions(text: &str, source_name: &str) -> Result<Vec<LabelSet>> {
    let mut seen = BTreeMap::new();
    for (line_no, line) in io::data_lines(text) {
        let (id, cats) = line.split_once('\t').unwrap_or((line, ""));
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::parse(source_name, line_no, "empty document id"));
        }
        let labels: BTreeSet<Category> = cats
            .split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(Category::new)
            .collect();
        if seen.insert(id.to_string(), labels).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(seen
        .into_iter()
        .map(|(document_id, labels)| LabelSet {
            document_id,
            labels,
        })
        .collect())
}

pub fn load_predictions(path: &Path) -> Result<Vec<LabelSet>> {
    parse_predictions(&io::read_text(path)?, &io::source_name(path))
}

pub fn save_predictions(path: &Path, sets: &[LabelSet], header: Option<&str>) -> Result<()> {
    io::write_text(path, &predictions_to_string(sets, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{sentences_from_text, SeedLexicon};

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            raw_text: text.into(),
            sentences: sentences_from_text(text, None),
            labels: None,
        }
    }

    fn cats(names: &[&str]) -> BTreeSet<Category> {
        names.iter().map(|n| Category::new(*n)).collect()
    }

    #[test]
    fn bundled_seed_examples() {
        let lex = Lexicon::from_seeds(&SeedLexicon::bundled());
        let d = doc("a", "We were at the end of an 11 hour duty day.");
        assert!(label_document(&d, &lex)
            .labels
            .contains(&Category::new("Duty Cycle")));
        let d = doc("b", "Dense fog and pilot fatigue.");
        assert_eq!(
            label_document(&d, &lex).labels,
            cats(&["Physical Environment", "Physical Factors"])
        );
        let d = doc("c", "Xyzzy plugh.");
        assert!(label_document(&d, &lex).labels.is_empty());
    }

    #[test]
    fn token_match_not_substring() {
        let lex = Lexicon::parse("Duty Cycle\trest\n", "l").unwrap();
        assert!(label_document(&doc("a", "we restore power"), &lex)
            .labels
            .is_empty());
        assert_eq!(
            label_document(&doc("a", "no REST today"), &lex).labels,
            cats(&["Duty Cycle"])
        );
        let multi = Lexicon::parse("X\tduty day\n", "l").unwrap();
        assert!(label_document(&doc("a", "day duty"), &multi)
            .labels
            .is_empty());
        // no match across a sentence boundary
        assert!(label_document(&doc("a", "on duty. day two"), &multi)
            .labels
            .is_empty());
    }

    #[test]
    fn corpus_order_and_round_trip() {
        let lex = Lexicon::from_seeds(&SeedLexicon::bundled());
        assert!(label_corpus(&[], &lex).is_empty());
        let docs = vec![doc("b", "snow again"), doc("a", "light snow")];
        let sets = label_corpus(&docs, &lex);
        assert_eq!(sets[0].document_id, "a");
        assert!(sets
            .iter()
            .all(|s| s.labels.contains(&Category::new("Physical Environment"))));
        let text = predictions_to_string(&sets, Some("# h"));
        assert_eq!(parse_predictions(&text, "p").unwrap(), sets);
        let empty = parse_predictions("x\t\n", "p").unwrap();
        assert!(empty[0].labels.is_empty());
        assert!(parse_predictions("x\tA\nx\tB\n", "p").is_err());
    }
}
