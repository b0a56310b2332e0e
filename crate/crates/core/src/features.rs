//! Unigram, bigram and lexicon-entry features with TF-IDF weights, and
//! information-gain feature selection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::Lexicon;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::io;
use crate::labeler::count_matches;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Unigram,
    Bigram,
    Lexicon,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Unigram => "unigram",
            FeatureKind::Bigram => "bigram",
            FeatureKind::Lexicon => "lexicon",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Feature {
    pub kind: FeatureKind,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureFlags {
    pub unigrams: bool,
    pub bigrams: bool,
    pub lexicon: bool,
}

impl Default for FeatureFlags {
    fn default() -> Self {
        FeatureFlags {
            unigrams: true,
            bigrams: true,
            lexicon: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stopwords(BTreeSet<String>);

const ENGLISH_STOPWORDS: &str = "a about above after again against all am an and any are as at be because \
been before being below between both but by can could did do does doing down during each few for from \
further had has have having he her here hers herself him himself his how i if in into is it its itself \
just me more most my myself no nor not now of off on once only or other our ours ourselves out over own \
same she should so some such than that the their theirs them themselves then there these they this those \
through to too under until up very was we were what when where which while who whom why will with would \
you your yours yourself yourselves";

impl Stopwords {
    pub fn english() -> Self {
        Stopwords(
            ENGLISH_STOPWORDS
                .split_whitespace()
                .map(String::from)
                .collect(),
        )
    }

    pub fn parse(text: &str) -> Self {
        Stopwords(
            io::data_lines(text)
                .map(|(_, l)| l.trim().to_lowercase())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&io::read_text(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn from_pairs(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        entries.dedup_by_key(|&mut (i, _)| i);
        SparseVec { entries }
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| w.get(i as usize).map_or(0.0, |wi| wi * v))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn masked(&self, keep: &[bool]) -> SparseVec {
        SparseVec {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(i, _)| keep.get(i as usize).copied().unwrap_or(false))
                .collect(),
        }
    }
}

fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

fn raw_terms(
    doc: &Document,
    stopwords: &Stopwords,
    flags: FeatureFlags,
    lexicon_forms: &[Vec<String>],
) -> BTreeMap<Feature, u32> {
    let sentences = doc.lowercased_sentences();
    let mut counts = BTreeMap::new();
    for sentence in &sentences {
        let kept: Vec<&str> = sentence
            .iter()
            .map(String::as_str)
            .filter(|t| !stopwords.contains(t) && !is_punctuation(t))
            .collect();
        if flags.unigrams {
            for t in &kept {
                *counts
                    .entry(Feature {
                        kind: FeatureKind::Unigram,
                        text: (*t).to_string(),
                    })
                    .or_insert(0) += 1;
            }
        }
        if flags.bigrams {
            for w in kept.windows(2) {
                *counts
                    .entry(Feature {
                        kind: FeatureKind::Bigram,
                        text: format!("{} {}", w[0], w[1]),
                    })
                    .or_insert(0) += 1;
            }
        }
    }
    if flags.lexicon {
        for form in lexicon_forms {
            let tf = count_matches(&sentences, form);
            if tf > 0 {
                counts.insert(
                    Feature {
                        kind: FeatureKind::Lexicon,
                        text: form.join(" "),
                    },
                    tf as u32,
                );
            }
        }
    }
    counts
}

#[derive(Serialize, Deserialize)]
struct SpaceData {
    flags: FeatureFlags,
    stopwords: Stopwords,
    corpus_size: usize,
    features: Vec<(Feature, u32)>,
}

/// Feature vocabulary with training-set document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SpaceData", into = "SpaceData")]
pub struct FeatureSpace {
    flags: FeatureFlags,
    stopwords: Stopwords,
    corpus_size: usize,
    features: Vec<Feature>,
    df: Vec<u32>,
    ids: HashMap<Feature, u32>,
    lexicon_forms: Vec<Vec<String>>,
}

impl From<SpaceData> for FeatureSpace {
    fn from(d: SpaceData) -> Self {
        let (features, df): (Vec<Feature>, Vec<u32>) = d.features.into_iter().unzip();
        FeatureSpace::assemble(d.flags, d.stopwords, d.corpus_size, features, df)
    }
}

impl From<FeatureSpace> for SpaceData {
    fn from(s: FeatureSpace) -> Self {
        SpaceData {
            flags: s.flags,
            stopwords: s.stopwords,
            corpus_size: s.corpus_size,
            features: s.features.into_iter().zip(s.df).collect(),
        }
    }
}

impl FeatureSpace {
    fn assemble(
        flags: FeatureFlags,
        stopwords: Stopwords,
        corpus_size: usize,
        features: Vec<Feature>,
        df: Vec<u32>,
    ) -> Self {
        let ids = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        let lexicon_forms = features
            .iter()
            .filter(|f| f.kind == FeatureKind::Lexicon)
            .map(|f| f.text.split(' ').map(String::from).collect())
            .collect();
        FeatureSpace {
            flags,
            stopwords,
            corpus_size,
            features,
            df,
            ids,
            lexicon_forms,
        }
    }

    /// Features are those seen in at least one training document, sorted by
    /// kind then text. Lexicon entries that never occur in training are left
    /// out because their IDF is undefined.
    pub fn build(
        train: &[Document],
        stopwords: &Stopwords,
        flags: FeatureFlags,
        lexicon: Option<&Lexicon>,
    ) -> Result<Self> {
        if flags.lexicon && lexicon.is_none() {
            return Err(Error::InvalidArgument(
                "lexicon features requested without a lexicon".into(),
            ));
        }
        let forms: Vec<Vec<String>> = match (flags.lexicon, lexicon) {
            (true, Some(lex)) => {
                let set: BTreeSet<Vec<String>> =
                    lex.iter().map(|(_, e)| e.form.form.clone()).collect();
                set.into_iter().collect()
            }
            _ => Vec::new(),
        };
        let per_doc: Vec<BTreeMap<Feature, u32>> = train
            .par_iter()
            .map(|d| raw_terms(d, stopwords, flags, &forms))
            .collect();
        let mut df: BTreeMap<Feature, u32> = BTreeMap::new();
        for terms in per_doc {
            for f in terms.into_keys() {
                *df.entry(f).or_insert(0) += 1;
            }
        }
        let (features, dfs): (Vec<Feature>, Vec<u32>) = df.into_iter().unzip();
        Ok(Self::assemble(
            flags,
            stopwords.clone(),
            train.len(),
            features,
            dfs,
        ))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, id: u32) -> &Feature {
        &self.features[id as usize]
    }

    pub fn id(&self, feature: &Feature) -> Option<u32> {
        self.ids.get(feature).copied()
    }

    pub fn df(&self, id: u32) -> u32 {
        self.df[id as usize]
    }

    pub fn idf(&self, id: u32) -> f64 {
        (self.corpus_size as f64 / self.df[id as usize] as f64).ln()
    }

    /// In-space term frequencies of a document.
    pub fn term_counts(&self, doc: &Document) -> Vec<(u32, u32)> {
        raw_terms(doc, &self.stopwords, self.flags, &self.lexicon_forms)
            .into_iter()
            .filter_map(|(f, tf)| self.id(&f).map(|id| (id, tf)))
            .collect::<BTreeMap<u32, u32>>()
            .into_iter()
            .collect()
    }

    pub fn weigh(&self, counts: &[(u32, u32)]) -> SparseVec {
        SparseVec::from_pairs(
            counts
                .iter()
                .map(|&(id, tf)| (id, tf as f64 * self.idf(id)))
                .filter(|&(_, w)| w != 0.0)
                .collect(),
        )
    }

    pub fn vectorize(&self, doc: &Document) -> SparseVec {
        self.weigh(&self.term_counts(doc))
    }

    /// A copy of the space holding only the features flagged in `keep`.
    pub fn restrict(&self, keep: &[bool]) -> FeatureSpace {
        let (features, df): (Vec<Feature>, Vec<u32>) = self
            .features
            .iter()
            .zip(&self.df)
            .enumerate()
            .filter(|(i, _)| keep.get(*i).copied().unwrap_or(false))
            .map(|(_, (f, d))| (f.clone(), *d))
            .unzip();
        Self::assemble(
            self.flags,
            self.stopwords.clone(),
            self.corpus_size,
            features,
            df,
        )
    }

    /// Audit dump: `feature<TAB>kind<TAB>df<TAB>ig`.
    pub fn to_tsv(&self, ig: Option<&[f64]>, header: Option<&str>) -> String {
        let mut out = String::new();
        for (i, f) in self.features.iter().enumerate() {
            let ig = ig
                .and_then(|v| v.get(i))
                .map_or(String::new(), |g| format!("{g}"));
            out.push_str(&format!("{}\t{}\t{}\t{}\n", f.text, f.kind, self.df[i], ig));
        }
        io::with_header(header, out)
    }
}

// ---------------------------------------------------------------------------
// Information gain

fn entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// IG from per-class document counts with and without the feature.
pub fn information_gain_counts(with: &[u64], without: &[u64]) -> f64 {
    let n_with: u64 = with.iter().sum();
    let n_without: u64 = without.iter().sum();
    let n = n_with + n_without;
    if n == 0 {
        return 0.0;
    }
    let class: Vec<u64> = with.iter().zip(without).map(|(a, b)| a + b).collect();
    let cond = (n_with as f64 / n as f64) * entropy(with)
        + (n_without as f64 / n as f64) * entropy(without);
    (entropy(&class) - cond).max(0.0)
}

/// IG of a presence indicator for a class variable with ids in `0..n_classes`.
pub fn information_gain(presence: &[bool], classes: &[usize], n_classes: usize) -> Result<f64> {
    if presence.len() != classes.len() {
        return Err(Error::LengthMismatch {
            left: presence.len(),
            right: classes.len(),
        });
    }
    let mut with = vec![0u64; n_classes];
    let mut without = vec![0u64; n_classes];
    for (&p, &c) in presence.iter().zip(classes) {
        if c >= n_classes {
            return Err(Error::InvalidArgument(format!("class id {c} out of range")));
        }
        if p {
            with[c] += 1;
        } else {
            without[c] += 1;
        }
    }
    Ok(information_gain_counts(&with, &without))
}

/// Feature ids present in a document, from term counts.
pub fn presence_of_counts(counts: &[(u32, u32)]) -> Vec<u32> {
    counts
        .iter()
        .filter(|&&(_, tf)| tf > 0)
        .map(|&(id, _)| id)
        .collect()
}

/// IG of every feature against `classes`, from per-document lists of
/// present feature ids.
pub fn information_gains(
    n_features: usize,
    present: &[Vec<u32>],
    classes: &[usize],
    n_classes: usize,
) -> Result<Vec<f64>> {
    if present.len() != classes.len() {
        return Err(Error::LengthMismatch {
            left: present.len(),
            right: classes.len(),
        });
    }
    let mut class_totals = vec![0u64; n_classes];
    for &c in classes {
        if c >= n_classes {
            return Err(Error::InvalidArgument(format!("class id {c} out of range")));
        }
        class_totals[c] += 1;
    }
    let mut hits = vec![0u64; n_features * n_classes];
    for (doc, &c) in present.iter().zip(classes) {
        for &id in doc {
            hits[id as usize * n_classes + c] += 1;
        }
    }
    Ok((0..n_features)
        .into_par_iter()
        .map(|f| {
            let with = &hits[f * n_classes..(f + 1) * n_classes];
            let without: Vec<u64> = class_totals.iter().zip(with).map(|(t, w)| t - w).collect();
            information_gain_counts(with, &without)
        })
        .collect())
}

/// Keep mask: the top `ceil(percent · n / 100)` unigram and bigram features
/// by IG (ties by text), plus every lexicon feature.
pub fn select_by_ig(space: &FeatureSpace, ig: &[f64], percent: u32) -> Result<Vec<bool>> {
    if percent == 0 || percent > 100 {
        return Err(Error::InvalidArgument(format!(
            "feature percentage must be in 1..=100, got {percent}"
        )));
    }
    if ig.len() != space.len() {
        return Err(Error::LengthMismatch {
            left: ig.len(),
            right: space.len(),
        });
    }
    let mut keep: Vec<bool> = space
        .features()
        .iter()
        .map(|f| f.kind == FeatureKind::Lexicon)
        .collect();
    let mut ngrams: Vec<usize> = (0..space.len()).filter(|&i| !keep[i]).collect();
    let quota = (percent as usize * ngrams.len()).div_ceil(100);
    ngrams.sort_by(|&a, &b| {
        ig[b]
            .total_cmp(&ig[a])
            .then_with(|| {
                space
                    .feature(a as u32)
                    .text
                    .cmp(&space.feature(b as u32).text)
            })
            .then_with(|| {
                space
                    .feature(a as u32)
                    .kind
                    .cmp(&space.feature(b as u32).kind)
            })
    });
    for &i in ngrams.iter().take(quota) {
        keep[i] = true;
    }
    Ok(keep)
}

/// Selection as a new space.
pub fn select_features(
    space: &FeatureSpace,
    train_counts: &[Vec<(u32, u32)>],
    classes: &[usize],
    n_classes: usize,
    percent: u32,
) -> Result<FeatureSpace> {
    let present: Vec<Vec<u32>> = train_counts.iter().map(|c| presence_of_counts(c)).collect();
    let ig = information_gains(space.len(), &present, classes, n_classes)?;
    Ok(space.restrict(&select_by_ig(space, &ig, percent)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sentences_from_text;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            raw_text: text.into(),
            sentences: sentences_from_text(text, None),
            labels: None,
        }
    }

    fn feat(kind: FeatureKind, text: &str) -> Feature {
        Feature {
            kind,
            text: text.into(),
        }
    }

    #[test]
    fn stopword_filtered_ngrams() {
        let sw: Stopwords = ["the", "was"].into_iter().collect();
        let flags = FeatureFlags {
            lexicon: false,
            ..Default::default()
        };
        let space =
            FeatureSpace::build(&[doc("a", "the runway was icy")], &sw, flags, None).unwrap();
        let names: Vec<&Feature> = space.features().iter().collect();
        assert_eq!(
            names,
            vec![
                &feat(FeatureKind::Unigram, "icy"),
                &feat(FeatureKind::Unigram, "runway"),
                &feat(FeatureKind::Bigram, "runway icy"),
            ]
        );
        let empty = FeatureSpace::build(&[], &sw, flags, None).unwrap();
        assert!(empty.is_empty());
        assert!(FeatureSpace::build(&[], &sw, FeatureFlags::default(), None).is_err());
    }

    #[test]
    fn tfidf_weights() {
        let sw = Stopwords::default();
        let flags = FeatureFlags {
            bigrams: false,
            lexicon: false,
            unigrams: true,
        };
        let train = vec![
            doc("1", "ice ice"),
            doc("2", "ice"),
            doc("3", "fog"),
            doc("4", "snow"),
        ];
        let space = FeatureSpace::build(&train, &sw, flags, None).unwrap();
        let v = space.vectorize(&doc("x", "fog fog"));
        let fog = space.id(&feat(FeatureKind::Unigram, "fog")).unwrap();
        assert_abs_diff_eq!(v.entries[0].1, 2.0 * 4f64.ln(), epsilon = 1e-12);
        assert_eq!(v.entries[0].0, fog);
        // ice: df 2 of 4
        let v = space.vectorize(&doc("x", "ice ice"));
        assert_abs_diff_eq!(v.entries[0].1, 2.0 * 2f64.ln(), epsilon = 1e-12);
        assert!(space.vectorize(&doc("x", "unseen words")).is_empty());
        let all =
            FeatureSpace::build(&[doc("1", "ice"), doc("2", "ice")], &sw, flags, None).unwrap();
        assert!(all.vectorize(&doc("x", "ice ice ice")).is_empty());
    }

    #[test]
    fn lexicon_phrase_is_one_feature() {
        let lex = Lexicon::parse("Duty Cycle\t11 hour duty day\n", "l").unwrap();
        let train = vec![doc("1", "an 11 hour duty day"), doc("2", "calm")];
        let space = FeatureSpace::build(
            &train,
            &Stopwords::english(),
            FeatureFlags::default(),
            Some(&lex),
        )
        .unwrap();
        let id = space
            .id(&feat(FeatureKind::Lexicon, "11 hour duty day"))
            .unwrap();
        assert_eq!(space.df(id), 1);
        let counts = space.term_counts(&doc("x", "11 hour duty day then 11 hour duty day"));
        assert!(counts.contains(&(id, 2)));
    }

    #[test]
    fn ig_hand_values() {
        // feature == class
        let ig = information_gain(&[true, true, false, false], &[1, 1, 0, 0], 2).unwrap();
        assert_abs_diff_eq!(ig, 1.0, epsilon = 1e-12);
        // independent
        let ig = information_gain(&[true, false, true, false], &[1, 1, 0, 0], 2).unwrap();
        assert_abs_diff_eq!(ig, 0.0, epsilon = 1e-12);
        // 10 docs: 4 positive. Feature present in 3 positives and 1 negative.
        let presence = [
            true, true, true, false, true, false, false, false, false, false,
        ];
        let classes = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let h = |p: f64| {
            if p == 0.0 || p == 1.0 {
                0.0
            } else {
                -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
            }
        };
        let expected = h(0.4) - (0.4 * h(0.75) + 0.6 * h(1.0 / 6.0));
        assert_abs_diff_eq!(
            information_gain(&presence, &classes, 2).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn selection_quota_and_lexicon_kept() {
        let lex = Lexicon::parse("X\tfog\n", "l").unwrap();
        let train: Vec<Document> = (0..10)
            .map(|i| doc(&i.to_string(), &format!("w{i} fog")))
            .collect();
        let flags = FeatureFlags {
            bigrams: false,
            ..Default::default()
        };
        let space = FeatureSpace::build(&train, &Stopwords::default(), flags, Some(&lex)).unwrap();
        // 11 unigrams (w0..w9, fog) and one lexicon feature
        assert_eq!(space.len(), 12);
        let counts: Vec<_> = train.iter().map(|d| space.term_counts(d)).collect();
        let classes: Vec<usize> = (0..10).map(|i| usize::from(i < 5)).collect();
        let sel = select_features(&space, &counts, &classes, 2, 50).unwrap();
        assert_eq!(sel.len(), 6 + 1);
        assert!(sel.id(&feat(FeatureKind::Lexicon, "fog")).is_some());
        let full = select_features(&space, &counts, &classes, 2, 100).unwrap();
        assert_eq!(full, space);
        assert!(select_features(&space, &counts, &classes, 2, 0).is_err());
    }

    #[test]
    fn space_serde_round_trip() {
        let lex = Lexicon::parse("X\tfog bank\n", "l").unwrap();
        let space = FeatureSpace::build(
            &[doc("1", "a fog bank rolled in")],
            &Stopwords::english(),
            FeatureFlags::default(),
            Some(&lex),
        )
        .unwrap();
        let json = serde_json::to_string(&space).unwrap();
        let back: FeatureSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, space);
        assert_eq!(
            back.vectorize(&doc("2", "fog bank")),
            space.vectorize(&doc("2", "fog bank"))
        );
    }

    proptest! {
        #[test]
        fn ig_bounded_by_class_entropy(with in proptest::collection::vec(0u64..20, 3), without in proptest::collection::vec(0u64..20, 3)) {
            let ig = information_gain_counts(&with, &without);
            let class: Vec<u64> = with.iter().zip(&without).map(|(a, b)| a + b).collect();
            prop_assert!(ig >= 0.0);
            prop_assert!(ig <= entropy(&class) + 1e-12);
        }

        #[test]
        fn selection_is_nested(igs in proptest::collection::vec(0.0f64..1.0, 1..30), p in 1u32..10) {
            let train: Vec<Document> = (0..igs.len()).map(|i| doc(&i.to_string(), &format!("t{i}"))).collect();
            let flags = FeatureFlags { bigrams: false, lexicon: false, unigrams: true };
            let space = FeatureSpace::build(&train, &Stopwords::default(), flags, None).unwrap();
            let lo = select_by_ig(&space, &igs, p * 10).unwrap();
            let hi = select_by_ig(&space, &igs, (p + 1) * 10).unwrap();
            prop_assert!(lo.iter().zip(&hi).all(|(a, b)| !a || *b));
        }
    }
}
