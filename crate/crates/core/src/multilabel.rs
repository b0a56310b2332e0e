//! Linear reference learners, the One-Versus-All, MetaLabeler and Pruned
//! Sets schemes, grid tuning and augmented cross-validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::Lexicon;
use crate::corpus::{Category, Document};
use crate::error::{Error, Result};
use crate::eval::{self, Prf};
use crate::features::{
    information_gains, select_by_ig, FeatureFlags, FeatureSpace, SparseVec, Stopwords,
};
use crate::io;
use crate::labeler::{gold_labels, LabelSet};

pub trait BinaryModel {
    fn decision(&self, x: &SparseVec) -> f64;
}

pub trait MulticlassModel {
    /// Class id in `0..n_classes`; ties go to the lowest id.
    fn predict(&self, x: &SparseVec) -> usize;
}

pub trait BinaryLearner: Sync {
    type Binary: BinaryModel + Send + Sync;
    fn train_binary(
        &self,
        xs: &[SparseVec],
        ys: &[bool],
        dim: usize,
        seed: u64,
    ) -> Result<Self::Binary>;
}

pub trait MulticlassLearner: Sync {
    type Multiclass: MulticlassModel + Send + Sync;
    fn train_multiclass(
        &self,
        xs: &[SparseVec],
        classes: &[usize],
        n_classes: usize,
        dim: usize,
        seed: u64,
    ) -> Result<Self::Multiclass>;
}

/// Stochastic subgradient solver for `½|w|² + C·Σ hinge` (binary) and its
/// Crammer-Singer multiclass counterpart. The bias is a constant feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub c: f64,
    pub epochs: usize,
}

impl Default for LinearSvm {
    fn default() -> Self {
        LinearSvm { c: 1.0, epochs: 20 }
    }
}

mod sparse_weights {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Stored {
        dim: usize,
        nonzero: Vec<(u32, f64)>,
    }

    pub fn serialize<S: Serializer>(w: &[f64], s: S) -> Result<S::Ok, S::Error> {
        Stored {
            dim: w.len(),
            nonzero: w
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let stored = Stored::deserialize(d)?;
        let mut w = vec![0.0; stored.dim];
        for (i, v) in stored.nonzero {
            let slot = w
                .get_mut(i as usize)
                .ok_or_else(|| serde::de::Error::custom("weight index out of range"))?;
            *slot = v;
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    #[serde(with = "sparse_weights")]
    pub w: Vec<f64>,
    pub b: f64,
}

impl BinaryModel for LinearModel {
    fn decision(&self, x: &SparseVec) -> f64 {
        x.dot(&self.w) - self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMulticlass {
    pub classes: Vec<LinearModel>,
}

impl MulticlassModel for LinearMulticlass {
    fn predict(&self, x: &SparseVec) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, m) in self.classes.iter().enumerate() {
            let s = m.decision(x);
            if s > best.1 {
                best = (k, s);
            }
        }
        best.0
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sub_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Weight vectors kept as `s · v` so the per-step shrink is O(1).
struct Scaled {
    v: Vec<Vec<f64>>,
    vb: Vec<f64>,
    s: f64,
}

impl Scaled {
    fn new(k: usize, dim: usize) -> Self {
        Scaled {
            v: vec![vec![0.0; dim]; k],
            vb: vec![0.0; k],
            s: 1.0,
        }
    }

    fn raw(&self, k: usize, x: &SparseVec) -> f64 {
        x.dot(&self.v[k]) + self.vb[k]
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            for row in &mut self.v {
                row.fill(0.0);
            }
            self.vb.fill(0.0);
            self.s = 1.0;
        } else {
            self.s *= factor;
            if self.s < 1e-9 {
                self.rescale();
            }
        }
    }

    fn rescale(&mut self) {
        let s = self.s;
        for row in &mut self.v {
            row.iter_mut().for_each(|w| *w *= s);
        }
        self.vb.iter_mut().for_each(|w| *w *= s);
        self.s = 1.0;
    }

    fn add(&mut self, k: usize, x: &SparseVec, amount: f64) {
        let a = amount / self.s;
        for &(j, xv) in &x.entries {
            if let Some(w) = self.v[k].get_mut(j as usize) {
                *w += a * xv;
            }
        }
        self.vb[k] += a;
    }

    fn into_models(mut self) -> Vec<LinearModel> {
        self.rescale();
        self.v
            .into_iter()
            .zip(self.vb)
            .map(|(w, vb)| LinearModel { w, b: -vb })
            .collect()
    }
}

impl BinaryLearner for LinearSvm {
    type Binary = LinearModel;

    fn train_binary(
        &self,
        xs: &[SparseVec],
        ys: &[bool],
        dim: usize,
        seed: u64,
    ) -> Result<LinearModel> {
        if xs.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidArgument("C must be positive".into()));
        }
        let m = xs.len();
        let lambda = 1.0 / (self.c * m as f64);
        let radius_sq = 1.0 / lambda;
        let mut w = Scaled::new(1, dim);
        let mut norm_sq = 0.0;
        let mut rng = rng_for(seed);
        let mut order: Vec<usize> = (0..m).collect();
        let mut t = 0u64;
        for _ in 0..self.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let x = &xs[i];
                let y = if ys[i] { 1.0 } else { -1.0 };
                let wx = w.s * w.raw(0, x);
                let margin = y * wx;
                let factor = 1.0 - eta * lambda;
                w.shrink(factor);
                // |w|² in real units, kept in step with the shrink and update.
                let (wx, mut nsq) = if factor <= 0.0 {
                    (0.0, 0.0)
                } else {
                    (factor * wx, norm_sq * factor * factor)
                };
                if margin < 1.0 {
                    let c = eta * y;
                    nsq += 2.0 * c * wx + c * c * (x.norm_sq() + 1.0);
                    w.add(0, x, c);
                }
                if nsq > radius_sq {
                    w.shrink((radius_sq / nsq).sqrt());
                    nsq = radius_sq;
                }
                norm_sq = nsq;
            }
        }
        Ok(w.into_models().pop().expect("one row"))
    }
}

impl MulticlassLearner for LinearSvm {
    type Multiclass = LinearMulticlass;

    fn train_multiclass(
        &self,
        xs: &[SparseVec],
        classes: &[usize],
        n_classes: usize,
        dim: usize,
        seed: u64,
    ) -> Result<LinearMulticlass> {
        if xs.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if xs.len() != classes.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: classes.len(),
            });
        }
        if classes.iter().any(|&c| c >= n_classes) {
            return Err(Error::InvalidArgument("class id out of range".into()));
        }
        let m = xs.len();
        let lambda = 1.0 / (self.c * m as f64);
        let mut w = Scaled::new(n_classes, dim);
        if n_classes > 1 {
            let mut rng = rng_for(seed);
            let mut order: Vec<usize> = (0..m).collect();
            let mut t = 0u64;
            for _ in 0..self.epochs {
                order.shuffle(&mut rng);
                for &i in &order {
                    t += 1;
                    let eta = 1.0 / (lambda * t as f64);
                    let x = &xs[i];
                    let y = classes[i];
                    let scores: Vec<f64> = (0..n_classes).map(|k| w.s * w.raw(k, x)).collect();
                    let mut rival = usize::MAX;
                    for k in 0..n_classes {
                        if k != y && (rival == usize::MAX || scores[k] > scores[rival]) {
                            rival = k;
                        }
                    }
                    w.shrink(1.0 - eta * lambda);
                    if scores[y] - scores[rival] < 1.0 {
                        w.add(y, x, eta);
                        w.add(rival, x, -eta);
                    }
                }
            }
        }
        Ok(LinearMulticlass {
            classes: w.into_models(),
        })
    }
}

// ---------------------------------------------------------------------------
// Training data and feature selection

/// Training vectors with their label sets, in the coordinates of `space`.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub space: &'a FeatureSpace,
    pub vectors: &'a [SparseVec],
    pub labels: &'a [BTreeSet<Category>],
}

fn check_percent(percent: u32) -> Result<()> {
    if percent == 0 || percent > 100 {
        return Err(Error::InvalidArgument(format!(
            "feature percentage must be in 1..=100, got {percent}"
        )));
    }
    Ok(())
}

/// Vectors restricted to the features selected by IG against `classes`.
/// Unselected features never reach the learner, so their weights stay zero
/// and prediction needs no mask.
fn select_for_task(
    space: &FeatureSpace,
    xs: &[SparseVec],
    classes: &[usize],
    n_classes: usize,
    percent: u32,
) -> Result<Vec<SparseVec>> {
    check_percent(percent)?;
    if percent == 100 {
        return Ok(xs.to_vec());
    }
    let present: Vec<Vec<u32>> = xs
        .iter()
        .map(|x| x.entries.iter().map(|&(i, _)| i).collect())
        .collect();
    let ig = information_gains(space.len(), &present, classes, n_classes)?;
    let keep = select_by_ig(space, &ig, percent)?;
    Ok(xs.iter().map(|x| x.masked(&keep)).collect())
}

// ---------------------------------------------------------------------------
// One-Versus-All

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvaModel<M> {
    pub categories: Vec<Category>,
    pub models: Vec<M>,
    pub theta: f64,
}

impl<M: BinaryModel> OvaModel<M> {
    pub fn decisions(&self, x: &SparseVec) -> Vec<f64> {
        self.models.iter().map(|m| m.decision(x)).collect()
    }

    pub fn predict(&self, x: &SparseVec) -> BTreeSet<Category> {
        self.predict_with(x, self.theta)
    }

    pub fn predict_with(&self, x: &SparseVec, theta: f64) -> BTreeSet<Category> {
        threshold_decisions(&self.categories, &self.decisions(x), theta)
    }
}

pub fn threshold_decisions(
    categories: &[Category],
    decisions: &[f64],
    theta: f64,
) -> BTreeSet<Category> {
    categories
        .iter()
        .zip(decisions)
        .filter(|(_, d)| **d > theta)
        .map(|(c, _)| c.clone())
        .collect()
}

fn train_per_category<L: BinaryLearner>(
    data: &TrainingData,
    categories: &[Category],
    learner: &L,
    percent: u32,
    seed: u64,
) -> Result<Vec<L::Binary>> {
    if data.vectors.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    categories
        .par_iter()
        .enumerate()
        .map(|(k, cat)| {
            let ys: Vec<bool> = data.labels.iter().map(|l| l.contains(cat)).collect();
            let classes: Vec<usize> = ys.iter().map(|&y| y as usize).collect();
            let xs = select_for_task(data.space, data.vectors, &classes, 2, percent)?;
            learner.train_binary(&xs, &ys, data.space.len(), sub_seed(seed, k))
        })
        .collect()
}

pub fn ova_train<L: BinaryLearner>(
    data: &TrainingData,
    categories: &[Category],
    learner: &L,
    theta: f64,
    percent: u32,
    seed: u64,
) -> Result<OvaModel<L::Binary>> {
    Ok(OvaModel {
        categories: categories.to_vec(),
        models: train_per_category(data, categories, learner, percent, seed)?,
        theta,
    })
}

// ---------------------------------------------------------------------------
// MetaLabeler

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel<B, M> {
    pub categories: Vec<Category>,
    pub binary: Vec<B>,
    /// Label counts seen in training; the cardinality model predicts an index.
    pub cardinalities: Vec<usize>,
    pub cardinality: M,
}

/// The `min(k, #positive)` categories with the highest positive decisions.
pub fn top_k_positive(categories: &[Category], decisions: &[f64], k: usize) -> BTreeSet<Category> {
    let mut positive: Vec<(f64, &Category)> = decisions
        .iter()
        .zip(categories)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, c)| (*d, c))
        .collect();
    positive.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    positive
        .into_iter()
        .take(k)
        .map(|(_, c)| c.clone())
        .collect()
}

impl<B: BinaryModel, M: MulticlassModel> MetaModel<B, M> {
    pub fn predicted_cardinality(&self, x: &SparseVec) -> usize {
        self.cardinalities[self.cardinality.predict(x)]
    }

    pub fn predict(&self, x: &SparseVec) -> BTreeSet<Category> {
        let decisions: Vec<f64> = self.binary.iter().map(|m| m.decision(x)).collect();
        top_k_positive(&self.categories, &decisions, self.predicted_cardinality(x))
    }
}

pub fn metalabeler_train<L: BinaryLearner + MulticlassLearner>(
    data: &TrainingData,
    categories: &[Category],
    learner: &L,
    percent: u32,
    seed: u64,
) -> Result<MetaModel<L::Binary, L::Multiclass>> {
    let binary = train_per_category(data, categories, learner, percent, seed)?;
    let universe: BTreeSet<&Category> = categories.iter().collect();
    let counts: Vec<usize> = data
        .labels
        .iter()
        .map(|l| l.iter().filter(|c| universe.contains(c)).count())
        .collect();
    let cardinalities: Vec<usize> = counts
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let classes: Vec<usize> = counts
        .iter()
        .map(|c| cardinalities.binary_search(c).expect("observed"))
        .collect();
    let xs = select_for_task(
        data.space,
        data.vectors,
        &classes,
        cardinalities.len(),
        percent,
    )?;
    let cardinality = learner.train_multiclass(
        &xs,
        &classes,
        cardinalities.len(),
        data.space.len(),
        sub_seed(seed, usize::MAX / 2),
    )?;
    Ok(MetaModel {
        categories: categories.to_vec(),
        binary,
        cardinalities,
        cardinality,
    })
}

// ---------------------------------------------------------------------------
// Pruned Sets

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrunedSetsParams {
    /// Minimum support of an accepted label set.
    pub p: usize,
    /// Minimum size of a subset taken from a rejected label set.
    pub b: usize,
    /// Ensemble size.
    pub m: usize,
    pub sample_fraction: f64,
}

impl Default for PrunedSetsParams {
    fn default() -> Self {
        PrunedSetsParams {
            p: 3,
            b: 2,
            m: 10,
            sample_fraction: 0.63,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedLabelSets {
    /// Accepted label sets; the position is the pseudo-label.
    pub accepted: Vec<BTreeSet<Category>>,
    /// Training instances as `(document index, pseudo-label)`.
    pub instances: Vec<(usize, usize)>,
}

fn proper_subsets(set: &BTreeSet<Category>, min_size: usize) -> Vec<BTreeSet<Category>> {
    let items: Vec<&Category> = set.iter().collect();
    let n = items.len();
    if n >= 64 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) - 1 {
        if (mask.count_ones() as usize) < min_size {
            continue;
        }
        out.push(
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, c)| (*c).clone())
                .collect(),
        );
    }
    out
}

/// Label sets seen at least `p` times are accepted as they are. Each
/// remaining instance is broken into its proper subsets of size at least
/// `b`; a subset is accepted when at least `p` training label sets contain
/// it, and the instance is reinstated once per accepted subset it contains.
pub fn prune_label_sets(
    labels: &[BTreeSet<Category>],
    p: usize,
    b: usize,
) -> Result<PrunedLabelSets> {
    if p == 0 || b == 0 {
        return Err(Error::InvalidArgument("p and b must be >= 1".into()));
    }
    let mut freq: BTreeMap<&BTreeSet<Category>, usize> = BTreeMap::new();
    for l in labels {
        *freq.entry(l).or_insert(0) += 1;
    }
    let mut accepted: BTreeSet<BTreeSet<Category>> = freq
        .iter()
        .filter(|(_, &f)| f >= p)
        .map(|(s, _)| (*s).clone())
        .collect();
    let rejected: Vec<usize> = (0..labels.len())
        .filter(|&i| freq[&labels[i]] < p)
        .collect();
    let mut candidates: BTreeSet<BTreeSet<Category>> = BTreeSet::new();
    for &i in &rejected {
        candidates.extend(proper_subsets(&labels[i], b));
    }
    let qualifying: Vec<BTreeSet<Category>> = candidates
        .into_iter()
        .filter(|s| labels.iter().filter(|l| s.is_subset(l)).count() >= p)
        .collect();
    accepted.extend(qualifying.iter().cloned());
    if accepted.is_empty() {
        return Err(Error::NoAcceptedLabelSets);
    }
    let accepted: Vec<BTreeSet<Category>> = accepted.into_iter().collect();
    let id_of = |s: &BTreeSet<Category>| accepted.binary_search(s).expect("accepted");
    let rejected_set: BTreeSet<usize> = rejected.iter().copied().collect();
    let mut instances = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        if rejected_set.contains(&i) {
            for s in &qualifying {
                if s.is_subset(l) {
                    instances.push((i, id_of(s)));
                }
            }
        } else {
            instances.push((i, id_of(l)));
        }
    }
    Ok(PrunedLabelSets {
        accepted,
        instances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedSetsModel<M> {
    pub label_sets: Vec<BTreeSet<Category>>,
    pub models: Vec<M>,
    pub t: f64,
}

const VOTE_EPS: f64 = 1e-9;

impl<M: MulticlassModel> PrunedSetsModel<M> {
    pub fn votes(&self, x: &SparseVec) -> BTreeMap<Category, usize> {
        let mut votes = BTreeMap::new();
        for m in &self.models {
            for c in &self.label_sets[m.predict(x)] {
                *votes.entry(c.clone()).or_insert(0) += 1;
            }
        }
        votes
    }

    pub fn predict(&self, x: &SparseVec) -> BTreeSet<Category> {
        self.predict_with(x, self.t)
    }

    pub fn predict_with(&self, x: &SparseVec, t: f64) -> BTreeSet<Category> {
        let m = self.models.len() as f64;
        self.votes(x)
            .into_iter()
            .filter(|&(_, v)| v as f64 / m >= t - VOTE_EPS)
            .map(|(c, _)| c)
            .collect()
    }
}

pub fn prunedsets_train<L: MulticlassLearner>(
    data: &TrainingData,
    learner: &L,
    params: &PrunedSetsParams,
    t: f64,
    percent: u32,
    seed: u64,
) -> Result<PrunedSetsModel<L::Multiclass>> {
    if params.m == 0 {
        return Err(Error::InvalidArgument("ensemble size must be >= 1".into()));
    }
    if !(params.sample_fraction > 0.0 && params.sample_fraction <= 1.0) {
        return Err(Error::InvalidArgument(
            "sample fraction must be in (0, 1]".into(),
        ));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(
            "vote threshold must be in (0, 1]".into(),
        ));
    }
    if data.vectors.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let pruned = prune_label_sets(data.labels, params.p, params.b)?;
    let n_classes = pruned.accepted.len();
    let inst_x: Vec<SparseVec> = pruned
        .instances
        .iter()
        .map(|&(d, _)| data.vectors[d].clone())
        .collect();
    let inst_y: Vec<usize> = pruned.instances.iter().map(|&(_, c)| c).collect();
    let xs = select_for_task(data.space, &inst_x, &inst_y, n_classes, percent)?;
    let n = xs.len();
    let size = ((params.sample_fraction * n as f64).round() as usize).clamp(1, n);
    let models = (0..params.m)
        .into_par_iter()
        .map(|j| {
            let s = sub_seed(seed, j);
            let mut rng = rng_for(s);
            let mut idx = rand::seq::index::sample(&mut rng, n, size).into_vec();
            idx.sort_unstable();
            let sx: Vec<SparseVec> = idx.iter().map(|&i| xs[i].clone()).collect();
            let sy: Vec<usize> = idx.iter().map(|&i| inst_y[i]).collect();
            learner.train_multiclass(&sx, &sy, n_classes, data.space.len(), s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrunedSetsModel {
        label_sets: pruned.accepted,
        models,
        t,
    })
}

// ---------------------------------------------------------------------------
// Schemes over documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum Scheme {
    Ova {
        theta: f64,
        percent: u32,
    },
    Meta {
        percent: u32,
    },
    #[serde(rename = "prunedsets")]
    PrunedSets {
        b: usize,
        p: usize,
        t: f64,
        percent: u32,
        m: usize,
        sample_fraction: f64,
    },
}

impl Scheme {
    /// The same scheme with prediction-time parameters neutralised; points
    /// sharing a key share one trained model.
    fn training_key(&self) -> String {
        match self {
            Scheme::Ova { percent, .. } => format!("ova/{percent}"),
            Scheme::Meta { percent } => format!("meta/{percent}"),
            Scheme::PrunedSets {
                b,
                p,
                percent,
                m,
                sample_fraction,
                ..
            } => format!("ps/{b}/{p}/{percent}/{m}/{sample_fraction}"),
        }
    }

    fn columns(&self) -> (&'static str, String) {
        match self {
            Scheme::Ova { theta, percent } => ("percent\ttheta", format!("{percent}\t{theta}")),
            Scheme::Meta { percent } => ("percent", format!("{percent}")),
            Scheme::PrunedSets {
                b, p, t, percent, ..
            } => ("b\tp\tt\tpercent", format!("{b}\t{p}\t{t}\t{percent}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SchemeModel {
    Ova(OvaModel<LinearModel>),
    Meta(MetaModel<LinearModel, LinearMulticlass>),
    #[serde(rename = "prunedsets")]
    PrunedSets(PrunedSetsModel<LinearMulticlass>),
}

impl SchemeModel {
    pub fn predict(&self, x: &SparseVec) -> BTreeSet<Category> {
        match self {
            SchemeModel::Ova(m) => m.predict(x),
            SchemeModel::Meta(m) => m.predict(x),
            SchemeModel::PrunedSets(m) => m.predict(x),
        }
    }

    fn predict_as(&self, x: &SparseVec, scheme: &Scheme) -> BTreeSet<Category> {
        match (self, scheme) {
            (SchemeModel::Ova(m), Scheme::Ova { theta, .. }) => m.predict_with(x, *theta),
            (SchemeModel::PrunedSets(m), Scheme::PrunedSets { t, .. }) => m.predict_with(x, *t),
            _ => self.predict(x),
        }
    }
}

pub fn train_scheme(
    data: &TrainingData,
    categories: &[Category],
    learner: &LinearSvm,
    scheme: &Scheme,
    seed: u64,
) -> Result<SchemeModel> {
    Ok(match *scheme {
        Scheme::Ova { theta, percent } => {
            SchemeModel::Ova(ova_train(data, categories, learner, theta, percent, seed)?)
        }
        Scheme::Meta { percent } => {
            SchemeModel::Meta(metalabeler_train(data, categories, learner, percent, seed)?)
        }
        Scheme::PrunedSets {
            b,
            p,
            t,
            percent,
            m,
            sample_fraction,
        } => {
            let universe: BTreeSet<&Category> = categories.iter().collect();
            let labels: Vec<BTreeSet<Category>> = data
                .labels
                .iter()
                .map(|l| l.iter().filter(|c| universe.contains(c)).cloned().collect())
                .collect();
            let restricted = TrainingData {
                labels: &labels,
                ..*data
            };
            let params = PrunedSetsParams {
                p,
                b,
                m,
                sample_fraction,
            };
            SchemeModel::PrunedSets(prunedsets_train(
                &restricted,
                learner,
                &params,
                t,
                percent,
                seed,
            )?)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub flags: FeatureFlags,
    pub stopwords: Stopwords,
    pub learner: LinearSvm,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            flags: FeatureFlags::default(),
            stopwords: Stopwords::english(),
            learner: LinearSvm::default(),
            seed: 0,
        }
    }
}

/// Feature space and vectors of a training corpus.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub space: FeatureSpace,
    pub vectors: Vec<SparseVec>,
    pub labels: Vec<BTreeSet<Category>>,
}

impl Prepared {
    pub fn new(
        train: &[Document],
        lexicon: Option<&Lexicon>,
        cfg: &PipelineConfig,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let lexicon = if cfg.flags.lexicon { lexicon } else { None };
        let space = FeatureSpace::build(train, &cfg.stopwords, cfg.flags, lexicon)?;
        let vectors = train.par_iter().map(|d| space.vectorize(d)).collect();
        let labels = train.iter().map(Document::label_set).collect();
        Ok(Prepared {
            space,
            vectors,
            labels,
        })
    }

    pub fn data(&self) -> TrainingData<'_> {
        TrainingData {
            space: &self.space,
            vectors: &self.vectors,
            labels: &self.labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub categories: Vec<Category>,
    pub scheme: Scheme,
    pub learner: LinearSvm,
    pub seed: u64,
    pub space: FeatureSpace,
    pub model: SchemeModel,
}

impl TrainedModel {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn fit(
        train: &[Document],
        categories: &[Category],
        lexicon: Option<&Lexicon>,
        cfg: &PipelineConfig,
        scheme: &Scheme,
    ) -> Result<Self> {
        let prepared = Prepared::new(train, lexicon, cfg)?;
        let model = train_scheme(&prepared.data(), categories, &cfg.learner, scheme, cfg.seed)?;
        Ok(TrainedModel {
            format_version: Self::FORMAT_VERSION,
            categories: categories.to_vec(),
            scheme: scheme.clone(),
            learner: cfg.learner,
            seed: cfg.seed,
            space: prepared.space,
            model,
        })
    }

    /// Label sets ordered by document id.
    pub fn predict(&self, docs: &[Document]) -> Vec<LabelSet> {
        let mut out: Vec<LabelSet> = docs
            .par_iter()
            .map(|d| LabelSet {
                document_id: d.id.clone(),
                labels: self.model.predict(&self.space.vectorize(d)),
            })
            .collect();
        out.sort_by(|a, b| a.document_id.cmp(&b.document_id));
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model always serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .skip_while(|l| l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        let version: serde_json::Value = serde_json::from_str(&body)?;
        let found = version
            .get("format_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if found != Self::FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found,
                expected: Self::FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_value(version)?)
    }

    pub fn save(&self, path: &Path, header: Option<&str>) -> Result<()> {
        io::write_text(path, &io::with_header(header, self.to_json()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&io::read_text(path)?)
    }
}

// ---------------------------------------------------------------------------
// Tuning

pub fn theta_grid() -> Vec<f64> {
    (0..21).map(|i| (i as f64 - 10.0) / 5.0).collect()
}

pub fn percent_grid() -> Vec<u32> {
    (1..=10).map(|i| i * 10).collect()
}

pub fn vote_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Ova {
        thetas: Vec<f64>,
        percents: Vec<u32>,
    },
    Meta {
        percents: Vec<u32>,
    },
    PrunedSets {
        bs: Vec<usize>,
        ps: Vec<usize>,
        ts: Vec<f64>,
        percents: Vec<u32>,
        m: usize,
        sample_fraction: f64,
    },
}

impl Grid {
    pub fn default_ova() -> Self {
        Grid::Ova {
            thetas: theta_grid(),
            percents: percent_grid(),
        }
    }

    pub fn default_meta() -> Self {
        Grid::Meta {
            percents: percent_grid(),
        }
    }

    pub fn default_pruned_sets(m: usize, sample_fraction: f64) -> Self {
        Grid::PrunedSets {
            bs: vec![2, 3, 5],
            ps: vec![3, 5, 10],
            ts: vote_grid(),
            percents: percent_grid(),
            m,
            sample_fraction,
        }
    }

    /// Every combination, outermost parameter first.
    pub fn points(&self) -> Vec<Scheme> {
        let mut out = Vec::new();
        match self {
            Grid::Ova { thetas, percents } => {
                for &percent in percents {
                    for &theta in thetas {
                        out.push(Scheme::Ova { theta, percent });
                    }
                }
            }
            Grid::Meta { percents } => {
                out.extend(percents.iter().map(|&percent| Scheme::Meta { percent }));
            }
            Grid::PrunedSets {
                bs,
                ps,
                ts,
                percents,
                m,
                sample_fraction,
            } => {
                for &b in bs {
                    for &p in ps {
                        for &t in ts {
                            for &percent in percents {
                                out.push(Scheme::PrunedSets {
                                    b,
                                    p,
                                    t,
                                    percent,
                                    m: *m,
                                    sample_fraction: *sample_fraction,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningRow {
    pub scheme: Scheme,
    pub prf: Prf,
    /// Set when the point could not be trained; it then scores zero.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub rows: Vec<TuningRow>,
    pub best: usize,
}

impl TuningReport {
    pub fn best(&self) -> &TuningRow {
        &self.rows[self.best]
    }

    pub fn to_tsv(&self, header: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(first) = self.rows.first() {
            out.push_str(first.scheme.columns().0);
            out.push_str("\tP\tR\tF\tnote\n");
        }
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                row.scheme.columns().1,
                100.0 * row.prf.precision,
                100.0 * row.prf.recall,
                100.0 * row.prf.f,
                row.note.as_deref().unwrap_or("")
            ));
        }
        io::with_header(header, out)
    }
}

/// Exhaustive search: evaluates every point and keeps the first with the
/// highest F.
pub fn tune_points<F>(points: &[Scheme], evaluate: F) -> Result<TuningReport>
where
    F: Fn(&Scheme) -> Result<(Prf, Option<String>)>,
{
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty tuning grid".into()));
    }
    let mut rows = Vec::with_capacity(points.len());
    let mut best = 0;
    for (i, s) in points.iter().enumerate() {
        let (prf, note) = evaluate(s)?;
        if prf.f
            > rows
                .get(best)
                .map_or(f64::NEG_INFINITY, |r: &TuningRow| r.prf.f)
        {
            best = i;
        }
        rows.push(TuningRow {
            scheme: s.clone(),
            prf,
            note,
        });
    }
    Ok(TuningReport { rows, best })
}

/// Trains on `train` once per distinct training configuration and scores
/// every grid point on `dev`.
pub fn tune(
    train: &[Document],
    dev: &[Document],
    categories: &[Category],
    lexicon: Option<&Lexicon>,
    cfg: &PipelineConfig,
    grid: &Grid,
) -> Result<TuningReport> {
    let prepared = Prepared::new(train, lexicon, cfg)?;
    let dev_vectors: Vec<SparseVec> = dev
        .par_iter()
        .map(|d| prepared.space.vectorize(d))
        .collect();
    let gold = gold_labels(dev);
    let points = grid.points();

    let mut keys: Vec<(String, &Scheme)> = Vec::new();
    for p in &points {
        let k = p.training_key();
        if !keys.iter().any(|(e, _)| *e == k) {
            keys.push((k, p));
        }
    }
    let trained: Vec<Option<SchemeModel>> = keys
        .par_iter()
        .map(
            |(_, s)| match train_scheme(&prepared.data(), categories, &cfg.learner, s, cfg.seed) {
                Ok(m) => Ok(Some(m)),
                Err(Error::NoAcceptedLabelSets) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect::<Result<_>>()?;
    let models: HashMap<&str, Option<&SchemeModel>> = keys
        .iter()
        .zip(&trained)
        .map(|((k, _), m)| (k.as_str(), m.as_ref()))
        .collect();

    tune_points(&points, |s| {
        let model = models[s.training_key().as_str()];
        let preds: Vec<LabelSet> = dev
            .iter()
            .zip(&dev_vectors)
            .map(|(d, x)| LabelSet {
                document_id: d.id.clone(),
                labels: model.map_or_else(BTreeSet::new, |m| m.predict_as(x, s)),
            })
            .collect();
        let counts = eval::count(&preds, &gold, categories)?;
        let note = model
            .is_none()
            .then(|| Error::NoAcceptedLabelSets.to_string());
        Ok((eval::micro_prf(&counts), note))
    })
}

// ---------------------------------------------------------------------------
// Cross-validation

/// Shuffles `0..n` with `seed` and cuts it into `k` folds; the first
/// `n mod k` folds get one extra item.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "cross-validation needs k >= 2".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let mut fold = idx[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub counts: eval::EvalCounts,
    /// Every pool document exactly once, ordered by id.
    pub predictions: Vec<LabelSet>,
}

/// For each fold, trains on `base_train` plus the other folds and predicts
/// the held-out fold. Counts are pooled before any score is computed.
pub fn cross_validate_augmented<F>(
    base_train: &[Document],
    eval_pool: &[Document],
    categories: &[Category],
    k: usize,
    seed: u64,
    fit_predict: F,
) -> Result<CvResult>
where
    F: Fn(&[Document], &[Document]) -> Result<Vec<LabelSet>> + Sync,
{
    let folds = fold_assignment(eval_pool.len(), k, seed)?;
    let per_fold: Vec<Vec<LabelSet>> = folds
        .par_iter()
        .map(|fold| {
            let held: BTreeSet<usize> = fold.iter().copied().collect();
            let mut train: Vec<Document> = base_train.to_vec();
            train.extend(
                eval_pool
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !held.contains(i))
                    .map(|(_, d)| d.clone()),
            );
            let test: Vec<Document> = fold.iter().map(|&i| eval_pool[i].clone()).collect();
            fit_predict(&train, &test)
        })
        .collect::<Result<_>>()?;
    let mut predictions: Vec<LabelSet> = per_fold.into_iter().flatten().collect();
    predictions.sort_by(|a, b| a.document_id.cmp(&b.document_id));
    let counts = eval::count(&predictions, &gold_labels(eval_pool), categories)?;
    Ok(CvResult {
        counts,
        predictions,
    })
}

/// Default SVM costs tried by [`select_c`].
pub fn c_grid() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0]
}

/// Picks the SVM cost by `k`-fold cross-validation on the training set.
/// Returns the first cost with the highest pooled micro-F and every
/// `(cost, score)` tried.
pub fn select_c(
    train: &[Document],
    categories: &[Category],
    lexicon: Option<&Lexicon>,
    cfg: &PipelineConfig,
    scheme: &Scheme,
    grid: &[f64],
    k: usize,
) -> Result<(f64, Vec<(f64, Prf)>)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty cost grid".into()));
    }
    if let Some(c) = grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "cost must be positive, got {c}"
        )));
    }
    let mut scores = Vec::with_capacity(grid.len());
    for &c in grid {
        let mut local = cfg.clone();
        local.learner.c = c;
        let cv = cross_validate_augmented(&[], train, categories, k, cfg.seed, |tr, te| {
            Ok(TrainedModel::fit(tr, categories, lexicon, &local, scheme)?.predict(te))
        })?;
        scores.push((c, eval::micro_prf(&cv.counts)));
    }
    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate() {
        if s.f > scores[best].1.f {
            best = i;
        }
    }
    Ok((scores[best].0, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sentences_from_text;

    fn sv(pairs: &[(u32, f64)]) -> SparseVec {
        SparseVec::from_pairs(pairs.to_vec())
    }

    fn cats(names: &[&str]) -> BTreeSet<Category> {
        names.iter().map(|c| Category::new(*c)).collect()
    }

    #[test]
    fn separable_binary() {
        let xs = vec![
            sv(&[(0, 2.0), (1, 1.0)]),
            sv(&[(0, 1.5), (1, 2.0)]),
            sv(&[(0, -1.0), (1, -2.0)]),
            sv(&[(0, -2.0), (1, -0.5)]),
        ];
        let ys = vec![true, true, false, false];
        let m = LinearSvm {
            c: 10.0,
            epochs: 50,
        }
        .train_binary(&xs, &ys, 2, 7)
        .unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.decision(x) > 0.0, *y);
        }
        let again = LinearSvm {
            c: 10.0,
            epochs: 50,
        }
        .train_binary(&xs, &ys, 2, 7)
        .unwrap();
        assert_eq!(m, again);
        assert!(LinearSvm::default().train_binary(&[], &[], 2, 0).is_err());
    }

    #[test]
    fn single_point_symmetry() {
        let x = sv(&[(0, 1.0), (2, 3.0)]);
        let m = LinearSvm::default()
            .train_binary(std::slice::from_ref(&x), &[true], 3, 1)
            .unwrap();
        let neg = sv(&[(0, -1.0), (2, -3.0)]);
        assert!(m.decision(&x) > m.decision(&neg));
    }

    #[test]
    fn multiclass_separable() {
        let xs = vec![
            sv(&[(0, 1.0)]),
            sv(&[(0, 1.2)]),
            sv(&[(1, 1.0)]),
            sv(&[(1, 0.8)]),
            sv(&[(2, 1.0)]),
            sv(&[(2, 1.1)]),
        ];
        let ys = vec![0, 0, 1, 1, 2, 2];
        let m = LinearSvm {
            c: 10.0,
            epochs: 50,
        }
        .train_multiclass(&xs, &ys, 3, 3, 3)
        .unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.predict(x), *y);
        }
    }

    #[test]
    fn ova_rule() {
        let c: Vec<Category> = ["S1", "S2", "S3"]
            .iter()
            .map(|s| Category::new(*s))
            .collect();
        assert_eq!(
            threshold_decisions(&c, &[0.5, -0.2, 0.1], 0.0),
            cats(&["S1", "S3"])
        );
        assert!(threshold_decisions(&c, &[0.5, -0.2, 0.1], 0.6).is_empty());
    }

    #[test]
    fn metalabeler_rule() {
        let c: Vec<Category> = ["a", "b", "c"].iter().map(|s| Category::new(*s)).collect();
        assert!(top_k_positive(&c, &[0.9, 0.4, 0.1], 0).is_empty());
        assert_eq!(top_k_positive(&c, &[0.9, 0.4, 0.1], 2), cats(&["a", "b"]));
        assert_eq!(top_k_positive(&c, &[0.9, -0.4, -0.1], 3), cats(&["a"]));
    }

    struct Fixed(usize);

    impl MulticlassModel for Fixed {
        fn predict(&self, _: &SparseVec) -> usize {
            self.0
        }
    }

    #[test]
    fn vote_composition() {
        let model = PrunedSetsModel {
            label_sets: vec![cats(&["l1", "l3"]), cats(&["l2", "l3"])],
            models: vec![Fixed(0), Fixed(1)],
            t: 0.5,
        };
        assert_eq!(
            model.predict(&SparseVec::default()),
            cats(&["l1", "l2", "l3"])
        );
        assert_eq!(
            model.predict_with(&SparseVec::default(), 1.0),
            cats(&["l3"])
        );
        let ten = PrunedSetsModel {
            label_sets: vec![cats(&["x"]), cats(&["y"])],
            models: (0..10).map(|i| Fixed(usize::from(i >= 7))).collect(),
            t: 0.5,
        };
        assert_eq!(ten.predict(&SparseVec::default()), cats(&["x"]));
    }

    #[test]
    fn pruning_rules() {
        let mut labels = vec![cats(&["A", "B"]); 6];
        labels.extend(vec![cats(&["C"]); 4]);
        let pr = prune_label_sets(&labels, 5, 1).unwrap();
        assert_eq!(pr.accepted, vec![cats(&["A", "B"])]);
        assert_eq!(pr.instances.len(), 6);
        let same = vec![cats(&["A"]); 3];
        assert_eq!(prune_label_sets(&same, 1, 1).unwrap().accepted.len(), 1);
        assert!(matches!(
            prune_label_sets(&[cats(&["A"])], 2, 1),
            Err(Error::NoAcceptedLabelSets)
        ));
    }

    #[test]
    fn pruning_reinstates_subsets() {
        // 12 docs: {A,B}x3, {A,B,C}x1, {A,B,D}x1, {C,D}x3, {A,C,D}x1, {B}x3
        let mut labels = Vec::new();
        labels.extend(vec![cats(&["A", "B"]); 3]);
        labels.push(cats(&["A", "B", "C"]));
        labels.push(cats(&["A", "B", "D"]));
        labels.extend(vec![cats(&["C", "D"]); 3]);
        labels.push(cats(&["A", "C", "D"]));
        labels.extend(vec![cats(&["B"]); 3]);
        let pr = prune_label_sets(&labels, 3, 2).unwrap();
        // full sets with freq >= 3: {A,B}, {C,D}, {B}. Size-2 subsets of the three
        // rejected sets with support >= 3: {A,B} (5), {C,D} (4). {A,C},{A,D},{B,C},{B,D} < 3.
        assert_eq!(
            pr.accepted,
            vec![cats(&["A", "B"]), cats(&["B"]), cats(&["C", "D"])]
        );
        let ab = 0;
        let cd = 2;
        assert!(pr.instances.contains(&(3, ab)));
        assert!(pr.instances.contains(&(4, ab)));
        assert!(pr.instances.contains(&(8, cd)));
        assert_eq!(pr.instances.len(), 9 + 3);
    }

    #[test]
    fn grids() {
        assert_eq!(Grid::default_ova().points().len(), 210);
        assert_eq!(Grid::default_pruned_sets(10, 0.63).points().len(), 900);
        assert_eq!(theta_grid()[0], -2.0);
        assert_eq!(theta_grid()[20], 2.0);
        let one = vec![Scheme::Meta { percent: 10 }];
        let r = tune_points(&one, |_| Ok((Prf::default(), None))).unwrap();
        assert_eq!(r.best().scheme, one[0]);
    }

    #[test]
    fn folds_partition() {
        let f = fold_assignment(1000, 5, 3).unwrap();
        assert!(f.iter().all(|x| x.len() == 200));
        let f = fold_assignment(12, 5, 3).unwrap();
        assert_eq!(
            f.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![3, 3, 2, 2, 2]
        );
        let all: BTreeSet<usize> = f.into_iter().flatten().collect();
        assert_eq!(all.len(), 12);
        assert!(fold_assignment(10, 1, 0).is_err());
    }

    fn labelled(id: &str, text: &str, labels: &[&str]) -> Document {
        Document {
            id: id.into(),
            raw_text: text.into(),
            sentences: sentences_from_text(text, None),
            labels: Some(cats(labels)),
        }
    }

    fn toy_corpus() -> Vec<Document> {
        let mut docs = Vec::new();
        for i in 0..40 {
            let (text, l): (&str, &[&str]) = match i % 4 {
                0 => ("thick fog over the runway", &["Weather"]),
                1 => ("crew fatigue after a long duty day", &["Fatigue"]),
                2 => ("fog and crew fatigue together", &["Weather", "Fatigue"]),
                _ => ("routine flight uneventful", &[]),
            };
            docs.push(labelled(&format!("d{i:02}"), text, l));
        }
        docs
    }

    #[test]
    fn end_to_end_schemes_and_round_trip() {
        let docs = toy_corpus();
        let categories: Vec<Category> = ["Fatigue", "Weather"]
            .iter()
            .map(|s| Category::new(*s))
            .collect();
        let cfg = PipelineConfig {
            flags: FeatureFlags {
                lexicon: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let gold = gold_labels(&docs);
        for scheme in [
            Scheme::Ova {
                theta: 0.0,
                percent: 100,
            },
            Scheme::Meta { percent: 50 },
            Scheme::PrunedSets {
                b: 1,
                p: 3,
                t: 0.5,
                percent: 100,
                m: 3,
                sample_fraction: 0.63,
            },
        ] {
            let model = TrainedModel::fit(&docs, &categories, None, &cfg, &scheme).unwrap();
            let preds = model.predict(&docs);
            let f = eval::micro_prf(&eval::count(&preds, &gold, &categories).unwrap()).f;
            assert!(f > 0.9, "{scheme:?}: {f}");
            let back = TrainedModel::from_json(&model.to_json()).unwrap();
            assert_eq!(back, model);
            assert_eq!(back.predict(&docs), preds);
        }
    }

    #[test]
    fn cost_selection_picks_from_grid() {
        let docs = toy_corpus();
        let categories: Vec<Category> = vec![Category::new("Fatigue"), Category::new("Weather")];
        let cfg = PipelineConfig {
            flags: FeatureFlags {
                lexicon: false,
                ..FeatureFlags::default()
            },
            ..PipelineConfig::default()
        };
        let scheme = Scheme::Ova {
            theta: 0.0,
            percent: 100,
        };
        let (c, scores) =
            select_c(&docs, &categories, None, &cfg, &scheme, &[0.1, 1.0], 2).unwrap();
        assert_eq!(scores.len(), 2);
        assert!(c == 0.1 || c == 1.0);
        assert!(select_c(&docs, &categories, None, &cfg, &scheme, &[], 2).is_err());
        assert!(select_c(&docs, &categories, None, &cfg, &scheme, &[-1.0], 2).is_err());
    }

    #[test]
    fn tune_and_cv_smoke() {
        let docs = toy_corpus();
        let categories: Vec<Category> = ["Fatigue", "Weather"]
            .iter()
            .map(|s| Category::new(*s))
            .collect();
        let cfg = PipelineConfig {
            flags: FeatureFlags {
                lexicon: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let grid = Grid::Ova {
            thetas: theta_grid(),
            percents: vec![50, 100],
        };
        let report = tune(&docs[..20], &docs[20..], &categories, None, &cfg, &grid).unwrap();
        assert_eq!(report.rows.len(), 42);
        assert!(report.best().prf.f > 0.9);
        assert_eq!(report.to_tsv(None).lines().count(), 43);

        let scheme = Scheme::Ova {
            theta: 0.0,
            percent: 100,
        };
        let cv =
            cross_validate_augmented(&docs[..8], &docs[8..], &categories, 5, 1, |train, test| {
                Ok(TrainedModel::fit(train, &categories, None, &cfg, &scheme)?.predict(test))
            })
            .unwrap();
        assert_eq!(cv.predictions.len(), 32);
        assert_eq!(cv.counts.docs, 32);
    }
}
