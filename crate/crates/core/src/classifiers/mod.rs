//! Black-box classifier contract and the built-in reference classifiers.
//!
//! The wrapper only ever needs [`Classifier::predict_proba`]; everything
//! else derives from it. The reference implementations double as wrapped
//! models, checkers for the agreement measures, baggers and the
//! adjudicator's forest.

mod forest;
mod knn;
mod lda;
mod logistic;
mod naive_bayes;
mod tree;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub use forest::{ForestConfig, MaxFeatures, RandomForest};
pub use knn::KNearest;
pub use lda::LinearDiscriminant;
pub use logistic::{LogisticConfig, LogisticRegression};
pub use naive_bayes::{BernoulliNb, ComplementNb, GaussianNb, MultinomialNb};
pub use tree::{ClassWeight, DecisionTree, TreeConfig, TreeNode};

/// Per-class probabilities: non-negative, summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty probability vector"));
        }
        if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(format!(
                "probability outside [0,1] in {values:?}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}")));
        }
        Ok(Self(values))
    }

    /// Normalizes non-negative weights; all-zero weights give the uniform vector.
    pub fn from_weights(weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            Self(weights.iter().map(|w| w / total).collect())
        } else {
            Self::uniform(weights.len())
        }
    }

    /// Softmax of joint log-likelihoods.
    pub fn from_log_scores(scores: &[f64]) -> Self {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Self::uniform(scores.len());
        }
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        Self::from_weights(&exp)
    }

    pub fn uniform(c: usize) -> Self {
        Self(vec![1.0 / c as f64; c])
    }

    pub fn one_hot(c: usize, class: usize) -> Self {
        let mut v = vec![0.0; c];
        v[class] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn class_count(&self) -> usize {
        self.0.len()
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.0[self.argmax()]
    }

    /// Shannon entropy divided by `ln c`, with `0 ln 0 = 0`. Exactly 1 for
    /// a vector of equal entries.
    pub fn normalized_entropy(&self) -> Result<f64> {
        let c = self.0.len();
        if c < 2 {
            return Err(Error::invalid("entropy needs at least 2 classes"));
        }
        if self.0.iter().all(|&p| p == self.0[0]) {
            return Ok(1.0);
        }
        let h: f64 = self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        Ok((h / (c as f64).ln()).clamp(0.0, 1.0))
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Anything that labels a feature row and exposes its class probabilities.
pub trait Classifier: Send + Sync {
    fn class_count(&self) -> usize;

    fn n_features(&self) -> usize;

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector>;

    fn predict(&self, row: &[f64]) -> Result<usize> {
        Ok(self.predict_proba(row)?.argmax())
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        (**self).predict_proba(row)
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        (**self).predict_proba(row)
    }
}

/// Training recipe for a reference classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierConfig {
    GaussianNb,
    BernoulliNb,
    MultinomialNb,
    ComplementNb,
    LinearDiscriminant,
    LogisticRegression(LogisticConfig),
    DecisionTree(TreeConfig),
    RandomForest(ForestConfig),
    KNearest { k: usize },
}

impl ClassifierConfig {
    pub fn logistic() -> Self {
        Self::LogisticRegression(LogisticConfig::default())
    }

    pub fn tree() -> Self {
        Self::DecisionTree(TreeConfig::default())
    }

    pub fn forest() -> Self {
        Self::RandomForest(ForestConfig::default())
    }

    /// Short kind tag, as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianNb => "gaussian-nb",
            Self::BernoulliNb => "bernoulli-nb",
            Self::MultinomialNb => "multinomial-nb",
            Self::ComplementNb => "complement-nb",
            Self::LinearDiscriminant => "lda",
            Self::LogisticRegression(_) => "logistic",
            Self::DecisionTree(_) => "tree",
            Self::RandomForest(_) => "forest",
            Self::KNearest { .. } => "knn",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "gaussian-nb" => Self::GaussianNb,
            "bernoulli-nb" => Self::BernoulliNb,
            "multinomial-nb" => Self::MultinomialNb,
            "complement-nb" => Self::ComplementNb,
            "lda" => Self::LinearDiscriminant,
            "logistic" => Self::logistic(),
            "tree" => Self::tree(),
            "forest" => Self::forest(),
            "knn" => Self::KNearest { k: 5 },
            other => return Err(Error::invalid(format!("unknown classifier `{other}`"))),
        })
    }

    /// Trains on `train`. `seed` drives every random choice, so equal
    /// inputs give identical models.
    pub fn fit(&self, train: &Dataset, seed: u64) -> Result<Model> {
        if train.is_empty() {
            return Err(Error::invalid("training set is empty"));
        }
        Ok(match self {
            Self::GaussianNb => Model::GaussianNb(GaussianNb::fit(train)?),
            Self::BernoulliNb => Model::BernoulliNb(BernoulliNb::fit(train)?),
            Self::MultinomialNb => Model::MultinomialNb(MultinomialNb::fit(train)?),
            Self::ComplementNb => Model::ComplementNb(ComplementNb::fit(train)?),
            Self::LinearDiscriminant => Model::LinearDiscriminant(LinearDiscriminant::fit(train)?),
            Self::LogisticRegression(cfg) => {
                Model::LogisticRegression(LogisticRegression::fit(train, cfg)?)
            }
            Self::DecisionTree(cfg) => Model::DecisionTree(DecisionTree::fit(train, cfg, seed)?),
            Self::RandomForest(cfg) => Model::RandomForest(RandomForest::fit(train, cfg, seed)?),
            Self::KNearest { k } => Model::KNearest(KNearest::fit(train, *k)?),
        })
    }
}

/// A trained reference classifier; persists as tagged JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    GaussianNb(GaussianNb),
    BernoulliNb(BernoulliNb),
    MultinomialNb(MultinomialNb),
    ComplementNb(ComplementNb),
    LinearDiscriminant(LinearDiscriminant),
    LogisticRegression(LogisticRegression),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    KNearest(KNearest),
}

impl Model {
    fn inner(&self) -> &dyn Classifier {
        match self {
            Model::GaussianNb(m) => m,
            Model::BernoulliNb(m) => m,
            Model::MultinomialNb(m) => m,
            Model::ComplementNb(m) => m,
            Model::LinearDiscriminant(m) => m,
            Model::LogisticRegression(m) => m,
            Model::DecisionTree(m) => m,
            Model::RandomForest(m) => m,
            Model::KNearest(m) => m,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

impl Classifier for Model {
    fn class_count(&self) -> usize {
        self.inner().class_count()
    }

    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        self.inner().predict_proba(row)
    }
}

/// Fraction of rows whose prediction matches the label.
pub fn accuracy<C: Classifier + ?Sized>(clf: &C, data: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for (row, &y) in data.rows().zip(data.labels()) {
        if clf.predict(row)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

pub(crate) fn require_all_classes(train: &Dataset, who: &str) -> Result<Vec<usize>> {
    let counts = train.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::invalid(format!(
            "{who}: class {c} absent from training data"
        )));
    }
    Ok(counts)
}
