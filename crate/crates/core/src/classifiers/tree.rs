//! CART classification tree with Gini impurity.
//!
//! Training rows carry weights (bootstrap multiplicity times class weight);
//! node values are weighted class totals and leaf probabilities are those
//! totals normalized. Among equally good splits the lowest feature index
//! wins, then the lowest threshold.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Classifier, ProbabilityVector};
use crate::data::Dataset;
use crate::error::{check_dims, Error, Result};
use crate::rng::{self, Rng};

/// Splits whose child impurity differs by less than this count as ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    #[default]
    Uniform,
    /// `n / (c * n_k)` for class `k`, so every class carries equal total weight.
    Balanced,
}

impl ClassWeight {
    pub fn weights(self, data: &Dataset) -> Vec<f64> {
        match self {
            ClassWeight::Uniform => vec![1.0; data.class_count()],
            ClassWeight::Balanced => {
                let counts = data.class_counts();
                let present = counts.iter().filter(|&&k| k > 0).count().max(1) as f64;
                counts
                    .iter()
                    .map(|&k| {
                        if k == 0 {
                            0.0
                        } else {
                            data.len() as f64 / (present * k as f64)
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Number of features examined at each split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    Sqrt,
    Log2,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let f = n_features as f64;
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => f.sqrt().floor() as usize,
            MaxFeatures::Log2 => f.log2().floor() as usize,
            MaxFeatures::Count(k) => k,
            MaxFeatures::Fraction(r) => (r * f).round() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub class_weight: ClassWeight,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            class_weight: ClassWeight::Uniform,
        }
    }
}

/// One node of the flattened tree. Leaves have `feature == None`; inner
/// nodes send `x[feature] <= threshold` left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Weighted class totals of the training rows reaching this node.
    pub value: Vec<f64>,
    pub impurity: f64,
    pub weight: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub class_count: usize,
}

fn gini(value: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - value.iter().map(|v| (v / total) * (v / total)).sum::<f64>()
}

struct Builder<'a> {
    data: &'a Dataset,
    cfg: &'a TreeConfig,
    n_candidates: usize,
    nodes: Vec<TreeNode>,
    rng: &'a mut Rng,
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Number of samples going left, in the order sorted by `feature`.
    n_left: usize,
}

impl Builder<'_> {
    fn node_value(&self, samples: &[(usize, f64)]) -> (Vec<f64>, f64) {
        let mut value = vec![0.0; self.data.class_count()];
        for &(i, w) in samples {
            value[self.data.label(i)] += w;
        }
        let total = value.iter().sum();
        (value, total)
    }

    fn candidate_features(&mut self, samples: &[(usize, f64)]) -> Vec<usize> {
        let f = self.data.n_features();
        let mut order: Vec<usize> = (0..f).collect();
        if self.n_candidates < f {
            order.shuffle(self.rng);
        }
        let mut picked = Vec::with_capacity(self.n_candidates);
        for j in order {
            let first = self.data.row(samples[0].0)[j];
            if samples.iter().any(|&(i, _)| self.data.row(i)[j] != first) {
                picked.push(j);
                if picked.len() == self.n_candidates {
                    break;
                }
            }
        }
        picked.sort_unstable();
        picked
    }

    fn best_split(&mut self, samples: &mut [(usize, f64)], total: f64) -> Option<Split> {
        let c = self.data.class_count();
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let mut best: Option<(f64, Split)> = None;
        for j in self.candidate_features(samples) {
            let data = self.data;
            samples.sort_by(|a, b| data.row(a.0)[j].total_cmp(&data.row(b.0)[j]));
            let mut left = vec![0.0; c];
            let (mut right, _) = self.node_value(samples);
            let mut w_left = 0.0;
            for pos in 0..samples.len() - 1 {
                let (i, w) = samples[pos];
                let y = data.label(i);
                left[y] += w;
                right[y] -= w;
                w_left += w;
                let x = data.row(i)[j];
                let next = data.row(samples[pos + 1].0)[j];
                if x == next || pos + 1 < min_leaf || samples.len() - pos - 1 < min_leaf {
                    continue;
                }
                let w_right = total - w_left;
                let child =
                    (w_left * gini(&left, w_left) + w_right * gini(&right, w_right)) / total;
                if best.as_ref().is_none_or(|(b, _)| child + TIE_EPS < *b) {
                    let mut threshold = x + (next - x) / 2.0;
                    if threshold >= next {
                        threshold = x;
                    }
                    best = Some((
                        child,
                        Split {
                            feature: j,
                            threshold,
                            n_left: pos + 1,
                        },
                    ));
                }
            }
        }
        best.map(|(_, s)| s)
    }

    fn grow(&mut self, samples: &mut [(usize, f64)], depth: usize) -> usize {
        let (value, total) = self.node_value(samples);
        let impurity = gini(&value, total);
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
            impurity,
            weight: total,
            samples: samples.len(),
        });
        let stop = impurity <= 1e-15
            || self.cfg.max_depth.is_some_and(|d| depth >= d)
            || samples.len() < self.cfg.min_samples_split.max(2)
            || samples.len() < 2 * self.cfg.min_samples_leaf.max(1);
        if stop {
            return id;
        }
        let Some(split) = self.best_split(samples, total) else {
            return id;
        };
        let data = self.data;
        samples
            .sort_by(|a, b| data.row(a.0)[split.feature].total_cmp(&data.row(b.0)[split.feature]));
        let (l, r) = samples.split_at_mut(split.n_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        let node = &mut self.nodes[id];
        node.feature = Some(split.feature);
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        id
    }
}

impl DecisionTree {
    pub fn fit(train: &Dataset, cfg: &TreeConfig, seed: u64) -> Result<Self> {
        let cw = cfg.class_weight.weights(train);
        let samples: Vec<(usize, f64)> =
            (0..train.len()).map(|i| (i, cw[train.label(i)])).collect();
        Self::fit_weighted(train, samples, cfg, &mut rng::seeded(seed))
    }

    /// Trains on `(row index, weight)` pairs of `train`.
    pub fn fit_weighted(
        train: &Dataset,
        mut samples: Vec<(usize, f64)>,
        cfg: &TreeConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("decision tree: no training samples"));
        }
        let mut builder = Builder {
            data: train,
            cfg,
            n_candidates: cfg.max_features.resolve(train.n_features()),
            nodes: Vec::new(),
            rng,
        };
        builder.grow(&mut samples, 0);
        Ok(Self {
            nodes: builder.nodes,
            n_features: train.n_features(),
            class_count: train.class_count(),
        })
    }

    /// Index of the leaf reached by `row`.
    pub fn apply(&self, row: &[f64]) -> usize {
        let mut id = 0;
        while let Some(j) = self.nodes[id].feature {
            let node = &self.nodes[id];
            id = if row[j] <= node.threshold {
                node.left
            } else {
                node.right
            };
        }
        id
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match nodes[id].feature {
                None => 0,
                Some(_) => 1 + walk(nodes, nodes[id].left).max(walk(nodes, nodes[id].right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Total weighted impurity decrease per feature, unnormalized.
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let Some(j) = node.feature {
                let (l, r) = (&self.nodes[node.left], &self.nodes[node.right]);
                out[j] +=
                    node.weight * node.impurity - l.weight * l.impurity - r.weight * r.impurity;
            }
        }
        out.iter_mut().for_each(|v| *v = v.max(0.0));
        out
    }

    /// Normalized mean impurity decrease; uniform when the tree never splits.
    pub fn feature_importances(&self) -> Vec<f64> {
        normalize_or_uniform(self.impurity_decrease())
    }
}

pub(crate) fn normalize_or_uniform(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

impl Classifier for DecisionTree {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features, row.len())?;
        Ok(ProbabilityVector::from_weights(
            &self.nodes[self.apply(row)].value,
        ))
    }
}
