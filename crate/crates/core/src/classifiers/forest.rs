use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::normalize_or_uniform;
use super::{ClassWeight, Classifier, DecisionTree, ProbabilityVector, TreeConfig};
use crate::data::Dataset;
use crate::error::{check_dims, Error, Result};
use crate::par::{self, Execution};
use crate::rng::{self, derive_seed};

pub use super::tree::MaxFeatures;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub class_weight: ClassWeight,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            class_weight: ClassWeight::Uniform,
        }
    }
}

/// Bagged CART trees; the forest probability is the mean of tree
/// probabilities. Tree `i` draws from `derive_seed(seed, i)`, so the model
/// does not depend on how training is scheduled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub class_count: usize,
}

impl RandomForest {
    pub fn fit(train: &Dataset, cfg: &ForestConfig, seed: u64) -> Result<Self> {
        Self::fit_with(train, cfg, seed, Execution::default())
    }

    pub fn fit_with(
        train: &Dataset,
        cfg: &ForestConfig,
        seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        if cfg.n_trees == 0 {
            return Err(Error::invalid("random forest needs at least one tree"));
        }
        if train.is_empty() {
            return Err(Error::invalid("random forest: training set is empty"));
        }
        let tree_cfg = TreeConfig {
            max_depth: cfg.max_depth,
            min_samples_split: 2,
            min_samples_leaf: cfg.min_samples_leaf,
            max_features: cfg.max_features,
            class_weight: cfg.class_weight,
        };
        let cw = cfg.class_weight.weights(train);
        let n = train.len();
        let trees = par::try_map_range(exec, cfg.n_trees, |t| {
            let mut rng = rng::seeded(derive_seed(seed, t as u64));
            let samples: Vec<(usize, f64)> = if cfg.bootstrap {
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                counts
                    .iter()
                    .enumerate()
                    .filter(|&(_, &k)| k > 0)
                    .map(|(i, &k)| (i, f64::from(k) * cw[train.label(i)]))
                    .collect()
            } else {
                (0..n).map(|i| (i, cw[train.label(i)])).collect()
            };
            DecisionTree::fit_weighted(train, samples, &tree_cfg, &mut rng)
        })?;
        Ok(Self {
            trees,
            n_features: train.n_features(),
            class_count: train.class_count(),
        })
    }

    /// Mean-decrease-in-impurity importances, summing to one.
    ///
    /// Each tree's importances are normalized, trees that never split are
    /// skipped, and the mean is renormalized. A forest without a single
    /// split reports the uniform vector `1/f`.
    pub fn feature_importances(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        for tree in self.trees.iter().filter(|t| t.nodes.len() > 1) {
            let dec = tree.impurity_decrease();
            let total: f64 = dec.iter().sum();
            if total > 0.0 {
                for (a, d) in acc.iter_mut().zip(dec) {
                    *a += d / total;
                }
            }
        }
        normalize_or_uniform(acc)
    }
}

impl Classifier for RandomForest {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features, row.len())?;
        let mut mean = vec![0.0; self.class_count];
        for tree in &self.trees {
            let p = tree.predict_proba(row)?;
            for (m, v) in mean.iter_mut().zip(p.as_slice()) {
                *m += v;
            }
        }
        let k = self.trees.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        Ok(ProbabilityVector::from_weights(&mean))
    }
}
