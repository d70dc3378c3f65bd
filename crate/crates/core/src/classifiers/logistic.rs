use serde::{Deserialize, Serialize};

use super::{Classifier, ProbabilityVector};
use crate::data::{Dataset, Standardizer};
use crate::error::{check_dims, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.1,
        }
    }
}

/// Multinomial logistic regression trained by full-batch gradient descent
/// on softmax cross-entropy from zero weights. Inputs are standardized
/// internally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub standardizer: Standardizer,
    /// `[class][feature]`
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LogisticRegression {
    pub fn fit(train: &Dataset, cfg: &LogisticConfig) -> Result<Self> {
        let standardizer = if train.len() >= 2 {
            Standardizer::fit(train)?
        } else {
            Standardizer {
                means: vec![0.0; train.n_features()],
                stds: vec![1.0; train.n_features()],
            }
        };
        let z = standardizer.transform(train)?;
        let (c, f) = (train.class_count(), train.n_features());
        let n = train.len() as f64;
        let mut model = Self {
            standardizer,
            weights: vec![vec![0.0; f]; c],
            biases: vec![0.0; c],
        };
        let mut grad_w = vec![vec![0.0; f]; c];
        let mut grad_b = vec![0.0; c];
        for _ in 0..cfg.epochs {
            grad_w.iter_mut().for_each(|g| g.fill(0.0));
            grad_b.fill(0.0);
            for (row, &y) in z.rows().zip(z.labels()) {
                let p = model.proba_standardized(row);
                for k in 0..c {
                    let err = p[k] - if k == y { 1.0 } else { 0.0 };
                    grad_b[k] += err;
                    for (g, &x) in grad_w[k].iter_mut().zip(row) {
                        *g += err * x;
                    }
                }
            }
            let step = cfg.learning_rate / n;
            for k in 0..c {
                model.biases[k] -= step * grad_b[k];
                for (w, g) in model.weights[k].iter_mut().zip(&grad_w[k]) {
                    *w -= step * g;
                }
            }
        }
        Ok(model)
    }

    fn proba_standardized(&self, z: &[f64]) -> ProbabilityVector {
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| b + w.iter().zip(z).map(|(w, x)| w * x).sum::<f64>())
            .collect();
        ProbabilityVector::from_log_scores(&scores)
    }
}

impl Classifier for LogisticRegression {
    fn class_count(&self) -> usize {
        self.biases.len()
    }

    fn n_features(&self) -> usize {
        self.standardizer.n_features()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features(), row.len())?;
        Ok(self.proba_standardized(&self.standardizer.transform_row(row)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;

    #[test]
    fn learns_separable_blobs() {
        let d = make_blobs(300, 2, 3, 8.0, 2).unwrap();
        let m = LogisticRegression::fit(&d, &LogisticConfig::default()).unwrap();
        assert!(crate::classifiers::accuracy(&m, &d).unwrap() > 0.97);
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let d = make_blobs(20, 2, 2, 3.0, 2).unwrap();
        let m = LogisticRegression::fit(
            &d,
            &LogisticConfig {
                epochs: 0,
                learning_rate: 0.1,
            },
        )
        .unwrap();
        assert_eq!(
            m.predict_proba(&[5.0, 5.0]).unwrap(),
            ProbabilityVector::uniform(2)
        );
    }
}
