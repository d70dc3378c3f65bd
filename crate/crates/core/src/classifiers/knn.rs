use serde::{Deserialize, Serialize};

use super::{Classifier, ProbabilityVector};
use crate::data::{Dataset, Standardizer};
use crate::error::{check_dims, Error, Result};
use crate::neighbors::k_nearest;

/// k-nearest neighbors on standardized features. The probability of a
/// class is its frequency among the `k` neighbors; distance ties resolve
/// to the lower training row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KNearest {
    pub k: usize,
    pub standardizer: Standardizer,
    /// Standardized training rows, row-major.
    pub reference: Vec<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl KNearest {
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k-nearest needs k >= 1"));
        }
        let standardizer = Standardizer::fit(train)?;
        let reference = standardizer.transform(train)?.features().to_vec();
        Ok(Self {
            k,
            standardizer,
            reference,
            labels: train.labels().to_vec(),
            class_count: train.class_count(),
        })
    }

    pub fn neighbors(&self, row: &[f64]) -> Result<Vec<usize>> {
        let z = self.standardizer.transform_row(row)?;
        Ok(k_nearest(&self.reference, z.len(), &z, self.k))
    }
}

impl Classifier for KNearest {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn n_features(&self) -> usize {
        self.standardizer.n_features()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features(), row.len())?;
        let mut votes = vec![0.0; self.class_count];
        for i in self.neighbors(row)? {
            votes[self.labels[i]] += 1.0;
        }
        Ok(ProbabilityVector::from_weights(&votes))
    }
}
