use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{require_all_classes, Classifier, ProbabilityVector};
use crate::data::Dataset;
use crate::error::{check_dims, Error, Result};

/// Added to the pooled covariance diagonal; collinear features otherwise
/// make it singular.
const RIDGE: f64 = 1e-6;

/// Linear discriminant analysis with a pooled within-class covariance.
///
/// Scores are `x' S^-1 mu_c - mu_c' S^-1 mu_c / 2 + ln prior_c`, turned
/// into probabilities with a softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDiscriminant {
    /// `[class][feature]`
    pub coefficients: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

impl LinearDiscriminant {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let counts = require_all_classes(train, "linear discriminant")?;
        let (c, f, n) = (train.class_count(), train.n_features(), train.len());
        let mut means = vec![DVector::<f64>::zeros(f); c];
        for (row, &y) in train.rows().zip(train.labels()) {
            means[y] += DVector::from_column_slice(row);
        }
        for (m, &k) in means.iter_mut().zip(&counts) {
            *m /= k as f64;
        }
        let mut scatter = DMatrix::<f64>::zeros(f, f);
        for (row, &y) in train.rows().zip(train.labels()) {
            let d = DVector::from_column_slice(row) - &means[y];
            scatter.ger(1.0, &d, &d, 1.0);
        }
        let dof = n.saturating_sub(c).max(1) as f64;
        let cov = scatter / dof + DMatrix::<f64>::identity(f, f) * RIDGE;
        let chol = cov.cholesky().ok_or_else(|| {
            Error::invalid("linear discriminant: covariance is not positive definite")
        })?;
        let mut coefficients = Vec::with_capacity(c);
        let mut intercepts = Vec::with_capacity(c);
        for (m, &k) in means.iter().zip(&counts) {
            let w = chol.solve(m);
            intercepts.push(-0.5 * m.dot(&w) + (k as f64 / n as f64).ln());
            coefficients.push(w.iter().copied().collect());
        }
        Ok(Self {
            coefficients,
            intercepts,
        })
    }
}

impl Classifier for LinearDiscriminant {
    fn class_count(&self) -> usize {
        self.intercepts.len()
    }

    fn n_features(&self) -> usize {
        self.coefficients[0].len()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features(), row.len())?;
        let scores: Vec<f64> = self
            .coefficients
            .iter()
            .zip(&self.intercepts)
            .map(|(w, &b)| b + w.iter().zip(row).map(|(w, x)| w * x).sum::<f64>())
            .collect();
        Ok(ProbabilityVector::from_log_scores(&scores))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;

    #[test]
    fn equal_covariance_midpoint() {
        // two classes at -1 and +1, equal priors: the boundary is at 0
        let d = Dataset::new(vec![-2.0, 0.0, 0.0, 2.0], 1, vec![0, 0, 1, 1], 2).unwrap();
        let m = LinearDiscriminant::fit(&d).unwrap();
        let p = m.predict_proba(&[0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9);
        assert_eq!(m.predict(&[-0.5]).unwrap(), 0);
        assert_eq!(m.predict(&[0.5]).unwrap(), 1);
    }

    #[test]
    fn collinear_features_still_fit() {
        let base = make_blobs(100, 1, 2, 3.0, 4).unwrap();
        let features: Vec<f64> = base.features().iter().flat_map(|&v| [v, 2.0 * v]).collect();
        let d = Dataset::new(features, 2, base.labels().to_vec(), 2).unwrap();
        let m = LinearDiscriminant::fit(&d).unwrap();
        assert!(crate::classifiers::accuracy(&m, &d).unwrap() > 0.8);
    }
}
