//! Naive Bayes variants.
//!
//! Discrete variants need non-negative or binary inputs, while tabular data
//! is arbitrary real-valued. The Bernoulli model binarizes each feature at
//! its training median. The multinomial and complement models shift each
//! feature by its training minimum; prediction-time values below that
//! minimum clamp to zero. Discrete variants use Laplace smoothing (alpha = 1).

use serde::{Deserialize, Serialize};

use super::{require_all_classes, Classifier, ProbabilityVector};
use crate::data::Dataset;
use crate::error::{check_dims, Error, Result};

const VAR_FLOOR: f64 = 1e-9;
const ALPHA: f64 = 1.0;

fn log_priors(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// `[class][feature]`
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
}

impl GaussianNb {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let counts = require_all_classes(train, "gaussian naive bayes")?;
        let (c, f) = (train.class_count(), train.n_features());
        let mut means = vec![vec![0.0; f]; c];
        for (row, &y) in train.rows().zip(train.labels()) {
            for (m, &v) in means[y].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (m, &n) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= n as f64);
        }
        let mut variances = vec![vec![0.0; f]; c];
        for (row, &y) in train.rows().zip(train.labels()) {
            for ((s, &v), &m) in variances[y].iter_mut().zip(row).zip(&means[y]) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, &n) in variances.iter_mut().zip(&counts) {
            s.iter_mut()
                .for_each(|v| *v = (*v / n as f64).max(VAR_FLOOR));
        }
        let total = train.len() as f64;
        let priors = counts.iter().map(|&n| n as f64 / total).collect();
        Ok(Self {
            means,
            variances,
            priors,
        })
    }

    /// A model with explicit parameters. Variances are floored, priors must
    /// be positive.
    pub fn from_parameters(
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
        priors: Vec<f64>,
    ) -> Result<Self> {
        let c = priors.len();
        let f = means.first().map_or(0, Vec::len);
        if c < 2 || f == 0 || means.len() != c || variances.len() != c {
            return Err(Error::invalid(
                "inconsistent gaussian naive bayes parameters",
            ));
        }
        if means.iter().chain(&variances).any(|r| r.len() != f) {
            return Err(Error::invalid("ragged gaussian naive bayes parameters"));
        }
        if priors.iter().any(|&p| p <= 0.0) {
            return Err(Error::invalid("priors must be positive"));
        }
        let variances = variances
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.max(VAR_FLOOR)).collect())
            .collect();
        Ok(Self {
            means,
            variances,
            priors,
        })
    }
}

impl Classifier for GaussianNb {
    fn class_count(&self) -> usize {
        self.priors.len()
    }

    fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features(), row.len())?;
        let scores: Vec<f64> = (0..self.priors.len())
            .map(|c| {
                let ll: f64 = row
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.variances[c])
                    .map(|((&x, &m), &v)| {
                        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v)
                    })
                    .sum();
                self.priors[c].ln() + ll
            })
            .collect();
        Ok(ProbabilityVector::from_log_scores(&scores))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliNb {
    pub thresholds: Vec<f64>,
    /// `[class][feature]` probability that the binarized feature is 1.
    pub feature_probs: Vec<Vec<f64>>,
    pub log_priors: Vec<f64>,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl BernoulliNb {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let counts = require_all_classes(train, "bernoulli naive bayes")?;
        let (c, f) = (train.class_count(), train.n_features());
        let thresholds: Vec<f64> = (0..f).map(|j| median(train.column(j).collect())).collect();
        let mut ones = vec![vec![0.0; f]; c];
        for (row, &y) in train.rows().zip(train.labels()) {
            for ((o, &v), &t) in ones[y].iter_mut().zip(row).zip(&thresholds) {
                if v > t {
                    *o += 1.0;
                }
            }
        }
        let feature_probs = ones
            .into_iter()
            .zip(&counts)
            .map(|(o, &n)| {
                o.into_iter()
                    .map(|k| (k + ALPHA) / (n as f64 + 2.0 * ALPHA))
                    .collect()
            })
            .collect();
        Ok(Self {
            thresholds,
            feature_probs,
            log_priors: log_priors(&counts),
        })
    }
}

impl Classifier for BernoulliNb {
    fn class_count(&self) -> usize {
        self.log_priors.len()
    }

    fn n_features(&self) -> usize {
        self.thresholds.len()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features(), row.len())?;
        let scores: Vec<f64> = self
            .feature_probs
            .iter()
            .zip(&self.log_priors)
            .map(|(probs, &lp)| {
                lp + row
                    .iter()
                    .zip(&self.thresholds)
                    .zip(probs)
                    .map(|((&x, &t), &p)| if x > t { p.ln() } else { (1.0 - p).ln() })
                    .sum::<f64>()
            })
            .collect();
        Ok(ProbabilityVector::from_log_scores(&scores))
    }
}

fn column_minima(train: &Dataset) -> Vec<f64> {
    (0..train.n_features())
        .map(|j| train.column(j).fold(f64::INFINITY, f64::min))
        .collect()
}

fn shifted<'a>(row: &'a [f64], shift: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    row.iter().zip(shift).map(|(&x, &m)| (x - m).max(0.0))
}

/// Per-class sums of shifted feature values, `[class][feature]`.
fn shifted_sums(train: &Dataset, shift: &[f64]) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; train.n_features()]; train.class_count()];
    for (row, &y) in train.rows().zip(train.labels()) {
        for (s, v) in sums[y].iter_mut().zip(shifted(row, shift)) {
            *s += v;
        }
    }
    sums
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    pub shift: Vec<f64>,
    /// `[class][feature]`
    pub feature_log_probs: Vec<Vec<f64>>,
    pub log_priors: Vec<f64>,
}

impl MultinomialNb {
    pub fn fit(train: &Dataset) -> Result<Self> {
        let counts = require_all_classes(train, "multinomial naive bayes")?;
        let shift = column_minima(train);
        let f = train.n_features() as f64;
        let feature_log_probs = shifted_sums(train, &shift)
            .into_iter()
            .map(|s| {
                let total: f64 = s.iter().sum();
                s.iter()
                    .map(|&v| ((v + ALPHA) / (total + ALPHA * f)).ln())
                    .collect()
            })
            .collect();
        Ok(Self {
            shift,
            feature_log_probs,
            log_priors: log_priors(&counts),
        })
    }
}

impl Classifier for MultinomialNb {
    fn class_count(&self) -> usize {
        self.log_priors.len()
    }

    fn n_features(&self) -> usize {
        self.shift.len()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features(), row.len())?;
        let scores: Vec<f64> = self
            .feature_log_probs
            .iter()
            .zip(&self.log_priors)
            .map(|(w, &lp)| {
                lp + shifted(row, &self.shift)
                    .zip(w)
                    .map(|(x, w)| x * w)
                    .sum::<f64>()
            })
            .collect();
        Ok(ProbabilityVector::from_log_scores(&scores))
    }
}

/// Complement naive Bayes: each class is scored against the feature
/// distribution of all *other* classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementNb {
    pub shift: Vec<f64>,
    /// `[class][feature]` negated log complement probabilities.
    pub weights: Vec<Vec<f64>>,
}

impl ComplementNb {
    pub fn fit(train: &Dataset) -> Result<Self> {
        require_all_classes(train, "complement naive bayes")?;
        let shift = column_minima(train);
        let sums = shifted_sums(train, &shift);
        let f = train.n_features();
        let all: Vec<f64> = (0..f).map(|j| sums.iter().map(|s| s[j]).sum()).collect();
        let weights = sums
            .iter()
            .map(|s| {
                let comp: Vec<f64> = (0..f).map(|j| all[j] - s[j] + ALPHA).collect();
                let total: f64 = comp.iter().sum();
                comp.iter().map(|&v| -(v / total).ln()).collect()
            })
            .collect();
        Ok(Self { shift, weights })
    }
}

impl Classifier for ComplementNb {
    fn class_count(&self) -> usize {
        self.weights.len()
    }

    fn n_features(&self) -> usize {
        self.shift.len()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<ProbabilityVector> {
        check_dims(self.n_features(), row.len())?;
        let scores: Vec<f64> = self
            .weights
            .iter()
            .map(|w| shifted(row, &self.shift).zip(w).map(|(x, w)| x * w).sum())
            .collect();
        Ok(ProbabilityVector::from_log_scores(&scores))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};
    use statrs::distribution::{Continuous, Normal as Density};

    fn two_gaussians() -> GaussianNb {
        GaussianNb::from_parameters(
            vec![vec![0.0], vec![4.0]],
            vec![vec![1.0], vec![1.0]],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn symmetric_midpoint_is_even() {
        let p = two_gaussians().predict_proba(&[2.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn posterior_at_one_matches_density_ratio() {
        // N(1;0,1) / N(1;4,1) = exp((9 - 1) / 2) = e^4
        let oracle = {
            let a = Density::new(0.0, 1.0).unwrap().pdf(1.0);
            let b = Density::new(4.0, 1.0).unwrap().pdf(1.0);
            a / (a + b)
        };
        assert!((oracle - 1.0 / (1.0 + (-4.0f64).exp())).abs() < 1e-12);
        let model = two_gaussians();
        let p = model.predict_proba(&[1.0]).unwrap();
        assert!((p[0] - oracle).abs() < 1e-12);
        assert!((p[0] - 0.982_013_790_037_908_5).abs() < 1e-12);
        assert_eq!(model.predict(&[1.0]).unwrap(), 0);
    }

    #[test]
    fn gaussian_posterior_matches_density_oracle() {
        let mut rng = crate::rng::seeded(77);
        for _ in 0..50 {
            let (c, f) = (3, 4);
            let labels: Vec<usize> = (0..60).map(|i| i % c).collect();
            let features: Vec<f64> = (0..60 * f).map(|_| rng.random_range(-3.0..3.0)).collect();
            let model = GaussianNb::fit(&Dataset::new(features, f, labels, c).unwrap()).unwrap();
            let x: Vec<f64> = (0..f).map(|_| rng.random_range(-2.0..2.0)).collect();
            let joint: Vec<f64> = (0..c)
                .map(|k| {
                    model.priors[k]
                        * (0..f)
                            .map(|j| {
                                Density::new(model.means[k][j], model.variances[k][j].sqrt())
                                    .unwrap()
                                    .pdf(x[j])
                            })
                            .product::<f64>()
                })
                .collect();
            let z: f64 = joint.iter().sum();
            let p = model.predict_proba(&x).unwrap();
            for k in 0..c {
                assert!((p[k] - joint[k] / z).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gaussian_nb_separates_distant_classes() {
        let mut rng = crate::rng::seeded(3);
        let sample = |rng: &mut crate::rng::Rng, n: usize| {
            let mut features = Vec::new();
            let mut labels = Vec::new();
            for i in 0..n {
                let y = i % 2;
                let d = Normal::new(10.0 * y as f64, 1.0).unwrap();
                features.push(d.sample(rng));
                labels.push(y);
            }
            Dataset::new(features, 1, labels, 2).unwrap()
        };
        let train = sample(&mut rng, 200);
        let test = sample(&mut rng, 1000);
        let model = GaussianNb::fit(&train).unwrap();
        assert!(super::super::accuracy(&model, &test).unwrap() > 0.99);
    }

    #[test]
    fn absent_class_is_an_error() {
        let d = Dataset::new(vec![0.0, 1.0, 2.0], 1, vec![0, 0, 0], 2).unwrap();
        assert!(GaussianNb::fit(&d).is_err());
        assert!(BernoulliNb::fit(&d).is_err());
        assert!(MultinomialNb::fit(&d).is_err());
        assert!(ComplementNb::fit(&d).is_err());
    }

    #[test]
    fn discrete_variants_accept_negative_inputs() {
        let data = make_blobs(200, 2, 2, 6.0, 1).unwrap();
        let neg = Dataset::new(
            data.features().iter().map(|v| v - 50.0).collect(),
            2,
            data.labels().to_vec(),
            2,
        )
        .unwrap();
        for model in [
            super::super::Model::MultinomialNb(MultinomialNb::fit(&neg).unwrap()),
            super::super::Model::ComplementNb(ComplementNb::fit(&neg).unwrap()),
            super::super::Model::BernoulliNb(BernoulliNb::fit(&neg).unwrap()),
        ] {
            assert!(super::super::accuracy(&model, &neg).unwrap() > 0.8);
            // far below every training minimum
            let p = model.predict_proba(&[-1e6, -1e6]).unwrap();
            assert!(p.as_slice().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn bernoulli_binarizes_at_median() {
        let d = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], 1, vec![0, 0, 1, 1], 2).unwrap();
        let m = BernoulliNb::fit(&d).unwrap();
        assert_eq!(m.thresholds, vec![1.5]);
        // class 0: no ones out of 2 -> (0+1)/(2+2); class 1: (2+1)/(2+2)
        assert_eq!(m.feature_probs, vec![vec![0.25], vec![0.75]]);
    }
}
