use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{IntervalKind, MeasureConfig, PosteriorSummary};
use crate::autoencoder::Autoencoder;
use crate::classifiers::{Classifier, ClassifierConfig, GaussianNb, Model, ProbabilityVector};
use crate::data::{Dataset, Standardizer};
use crate::error::{check_dims, Error, Result};
use crate::neighbors::k_nearest;
use crate::rng::{derive_seed, seeded};

/// Tolerance inside which a constant feature still counts as in range.
const CONSTANT_TOLERANCE: f64 = 1e-9;

/// Per-feature acceptance intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureIntervals {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FeatureIntervals {
    pub fn fit(train: &Dataset, confidence: f64, kind: IntervalKind) -> Result<Self> {
        let f = train.n_features();
        let mut lower = Vec::with_capacity(f);
        let mut upper = Vec::with_capacity(f);
        for j in 0..f {
            let col: Vec<f64> = train.column(j).collect();
            let (lo, hi) = match kind {
                IntervalKind::Normal => {
                    let n = col.len() as f64;
                    let mean = col.iter().sum::<f64>() / n;
                    let std = if col.len() > 1 {
                        (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                    } else {
                        0.0
                    };
                    let z = two_sided_quantile(confidence);
                    (mean - z * std, mean + z * std)
                }
                IntervalKind::Empirical => {
                    let mut sorted = col;
                    sorted.sort_by(f64::total_cmp);
                    (
                        quantile(&sorted, (1.0 - confidence) / 2.0),
                        quantile(&sorted, (1.0 + confidence) / 2.0),
                    )
                }
            };
            if hi - lo < 2.0 * CONSTANT_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                lower.push(mid - CONSTANT_TOLERANCE);
                upper.push(mid + CONSTANT_TOLERANCE);
            } else {
                lower.push(lo);
                upper.push(hi);
            }
        }
        Ok(Self { lower, upper })
    }

    /// Fraction of features strictly outside their interval.
    pub fn outside_fraction(&self, row: &[f64]) -> Result<f64> {
        check_dims(self.lower.len(), row.len())?;
        let outside = row
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(&x, (&lo, &hi))| x < lo || x > hi)
            .count();
        Ok(outside as f64 / row.len() as f64)
    }
}

/// `z` such that `P(|Z| <= z) = confidence` for standard normal `Z`.
pub(crate) fn two_sided_quantile(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf((1.0 + confidence) / 2.0)
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(&next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

pub fn max_probability(proba: &ProbabilityVector) -> f64 {
    proba.max()
}

pub fn normalized_entropy(proba: &ProbabilityVector) -> Result<f64> {
    proba.normalized_entropy()
}

/// Signed checker confidence: `+(1 - H)` when the checker's class equals
/// `predicted`, `-(1 - H)` otherwise, `H` the checker's normalized entropy.
pub fn checker_agreement<C: Classifier + ?Sized>(
    checker: &C,
    row: &[f64],
    predicted: usize,
) -> Result<f64> {
    let proba = checker.predict_proba(row)?;
    let magnitude = 1.0 - proba.normalized_entropy()?;
    Ok(if proba.argmax() == predicted {
        magnitude
    } else {
        -magnitude
    })
}

pub fn multi_checker_agreement<C: Classifier>(
    checkers: &[C],
    row: &[f64],
    predicted: usize,
) -> Result<f64> {
    if checkers.is_empty() {
        return Err(Error::invalid("no checkers"));
    }
    let mut total = 0.0;
    for c in checkers {
        total += checker_agreement(c, row, predicted)?;
    }
    Ok(total / checkers.len() as f64)
}

/// Largest fraction of votes any one class receives.
pub fn bagging_vote(votes: &[usize], class_count: usize) -> Result<f64> {
    if votes.is_empty() {
        return Err(Error::invalid("no votes"));
    }
    let mut counts = vec![0usize; class_count];
    for &v in votes {
        *counts
            .get_mut(v)
            .ok_or_else(|| Error::invalid(format!("vote for class {v} of {class_count}")))? += 1;
    }
    Ok(*counts.iter().max().unwrap_or(&0) as f64 / votes.len() as f64)
}

/// A classifier trained on a subset of the feature columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureBag {
    pub features: Vec<usize>,
    pub model: Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaggingEnsemble {
    pub bags: Vec<FeatureBag>,
    pub n_features: usize,
    pub class_count: usize,
}

impl BaggingEnsemble {
    /// Bag `b` draws `max(1, round(fraction * f))` distinct features and
    /// `n` bootstrap rows from `derive_seed(seed, b)`.
    pub fn fit(
        train: &Dataset,
        classifier: &ClassifierConfig,
        bag_count: usize,
        feature_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        let (n, f) = (train.len(), train.n_features());
        let width = ((feature_fraction * f as f64).round() as usize).clamp(1, f);
        let mut bags = Vec::with_capacity(bag_count);
        for b in 0..bag_count {
            let bag_seed = derive_seed(seed, b as u64);
            let mut rng = seeded(bag_seed);
            let mut features = sample(&mut rng, f, width).into_vec();
            features.sort_unstable();
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let subset = train.project(&rows, &features)?;
            let model = classifier
                .fit(&subset, bag_seed)
                .map_err(|e| e.in_component(format!("bag {b}")))?;
            bags.push(FeatureBag { features, model });
        }
        Ok(Self {
            bags,
            n_features: f,
            class_count: train.class_count(),
        })
    }

    pub fn votes(&self, row: &[f64]) -> Result<Vec<usize>> {
        check_dims(self.n_features, row.len())?;
        self.bags
            .iter()
            .map(|bag| {
                let sub: Vec<f64> = bag.features.iter().map(|&j| row[j]).collect();
                bag.model.predict(&sub)
            })
            .collect()
    }
}

/// Standardized training rows and the wrapped classifier's predictions
/// for them, computed once at fit time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborReference {
    pub standardizer: Standardizer,
    /// Row-major standardized features.
    pub reference: Vec<f64>,
    pub predictions: Vec<usize>,
    /// Neighbors consulted; `min(requested, n)`.
    pub k: usize,
    pub requested_k: usize,
}

impl NeighborReference {
    pub fn fit<C: Classifier + ?Sized>(train: &Dataset, wrapped: &C, k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid(
                "neighbor agreement needs a non-empty reference set",
            ));
        }
        let standardizer = if train.len() >= 2 {
            Standardizer::fit(train)?
        } else {
            Standardizer {
                means: train.row(0).to_vec(),
                stds: vec![1.0; train.n_features()],
            }
        };
        let mut reference = Vec::with_capacity(train.features().len());
        let mut predictions = Vec::with_capacity(train.len());
        for row in train.rows() {
            reference.extend(standardizer.transform_row(row)?);
            predictions.push(wrapped.predict(row)?);
        }
        Ok(Self {
            standardizer,
            reference,
            predictions,
            k: k.min(train.len()),
            requested_k: k,
        })
    }

    pub fn k_clamped(&self) -> bool {
        self.k < self.requested_k
    }

    pub fn neighbors(&self, row: &[f64]) -> Result<Vec<usize>> {
        let z = self.standardizer.transform_row(row)?;
        Ok(k_nearest(&self.reference, z.len(), &z, self.k))
    }

    /// Fraction of the `k` nearest reference rows whose cached prediction
    /// equals `predicted`.
    pub fn agreement(&self, row: &[f64], predicted: usize) -> Result<f64> {
        let near = self.neighbors(row)?;
        let agree = near
            .iter()
            .filter(|&&i| self.predictions[i] == predicted)
            .count();
        Ok(agree as f64 / near.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionModel {
    pub standardizer: Standardizer,
    pub autoencoder: Autoencoder,
    pub loss_history: Vec<f64>,
}

impl ReconstructionModel {
    pub fn error(&self, row: &[f64]) -> Result<f64> {
        let z = self.standardizer.transform_row(row)?;
        self.autoencoder.reconstruction_error(&z)
    }
}

/// A measure ready to score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedMeasure {
    ConfidenceInterval(FeatureIntervals),
    MaxProbability,
    Entropy,
    Bayesian {
        model: GaussianNb,
        summary: PosteriorSummary,
    },
    Combined {
        checker: Model,
    },
    MultiCombined {
        checkers: Vec<Model>,
    },
    FeatureBagging(BaggingEnsemble),
    NeighborAgreement(NeighborReference),
    ReconstructionLoss(ReconstructionModel),
}

impl FittedMeasure {
    /// Scores one point given the wrapped classifier's probabilities and
    /// predicted class for it.
    pub fn score(&self, row: &[f64], proba: &ProbabilityVector, predicted: usize) -> Result<f64> {
        match self {
            FittedMeasure::ConfidenceInterval(iv) => iv.outside_fraction(row),
            FittedMeasure::MaxProbability => Ok(max_probability(proba)),
            FittedMeasure::Entropy => normalized_entropy(proba),
            FittedMeasure::Bayesian { model, summary } => {
                let posterior = model.predict_proba(row)?;
                match summary {
                    PosteriorSummary::MaxPosterior => Ok(posterior.max()),
                    PosteriorSummary::Entropy => posterior.normalized_entropy(),
                }
            }
            FittedMeasure::Combined { checker } => checker_agreement(checker, row, predicted),
            FittedMeasure::MultiCombined { checkers } => {
                multi_checker_agreement(checkers, row, predicted)
            }
            FittedMeasure::FeatureBagging(bags) => {
                bagging_vote(&bags.votes(row)?, bags.class_count)
            }
            FittedMeasure::NeighborAgreement(nr) => nr.agreement(row, predicted),
            FittedMeasure::ReconstructionLoss(m) => m.error(row),
        }
    }
}

pub(super) fn fit<C: Classifier + ?Sized>(
    config: &MeasureConfig,
    train: &Dataset,
    wrapped: &C,
    seed: u64,
) -> Result<FittedMeasure> {
    Ok(match config {
        MeasureConfig::ConfidenceInterval {
            confidence,
            interval,
        } => {
            FittedMeasure::ConfidenceInterval(FeatureIntervals::fit(train, *confidence, *interval)?)
        }
        MeasureConfig::MaxProbability => FittedMeasure::MaxProbability,
        MeasureConfig::Entropy => FittedMeasure::Entropy,
        MeasureConfig::Bayesian { summary } => FittedMeasure::Bayesian {
            model: GaussianNb::fit(train)?,
            summary: *summary,
        },
        MeasureConfig::Combined { checker } => FittedMeasure::Combined {
            checker: checker.fit(train, seed)?,
        },
        MeasureConfig::MultiCombined { checkers } => FittedMeasure::MultiCombined {
            checkers: checkers
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    c.fit(train, derive_seed(seed, i as u64))
                        .map_err(|e| e.in_component(format!("checker {}", c.name())))
                })
                .collect::<Result<_>>()?,
        },
        MeasureConfig::FeatureBagging {
            classifier,
            bag_count,
            feature_fraction,
        } => FittedMeasure::FeatureBagging(BaggingEnsemble::fit(
            train,
            classifier,
            *bag_count,
            *feature_fraction,
            seed,
        )?),
        MeasureConfig::NeighborAgreement { k } => {
            FittedMeasure::NeighborAgreement(NeighborReference::fit(train, wrapped, *k)?)
        }
        MeasureConfig::ReconstructionLoss { training } => {
            let standardizer = Standardizer::fit(train)?;
            let z = standardizer.transform(train)?;
            let trained = Autoencoder::train(&z, training, seed)?;
            FittedMeasure::ReconstructionLoss(ReconstructionModel {
                standardizer,
                autoencoder: trained.model,
                loss_history: trained.loss_history,
            })
        }
    })
}
