//! Uncertainty measures.
//!
//! Each measure maps a data point, the wrapped classifier's probabilities
//! for it, or both, to one float. Nine measure families exist:
//!
//! | family | name | offline setup | input | output | classifier |
//! |---|---|---|---|---|---|
//! | UM1 | confidence interval | yes | yes | | |
//! | UM2 | maximum probability | | | yes | |
//! | UM3 | entropy | | | yes | |
//! | UM4 | naive Bayes posterior | yes | yes | | |
//! | UM5 | checker agreement | yes | yes | yes | |
//! | UM6 | multi-checker agreement | yes | yes | yes | |
//! | UM7 | feature bagging | yes | yes | | |
//! | UM8 | neighbor agreement | | yes | | yes |
//! | UM9 | reconstruction loss | yes | yes | | |
//!
//! The reference configuration ([`reference_measures`]) instantiates eleven
//! measures, three of them from the UM6 family.

mod measures;
mod table;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderConfig;
use crate::classifiers::{Classifier, ClassifierConfig, ProbabilityVector};
use crate::data::Dataset;
use crate::error::{check_dims, Error, Result};
use crate::par::{self, Execution};
use crate::rng::derive_seed;

pub use measures::{
    bagging_vote, checker_agreement, max_probability, multi_checker_agreement, normalized_entropy,
    BaggingEnsemble, FeatureBag, FeatureIntervals, FittedMeasure, NeighborReference,
    ReconstructionModel,
};
pub use table::{read_measures_csv, write_measures_csv, MISC_FLAG_COLUMN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    Um1,
    Um2,
    Um3,
    Um4,
    Um5,
    Um6,
    Um7,
    Um8,
    Um9,
}

impl MeasureKind {
    /// Whether the measure must be fitted on training data before scoring.
    pub fn needs_offline_setup(self) -> bool {
        !matches!(self, MeasureKind::Um2 | MeasureKind::Um3 | MeasureKind::Um8)
    }

    pub fn uses_input(self) -> bool {
        !matches!(self, MeasureKind::Um2 | MeasureKind::Um3)
    }

    pub fn uses_classifier_output(self) -> bool {
        matches!(
            self,
            MeasureKind::Um2 | MeasureKind::Um3 | MeasureKind::Um5 | MeasureKind::Um6
        )
    }

    pub fn uses_classifier(self) -> bool {
        self == MeasureKind::Um8
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// `mean +- z * std` with `z` the two-sided normal quantile.
    #[default]
    Normal,
    /// Empirical `(1-w)/2` and `(1+w)/2` quantiles of the training column.
    Empirical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorSummary {
    #[default]
    MaxPosterior,
    Entropy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureConfig {
    ConfidenceInterval {
        confidence: f64,
        #[serde(default)]
        interval: IntervalKind,
    },
    MaxProbability,
    Entropy,
    Bayesian {
        #[serde(default)]
        summary: PosteriorSummary,
    },
    Combined {
        checker: ClassifierConfig,
    },
    MultiCombined {
        checkers: Vec<ClassifierConfig>,
    },
    FeatureBagging {
        classifier: ClassifierConfig,
        bag_count: usize,
        feature_fraction: f64,
    },
    NeighborAgreement {
        k: usize,
    },
    ReconstructionLoss {
        #[serde(default)]
        training: AutoencoderConfig,
    },
}

impl MeasureConfig {
    pub fn kind(&self) -> MeasureKind {
        match self {
            MeasureConfig::ConfidenceInterval { .. } => MeasureKind::Um1,
            MeasureConfig::MaxProbability => MeasureKind::Um2,
            MeasureConfig::Entropy => MeasureKind::Um3,
            MeasureConfig::Bayesian { .. } => MeasureKind::Um4,
            MeasureConfig::Combined { .. } => MeasureKind::Um5,
            MeasureConfig::MultiCombined { .. } => MeasureKind::Um6,
            MeasureConfig::FeatureBagging { .. } => MeasureKind::Um7,
            MeasureConfig::NeighborAgreement { .. } => MeasureKind::Um8,
            MeasureConfig::ReconstructionLoss { .. } => MeasureKind::Um9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureConfig::ConfidenceInterval { confidence, .. }
                if !(*confidence > 0.0 && *confidence < 1.0) =>
            {
                Err(Error::invalid(format!(
                    "confidence level {confidence} outside (0,1)"
                )))
            }
            MeasureConfig::MultiCombined { checkers } if checkers.is_empty() => Err(
                Error::invalid("multi-checker measure needs at least one checker"),
            ),
            MeasureConfig::FeatureBagging {
                bag_count,
                feature_fraction,
                ..
            } if *bag_count == 0 || !(*feature_fraction > 0.0 && *feature_fraction <= 1.0) => Err(
                Error::invalid("feature bagging needs bag_count >= 1 and fraction in (0,1]"),
            ),
            MeasureConfig::NeighborAgreement { k: 0 } => {
                Err(Error::invalid("neighbor agreement needs k >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Fits the measure. `wrapped` is the classifier being monitored;
    /// `seed` drives checker, bagger and autoencoder training.
    pub fn fit<C: Classifier + ?Sized>(
        &self,
        train: &Dataset,
        wrapped: &C,
        seed: u64,
    ) -> Result<FittedMeasure> {
        self.validate()?;
        if (self.kind().needs_offline_setup() || self.kind() == MeasureKind::Um8)
            && train.is_empty()
        {
            return Err(Error::invalid("training set is empty"));
        }
        measures::fit(self, train, wrapped, seed)
    }
}

/// A measure configuration with its column name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedMeasure {
    pub name: String,
    pub config: MeasureConfig,
}

impl NamedMeasure {
    pub fn new(name: impl Into<String>, config: MeasureConfig) -> Self {
        Self {
            name: name.into(),
            config,
        }
    }
}

/// The eleven-measure reference configuration, in column order.
///
/// Agreement checkers that would be external gradient-boosted models are
/// built-in random forests.
pub fn reference_measures() -> Vec<NamedMeasure> {
    use ClassifierConfig as C;
    vec![
        NamedMeasure::new(
            "UM1",
            MeasureConfig::ConfidenceInterval {
                confidence: 0.9,
                interval: IntervalKind::Normal,
            },
        ),
        NamedMeasure::new("UM2", MeasureConfig::MaxProbability),
        NamedMeasure::new("UM3", MeasureConfig::Entropy),
        NamedMeasure::new(
            "UM4",
            MeasureConfig::Bayesian {
                summary: PosteriorSummary::MaxPosterior,
            },
        ),
        NamedMeasure::new(
            "UM5",
            MeasureConfig::Combined {
                checker: C::forest(),
            },
        ),
        NamedMeasure::new(
            "UM6_ST",
            MeasureConfig::MultiCombined {
                checkers: vec![C::GaussianNb, C::LinearDiscriminant, C::logistic()],
            },
        ),
        NamedMeasure::new(
            "UM6_NB",
            MeasureConfig::MultiCombined {
                checkers: vec![
                    C::GaussianNb,
                    C::BernoulliNb,
                    C::MultinomialNb,
                    C::ComplementNb,
                ],
            },
        ),
        NamedMeasure::new(
            "UM6_TR",
            MeasureConfig::MultiCombined {
                checkers: vec![C::tree(), C::forest()],
            },
        ),
        NamedMeasure::new(
            "UM7",
            MeasureConfig::FeatureBagging {
                classifier: C::tree(),
                bag_count: 10,
                feature_fraction: 0.5,
            },
        ),
        NamedMeasure::new("UM8", MeasureConfig::NeighborAgreement { k: 19 }),
        NamedMeasure::new(
            "UM9",
            MeasureConfig::ReconstructionLoss {
                training: AutoencoderConfig::default(),
            },
        ),
    ]
}

/// Ordered measure names; the column layout of measure vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasureLayout(pub Vec<String>);

impl MeasureLayout {
    pub fn of(measures: &[NamedMeasure]) -> Self {
        Self(measures.iter().map(|m| m.name.clone()).collect())
    }

    pub fn reference() -> Self {
        Self::of(&reference_measures())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn ensure_matches(&self, other: &MeasureLayout) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LayoutMismatch {
                expected: self.0.clone(),
                found: other.0.clone(),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasureVector(pub Vec<f64>);

impl MeasureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A fitted measure under its column name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedNamed {
    pub name: String,
    pub measure: FittedMeasure,
}

/// Wall-clock cost of a measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureTiming {
    pub fit_seconds: f64,
    /// Mean scoring time per data point.
    pub score_seconds: f64,
}

/// Coarse cost class of a measure's per-point scoring time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimingClass {
    /// negligible, under 2 microseconds
    N,
    /// under 20 microseconds
    L,
    /// under 200 microseconds
    M,
    H,
}

impl MeasureTiming {
    pub fn class(&self) -> TimingClass {
        match self.score_seconds {
            s if s < 2e-6 => TimingClass::N,
            s if s < 2e-5 => TimingClass::L,
            s if s < 2e-4 => TimingClass::M,
            _ => TimingClass::H,
        }
    }
}

impl std::fmt::Display for TimingClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Fits every measure on `train`. Measure `i` trains with
/// `derive_seed(seed, i)`; independent measures fit concurrently under
/// parallel execution.
pub fn fit_measures<C: Classifier + ?Sized>(
    configs: &[NamedMeasure],
    train: &Dataset,
    wrapped: &C,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<FittedNamed>, Vec<f64>)> {
    let fitted = par::try_map_range(exec, configs.len(), |i| {
        let start = Instant::now();
        let m = &configs[i];
        let measure = m
            .config
            .fit(train, wrapped, derive_seed(seed, i as u64))
            .map_err(|e| e.in_component(format!("measure {} ({:?})", m.name, m.config.kind())))?;
        Ok((
            FittedNamed {
                name: m.name.clone(),
                measure,
            },
            start.elapsed().as_secs_f64(),
        ))
    })?;
    Ok(fitted.into_iter().unzip())
}

/// A measure that failed on one data point; its slot holds 0.0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureFault {
    pub measure: String,
    pub message: String,
}

/// Everything computed for one data point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPoint {
    pub proba: ProbabilityVector,
    pub predicted: usize,
    pub vector: MeasureVector,
    pub faults: Vec<MeasureFault>,
}

fn score_point<C: Classifier + ?Sized>(
    measures: &[FittedNamed],
    row: &[f64],
    wrapped: &C,
    mut timings: Option<&mut [f64]>,
) -> Result<ScoredPoint> {
    check_dims(wrapped.n_features(), row.len())?;
    let proba = wrapped.predict_proba(row)?;
    let predicted = proba.argmax();
    let mut values = Vec::with_capacity(measures.len());
    let mut faults = Vec::new();
    for (i, m) in measures.iter().enumerate() {
        let start = timings.as_ref().map(|_| Instant::now());
        let value = match m.measure.score(row, &proba, predicted) {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                faults.push(MeasureFault {
                    measure: m.name.clone(),
                    message: format!("non-finite score {v}"),
                });
                0.0
            }
            Err(e) => {
                faults.push(MeasureFault {
                    measure: m.name.clone(),
                    message: e.to_string(),
                });
                0.0
            }
        };
        if let (Some(t), Some(s)) = (timings.as_deref_mut(), start) {
            t[i] += s.elapsed().as_secs_f64();
        }
        values.push(value);
    }
    Ok(ScoredPoint {
        proba,
        predicted,
        vector: MeasureVector(values),
        faults,
    })
}

/// Scores one data point with every measure.
///
/// The wrapped classifier's `predict_proba` runs exactly once and its
/// output is shared by all measures. A measure that errors or returns a
/// non-finite value contributes 0.0 and a [`MeasureFault`]; only a
/// dimension mismatch against the wrapped classifier is an error.
pub fn compute_vector<C: Classifier + ?Sized>(
    measures: &[FittedNamed],
    row: &[f64],
    wrapped: &C,
) -> Result<ScoredPoint> {
    score_point(measures, row, wrapped, None)
}

/// Scores every row of `data`, in row order, and reports the mean
/// per-point scoring time of each measure.
pub fn compute_batch<C: Classifier + ?Sized>(
    measures: &[FittedNamed],
    data: &Dataset,
    wrapped: &C,
    exec: Execution,
) -> Result<(Vec<ScoredPoint>, Vec<f64>)> {
    let scored = par::try_map_range(exec, data.len(), |i| {
        let mut t = vec![0.0; measures.len()];
        let p = score_point(measures, data.row(i), wrapped, Some(&mut t))?;
        Ok((p, t))
    })?;
    let mut totals = vec![0.0; measures.len()];
    let mut points = Vec::with_capacity(scored.len());
    for (p, t) in scored {
        for (a, b) in totals.iter_mut().zip(t) {
            *a += b;
        }
        points.push(p);
    }
    let n = data.len().max(1) as f64;
    totals.iter_mut().for_each(|t| *t /= n);
    Ok((points, totals))
}

pub fn layout_of(measures: &[FittedNamed]) -> MeasureLayout {
    MeasureLayout(measures.iter().map(|m| m.name.clone()).collect())
}
