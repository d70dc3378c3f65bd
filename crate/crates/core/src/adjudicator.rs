//! Meta-level binary adjudication: measure vectors in, pass or omit out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassWeight, Classifier, ForestConfig, MaxFeatures, RandomForest};
use crate::data::{split_indices, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::uncertainty::{
    compute_batch, FittedNamed, MeasureLayout, MeasureTiming, MeasureVector, TimingClass,
};

pub const FORMAT_VERSION: u32 = 1;

/// One meta-level training row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationExample {
    pub measures: MeasureVector,
    /// The wrapped classifier got this point wrong.
    pub misc: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdjudicatorBackend {
    Forest(ForestConfig),
    /// A single learned cutoff on one measure.
    Threshold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjudicatorConfig {
    pub backend: AdjudicatorBackend,
    /// Omit when the misclassification estimate reaches this value.
    pub threshold: f64,
    /// Share of examples held out to measure detection quality; the final
    /// model is then refit on every example.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl AdjudicatorConfig {
    /// 30 trees with balanced class weights. Leaves keep at least 15
    /// examples so the class weights shape leaf estimates, not only splits.
    pub fn reference_forest() -> ForestConfig {
        ForestConfig {
            n_trees: 30,
            min_samples_leaf: 15,
            max_features: MaxFeatures::Sqrt,
            class_weight: ClassWeight::Balanced,
            ..ForestConfig::default()
        }
    }
}

impl Default for AdjudicatorConfig {
    fn default() -> Self {
        Self {
            backend: AdjudicatorBackend::Forest(Self::reference_forest()),
            threshold: 0.5,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    Any,
    All,
}

/// Fires when `value > cutoff` (or `value < cutoff` when `below`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub measure: usize,
    pub cutoff: f64,
    pub below: bool,
}

impl Rule {
    fn fires(&self, v: &[f64]) -> bool {
        let x = v[self.measure];
        if self.below {
            x < self.cutoff
        } else {
            x > self.cutoff
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdjudicatorModel {
    Forest(RandomForest),
    /// Estimate 1.0 when the rules fire, 0.0 otherwise.
    Rules {
        rules: Vec<Rule>,
        combine: Combine,
    },
    /// Fixed estimate, used when training data held a single flag value.
    Constant {
        estimate: f64,
    },
}

impl AdjudicatorModel {
    fn estimate(&self, v: &[f64]) -> Result<f64> {
        Ok(match self {
            AdjudicatorModel::Forest(f) => f.predict_proba(v)?[1],
            AdjudicatorModel::Rules { rules, combine } => {
                let fired = match combine {
                    Combine::Any => rules.iter().any(|r| r.fires(v)),
                    Combine::All => rules.iter().all(|r| r.fires(v)),
                };
                if fired {
                    1.0
                } else {
                    0.0
                }
            }
            AdjudicatorModel::Constant { estimate } => *estimate,
        })
    }
}

/// Detection quality on held-out examples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub examples: usize,
    pub accuracy: f64,
    /// Share of misclassifications flagged for omission.
    pub misc_recall: f64,
    /// Share of correct predictions flagged for omission.
    pub false_omission_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub examples: usize,
    pub flag_rate: f64,
    pub seed: u64,
    pub validation: Option<DetectionStats>,
    #[serde(default)]
    pub sources: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
    /// Per-measure cost, when the examples came with it.
    #[serde(default)]
    pub timings: Option<Vec<MeasureTiming>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Omit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryConfidenceScore {
    pub verdict: Verdict,
    pub omission_probability: f64,
}

impl BinaryConfidenceScore {
    /// Omits when `estimate >= threshold`.
    pub fn from_estimate(estimate: f64, threshold: f64) -> Self {
        Self {
            verdict: if estimate >= threshold {
                Verdict::Omit
            } else {
                Verdict::Pass
            },
            omission_probability: estimate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryAdjudicator {
    pub format_version: u32,
    pub measure_layout: MeasureLayout,
    pub model: AdjudicatorModel,
    pub threshold: f64,
    pub metadata: TrainingMetadata,
}

impl BinaryAdjudicator {
    pub fn new(layout: MeasureLayout, model: AdjudicatorModel, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!(
                "decision threshold {threshold} outside (0,1)"
            )));
        }
        if let AdjudicatorModel::Rules { rules, .. } = &model {
            if let Some(r) = rules.iter().find(|r| r.measure >= layout.len()) {
                return Err(Error::invalid(format!(
                    "rule on measure {} of {}",
                    r.measure,
                    layout.len()
                )));
            }
        }
        Ok(Self {
            format_version: FORMAT_VERSION,
            measure_layout: layout,
            model,
            threshold,
            metadata: TrainingMetadata::default(),
        })
    }

    /// An adjudicator that never omits.
    pub fn always_pass(layout: MeasureLayout) -> Self {
        Self::new(layout, AdjudicatorModel::Constant { estimate: 0.0 }, 0.5)
            .expect("0.5 is a valid threshold")
    }

    /// An adjudicator that always omits.
    pub fn always_omit(layout: MeasureLayout) -> Self {
        Self::new(layout, AdjudicatorModel::Constant { estimate: 1.0 }, 0.5)
            .expect("0.5 is a valid threshold")
    }

    pub fn layout(&self) -> &MeasureLayout {
        &self.measure_layout
    }

    pub fn is_forest(&self) -> bool {
        matches!(self.model, AdjudicatorModel::Forest(_))
    }

    pub fn adjudicate(&self, v: &MeasureVector) -> Result<BinaryConfidenceScore> {
        if v.len() != self.measure_layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.measure_layout.len(),
                found: v.len(),
            });
        }
        let estimate = self.model.estimate(v.as_slice())?;
        Ok(BinaryConfidenceScore::from_estimate(
            estimate,
            self.threshold,
        ))
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!(
                "decision threshold {threshold} outside (0,1)"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    /// Normalized impurity-decrease importance per measure, paired with
    /// the measures' timings when given.
    pub fn importance_report(&self, timings: Option<&[MeasureTiming]>) -> Result<ImportanceReport> {
        let AdjudicatorModel::Forest(forest) = &self.model else {
            return Err(Error::NotApplicable(
                "importances need a forest-backed adjudicator".into(),
            ));
        };
        if let Some(t) = timings {
            if t.len() != self.measure_layout.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.measure_layout.len(),
                    found: t.len(),
                });
            }
        }
        let entries = forest
            .feature_importances()
            .into_iter()
            .enumerate()
            .map(|(i, importance)| {
                let timing = timings.map(|t| t[i]);
                ImportanceEntry {
                    measure: self.measure_layout.names()[i].clone(),
                    importance,
                    timing,
                    timing_class: timing.map(|t| t.class()),
                }
            })
            .collect();
        Ok(ImportanceReport { entries })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(json)?;
        if v.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: v.format_version,
                supported: FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_str(json)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Loads a bundle and checks it was trained on `layout`.
    pub fn load_for(path: impl AsRef<Path>, layout: &MeasureLayout) -> Result<Self> {
        let adj = Self::load(path)?;
        layout.ensure_matches(&adj.measure_layout)?;
        Ok(adj)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub measure: String,
    pub importance: f64,
    pub timing: Option<MeasureTiming>,
    pub timing_class: Option<TimingClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Layout order.
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceReport {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.importance).sum()
    }

    /// Entries by decreasing importance; ties keep layout order.
    pub fn ranked(&self) -> Vec<&ImportanceEntry> {
        let mut v: Vec<&ImportanceEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| b.importance.total_cmp(&a.importance));
        v
    }

    pub fn get(&self, measure: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.measure == measure)
            .map(|e| e.importance)
    }
}

/// Scores every row of `data` and flags the rows `wrapped` gets wrong.
pub fn build_training_set<C: Classifier + ?Sized>(
    wrapped: &C,
    measures: &[FittedNamed],
    data: &Dataset,
    exec: Execution,
) -> Result<Vec<AdjudicationExample>> {
    if data.is_empty() {
        return Err(Error::invalid(
            "no rows to build adjudication examples from",
        ));
    }
    let (points, _) = compute_batch(measures, data, wrapped, exec)?;
    Ok(points
        .into_iter()
        .zip(data.labels())
        .map(|(p, &y)| AdjudicationExample {
            misc: p.predicted != y,
            measures: p.vector,
        })
        .collect())
}

fn meta_dataset(examples: &[AdjudicationExample], width: usize) -> Result<Dataset> {
    let mut features = Vec::with_capacity(examples.len() * width);
    for (i, e) in examples.iter().enumerate() {
        if e.measures.len() != width {
            return Err(Error::BadRow {
                row: i + 1,
                message: format!("{} measures, layout has {width}", e.measures.len()),
            });
        }
        features.extend_from_slice(e.measures.as_slice());
    }
    let labels = examples.iter().map(|e| usize::from(e.misc)).collect();
    Dataset::new(features, width, labels, 2)
}

/// Picks the measure and cutoff with the best balanced accuracy. Ties go
/// to the lowest measure index, then the lowest cutoff.
fn learn_threshold(meta: &Dataset) -> Rule {
    let counts = meta.class_counts();
    let (n_correct, n_misc) = (counts[0] as f64, counts[1] as f64);
    let mut best = (
        f64::NEG_INFINITY,
        Rule {
            measure: 0,
            cutoff: 0.0,
            below: false,
        },
    );
    for j in 0..meta.n_features() {
        let mut col: Vec<(f64, usize)> =
            meta.column(j).zip(meta.labels().iter().copied()).collect();
        col.sort_by(|a, b| a.0.total_cmp(&b.0));
        // rows at or below the cutoff: misc and correct counts
        let (mut misc_le, mut correct_le) = (0.0, 0.0);
        let mut i = 0;
        while i < col.len() {
            let v = col[i].0;
            while i < col.len() && col[i].0 == v {
                if col[i].1 == 1 {
                    misc_le += 1.0;
                } else {
                    correct_le += 1.0;
                }
                i += 1;
            }
            if i == col.len() {
                break;
            }
            let cutoff = 0.5 * (v + col[i].0);
            // omit above the cutoff
            let above = 0.5 * ((n_misc - misc_le) / n_misc + correct_le / n_correct);
            let below = 1.0 - above;
            for (score, is_below) in [(above, false), (below, true)] {
                if score > best.0 + 1e-12 {
                    best = (
                        score,
                        Rule {
                            measure: j,
                            cutoff,
                            below: is_below,
                        },
                    );
                }
            }
        }
    }
    best.1
}

fn fit_model(meta: &Dataset, config: &AdjudicatorConfig, seed: u64) -> Result<AdjudicatorModel> {
    Ok(match &config.backend {
        AdjudicatorBackend::Forest(fc) => {
            AdjudicatorModel::Forest(RandomForest::fit(meta, fc, seed)?)
        }
        AdjudicatorBackend::Threshold => AdjudicatorModel::Rules {
            rules: vec![learn_threshold(meta)],
            combine: Combine::Any,
        },
    })
}

fn detection_stats(
    model: &AdjudicatorModel,
    threshold: f64,
    meta: &Dataset,
) -> Result<DetectionStats> {
    let (mut hits, mut misc, mut misc_omitted, mut correct_omitted) =
        (0usize, 0usize, 0usize, 0usize);
    for (row, &y) in meta.rows().zip(meta.labels()) {
        let omit = model.estimate(row)? >= threshold;
        if omit == (y == 1) {
            hits += 1;
        }
        if y == 1 {
            misc += 1;
            misc_omitted += usize::from(omit);
        } else {
            correct_omitted += usize::from(omit);
        }
    }
    let n = meta.len();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(DetectionStats {
        examples: n,
        accuracy: ratio(hits, n),
        misc_recall: ratio(misc_omitted, misc),
        false_omission_rate: ratio(correct_omitted, n - misc),
    })
}

/// A trained adjudicator plus any warnings raised while training.
#[derive(Clone, Debug)]
pub struct TrainedAdjudicator {
    pub adjudicator: BinaryAdjudicator,
    pub warnings: Vec<String>,
}

/// Trains the meta-level model on `examples`.
///
/// Examples holding a single flag value give a constant adjudicator
/// (omit everything if every example is a misclassification, else pass
/// everything) and a warning.
pub fn train_adjudicator(
    layout: &MeasureLayout,
    examples: &[AdjudicationExample],
    config: &AdjudicatorConfig,
) -> Result<TrainedAdjudicator> {
    if examples.is_empty() {
        return Err(Error::invalid("no adjudication examples"));
    }
    if !(0.0..1.0).contains(&config.validation_fraction) {
        return Err(Error::invalid("validation_fraction must be in [0,1)"));
    }
    let meta = meta_dataset(examples, layout.len())?;
    let counts = meta.class_counts();
    let flag_rate = counts[1] as f64 / meta.len() as f64;
    let mut warnings = Vec::new();
    let (model, validation) = if counts[0] == 0 || counts[1] == 0 {
        let only_misc = counts[0] == 0;
        warnings.push(format!(
            "all {} examples are {}; adjudicator will {} every prediction",
            meta.len(),
            if only_misc {
                "misclassifications"
            } else {
                "correct"
            },
            if only_misc { "omit" } else { "pass" }
        ));
        let estimate = if only_misc { 1.0 } else { 0.0 };
        (AdjudicatorModel::Constant { estimate }, None)
    } else {
        let validation = if config.validation_fraction > 0.0 && counts.iter().all(|&k| k >= 4) {
            let spec = SplitSpec::new(config.validation_fraction, config.seed).stratified();
            let (fit_idx, val_idx) = split_indices(&meta, &spec)?;
            let probe = fit_model(&meta.select(&fit_idx)?, config, config.seed)?;
            Some(detection_stats(
                &probe,
                config.threshold,
                &meta.select(&val_idx)?,
            )?)
        } else {
            None
        };
        (fit_model(&meta, config, config.seed)?, validation)
    };
    let mut adjudicator = BinaryAdjudicator::new(layout.clone(), model, config.threshold)?;
    adjudicator.metadata = TrainingMetadata {
        examples: meta.len(),
        flag_rate,
        seed: config.seed,
        validation,
        sources: Vec::new(),
        notes: warnings.clone(),
        timings: None,
    };
    Ok(TrainedAdjudicator {
        adjudicator,
        warnings,
    })
}
