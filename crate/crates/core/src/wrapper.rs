//! The pass-or-omit wrapper and its accounting.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adjudicator::{
    train_adjudicator, AdjudicationExample, AdjudicatorConfig, BinaryAdjudicator,
    BinaryConfidenceScore, Verdict,
};
use crate::classifiers::{Classifier, Model, ProbabilityVector};
use crate::data::{split_indices, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rng::derive_seed;
use crate::uncertainty::{
    compute_batch, compute_vector, fit_measures, layout_of, FittedNamed, MeasureFault,
    MeasureLayout, MeasureTiming, MeasureVector, NamedMeasure, ScoredPoint,
};

pub const WRAPPER_FORMAT_VERSION: u32 = 1;

/// Where the wrapper's adjudicator comes from.
#[derive(Clone, Debug)]
pub enum AdjudicatorSource {
    Pretrained(BinaryAdjudicator),
    /// Train on a stratified `holdout` share of the build data, scored by
    /// measures fitted on the remaining rows.
    Train {
        config: AdjudicatorConfig,
        holdout: f64,
    },
}

impl AdjudicatorSource {
    pub const DEFAULT_HOLDOUT: f64 = 0.3;

    pub fn train(config: AdjudicatorConfig) -> Self {
        AdjudicatorSource::Train {
            config,
            holdout: Self::DEFAULT_HOLDOUT,
        }
    }
}

/// Splits `data` into (fitting rows, adjudication rows) exactly as
/// [`SproutWrapper::build`] does for the same `holdout` and `seed`.
/// Training the wrapped classifier on the first part keeps adjudication
/// examples out of its training data.
pub fn adjudication_split(data: &Dataset, holdout: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (fit, adj) = adjudication_indices(data, holdout, seed)?;
    Ok((data.select(&fit)?, data.select(&adj)?))
}

fn adjudication_indices(
    data: &Dataset,
    holdout: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let counts = data.class_counts();
    let mut spec = SplitSpec::new(holdout, derive_seed(seed, 0xad));
    // stratify only when every present class can land on both sides
    if counts.iter().all(|&k| k == 0 || k >= 2) {
        spec = spec.stratified();
    }
    split_indices(data, &spec)
}

/// What the wrapper emits for one data point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WrapperOutput {
    Predicted {
        class: usize,
        proba: ProbabilityVector,
        measures: MeasureVector,
    },
    Omitted {
        measures: MeasureVector,
        omission_probability: f64,
    },
}

impl WrapperOutput {
    pub fn class(&self) -> Option<usize> {
        match self {
            WrapperOutput::Predicted { class, .. } => Some(*class),
            WrapperOutput::Omitted { .. } => None,
        }
    }

    pub fn is_omitted(&self) -> bool {
        matches!(self, WrapperOutput::Omitted { .. })
    }

    pub fn measures(&self) -> &MeasureVector {
        match self {
            WrapperOutput::Predicted { measures, .. } | WrapperOutput::Omitted { measures, .. } => {
                measures
            }
        }
    }
}

/// Outcome counts of a wrapped classifier on labeled data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub correct_passed: u64,
    pub correct_omitted: u64,
    pub misc_passed: u64,
    pub misc_omitted: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, correct: bool, omitted: bool) {
        match (correct, omitted) {
            (true, false) => self.correct_passed += 1,
            (true, true) => self.correct_omitted += 1,
            (false, false) => self.misc_passed += 1,
            (false, true) => self.misc_omitted += 1,
        }
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            correct_passed: self.correct_passed + o.correct_passed,
            correct_omitted: self.correct_omitted + o.correct_omitted,
            misc_passed: self.misc_passed + o.misc_passed,
            misc_omitted: self.misc_omitted + o.misc_omitted,
        }
    }

    pub fn total(&self) -> u64 {
        self.correct_passed + self.correct_omitted + self.misc_passed + self.misc_omitted
    }
}

/// Accuracy, misclassification and omission probabilities of the raw
/// classifier (`alpha`, `epsilon`) and of its wrapped version.
///
/// `alpha` counts every point the classifier gets right, omitted or not.
/// `phi_c` and `phi_m` are omissions of correct and misclassified points,
/// `alpha_w` and `epsilon_w` the correct and wrong predictions that pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WrapperMetrics {
    pub n: u64,
    pub n_omitted: u64,
    pub n_correct_passed: u64,
    pub n_misc_passed: u64,
    pub n_correct_omitted: u64,
    pub n_misc_omitted: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub alpha_w: f64,
    pub epsilon_w: f64,
    pub phi: f64,
    pub phi_c: f64,
    pub phi_m: f64,
}

impl WrapperMetrics {
    pub fn from_counts(c: OutcomeCounts) -> Result<Self> {
        let n = c.total();
        if n == 0 {
            return Err(Error::invalid("no outcomes to evaluate"));
        }
        let r = |k: u64| k as f64 / n as f64;
        Ok(Self {
            n,
            n_omitted: c.correct_omitted + c.misc_omitted,
            n_correct_passed: c.correct_passed,
            n_misc_passed: c.misc_passed,
            n_correct_omitted: c.correct_omitted,
            n_misc_omitted: c.misc_omitted,
            alpha: r(c.correct_passed + c.correct_omitted),
            epsilon: r(c.misc_passed + c.misc_omitted),
            alpha_w: r(c.correct_passed),
            epsilon_w: r(c.misc_passed),
            phi: r(c.correct_omitted + c.misc_omitted),
            phi_c: r(c.correct_omitted),
            phi_m: r(c.misc_omitted),
        })
    }

    pub fn counts(&self) -> OutcomeCounts {
        OutcomeCounts {
            correct_passed: self.n_correct_passed,
            correct_omitted: self.n_correct_omitted,
            misc_passed: self.n_misc_passed,
            misc_omitted: self.n_misc_omitted,
        }
    }

    pub const CSV_HEADER: [&'static str; 14] = [
        "n",
        "n_omitted",
        "n_correct_passed",
        "n_misc_passed",
        "n_correct_omitted",
        "n_misc_omitted",
        "alpha",
        "epsilon",
        "alpha_w",
        "epsilon_w",
        "phi",
        "phi_c",
        "phi_m",
        "omission_quality",
    ];

    /// Header plus one row; `omission_quality` is `NA` when nothing was
    /// omitted.
    pub fn to_csv(&self) -> String {
        let q = omission_quality(self).map_or_else(|| "NA".to_string(), |q| q.to_string());
        let values = [
            self.n.to_string(),
            self.n_omitted.to_string(),
            self.n_correct_passed.to_string(),
            self.n_misc_passed.to_string(),
            self.n_correct_omitted.to_string(),
            self.n_misc_omitted.to_string(),
            self.alpha.to_string(),
            self.epsilon.to_string(),
            self.alpha_w.to_string(),
            self.epsilon_w.to_string(),
            self.phi.to_string(),
            self.phi_c.to_string(),
            self.phi_m.to_string(),
            q,
        ];
        format!("{}\n{}\n", Self::CSV_HEADER.join(","), values.join(","))
    }
}

impl fmt::Display for WrapperMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "points          {:>10}", self.n)?;
        writeln!(f, "omitted         {:>10}", self.n_omitted)?;
        writeln!(f, "alpha           {:>10.6}", self.alpha)?;
        writeln!(f, "epsilon         {:>10.6}", self.epsilon)?;
        writeln!(f, "alpha_w         {:>10.6}", self.alpha_w)?;
        writeln!(f, "epsilon_w       {:>10.6}", self.epsilon_w)?;
        writeln!(f, "phi             {:>10.6}", self.phi)?;
        writeln!(f, "phi_c           {:>10.6}", self.phi_c)?;
        writeln!(f, "phi_m           {:>10.6}", self.phi_m)?;
        match omission_quality(self) {
            Some(q) => write!(f, "omission quality {:>9.6}", q),
            None => write!(f, "omission quality        n/a"),
        }
    }
}

/// Share of omissions that hit misclassifications, `phi_m / phi`. `None`
/// when nothing was omitted.
pub fn omission_quality(m: &WrapperMetrics) -> Option<f64> {
    (m.n_omitted > 0).then(|| m.n_misc_omitted as f64 / m.n_omitted as f64)
}

/// One evaluated test point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub index: usize,
    pub label: usize,
    pub predicted: usize,
    pub verdict: Verdict,
    pub omission_probability: f64,
    pub measures: MeasureVector,
    pub faults: Vec<MeasureFault>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub metrics: WrapperMetrics,
    pub trace: Vec<TraceRow>,
    /// Mean per-point scoring time of each measure.
    pub score_seconds: Vec<f64>,
}

impl EvaluationReport {
    pub fn write_trace_csv(&self, path: impl AsRef<Path>, layout: &MeasureLayout) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header = vec![
            "index",
            "label",
            "predicted",
            "verdict",
            "omission_probability",
        ];
        header.extend(layout.names().iter().map(String::as_str));
        header.push("faults");
        w.write_record(&header)?;
        for t in &self.trace {
            let mut rec = vec![
                t.index.to_string(),
                t.label.to_string(),
                t.predicted.to_string(),
                match t.verdict {
                    Verdict::Pass => "pass".into(),
                    Verdict::Omit => "omit".into(),
                },
                crate::data::format_f64(t.omission_probability),
            ];
            rec.extend(
                t.measures
                    .as_slice()
                    .iter()
                    .map(|&v| crate::data::format_f64(v)),
            );
            rec.push(
                t.faults
                    .iter()
                    .map(|f| f.measure.as_str())
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// A classifier enclosed by uncertainty measures and an adjudicator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SproutWrapper<C = Model> {
    pub format_version: u32,
    pub classifier: C,
    pub measure_configs: Vec<NamedMeasure>,
    pub measures: Vec<FittedNamed>,
    pub adjudicator: BinaryAdjudicator,
    /// Fit time and mean per-point scoring time per measure.
    pub timings: Vec<MeasureTiming>,
    pub seed: u64,
}

impl<C: Classifier> SproutWrapper<C> {
    /// Fits the measures on `train` and obtains the adjudicator.
    ///
    /// A pretrained adjudicator must match the layout of `measures`; the
    /// check runs before anything is fitted. Otherwise measures are fitted
    /// on the rows [`adjudication_split`] keeps for fitting and the
    /// adjudicator learns from the measure vectors of the held-out rows.
    pub fn build(
        train: &Dataset,
        classifier: C,
        measures: &[NamedMeasure],
        source: AdjudicatorSource,
        seed: u64,
    ) -> Result<Self> {
        Self::build_with(
            train,
            classifier,
            measures,
            source,
            seed,
            Execution::default(),
        )
    }

    pub fn build_with(
        train: &Dataset,
        classifier: C,
        measures: &[NamedMeasure],
        source: AdjudicatorSource,
        seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("wrapper training set is empty"));
        }
        if measures.is_empty() {
            return Err(Error::invalid("wrapper needs at least one measure"));
        }
        let layout = MeasureLayout::of(measures);
        let mut names = layout.names().to_vec();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("measure names must be unique"));
        }
        crate::error::check_dims(classifier.n_features(), train.n_features())?;
        let measure_seed = derive_seed(seed, 1);
        let (fitted, fit_seconds, adjudicator, score_seconds) = match source {
            AdjudicatorSource::Pretrained(adj) => {
                layout.ensure_matches(adj.layout())?;
                let (fitted, fit_seconds) =
                    fit_measures(measures, train, &classifier, measure_seed, exec)?;
                (fitted, fit_seconds, adj, vec![0.0; measures.len()])
            }
            AdjudicatorSource::Train { config, holdout } => {
                let (fit_idx, adj_idx) = adjudication_indices(train, holdout, seed)?;
                let fit_rows = train.select(&fit_idx)?;
                let adj_rows = train.select(&adj_idx)?;
                let (fitted, fit_seconds) =
                    fit_measures(measures, &fit_rows, &classifier, measure_seed, exec)?;
                let (points, score_seconds) = compute_batch(&fitted, &adj_rows, &classifier, exec)?;
                let examples: Vec<AdjudicationExample> = points
                    .into_iter()
                    .zip(adj_rows.labels())
                    .map(|(p, &y)| AdjudicationExample {
                        misc: p.predicted != y,
                        measures: p.vector,
                    })
                    .collect();
                let config = AdjudicatorConfig {
                    seed: derive_seed(seed, 2),
                    ..config
                };
                let trained = train_adjudicator(&layout, &examples, &config)
                    .map_err(|e| e.in_component("adjudicator"))?;
                (fitted, fit_seconds, trained.adjudicator, score_seconds)
            }
        };
        let timings = fit_seconds
            .into_iter()
            .zip(score_seconds)
            .map(|(fit_seconds, score_seconds)| MeasureTiming {
                fit_seconds,
                score_seconds,
            })
            .collect();
        Ok(Self {
            format_version: WRAPPER_FORMAT_VERSION,
            classifier,
            measure_configs: measures.to_vec(),
            measures: fitted,
            adjudicator,
            timings,
            seed,
        })
    }

    pub fn layout(&self) -> MeasureLayout {
        layout_of(&self.measures)
    }

    /// Scores and adjudicates one point.
    pub fn assess(&self, row: &[f64]) -> Result<(ScoredPoint, BinaryConfidenceScore)> {
        let point = compute_vector(&self.measures, row, &self.classifier)?;
        let score = self.adjudicator.adjudicate(&point.vector)?;
        Ok((point, score))
    }

    /// The classifier's prediction, or an omission when the adjudicator
    /// suspects it is wrong. A passed class is never altered.
    pub fn predict_or_omit(&self, row: &[f64]) -> Result<WrapperOutput> {
        let (point, score) = self.assess(row)?;
        Ok(match score.verdict {
            Verdict::Pass => WrapperOutput::Predicted {
                class: point.predicted,
                proba: point.proba,
                measures: point.vector,
            },
            Verdict::Omit => WrapperOutput::Omitted {
                measures: point.vector,
                omission_probability: score.omission_probability,
            },
        })
    }

    pub fn evaluate(&self, test: &Dataset, exec: Execution) -> Result<EvaluationReport> {
        self.evaluate_inner(test, exec, false)
    }

    /// Evaluates with a flag-revealing adjudicator that omits exactly the
    /// misclassified points; the upper bound any adjudicator can reach.
    pub fn evaluate_oracle(&self, test: &Dataset, exec: Execution) -> Result<EvaluationReport> {
        self.evaluate_inner(test, exec, true)
    }

    fn evaluate_inner(
        &self,
        test: &Dataset,
        exec: Execution,
        oracle: bool,
    ) -> Result<EvaluationReport> {
        if test.is_empty() {
            return Err(Error::invalid("test set is empty"));
        }
        crate::error::check_dims(self.classifier.n_features(), test.n_features())?;
        let (points, score_seconds) = compute_batch(&self.measures, test, &self.classifier, exec)?;
        let trace = par::try_map_range(exec, points.len(), |i| {
            let p = &points[i];
            let label = test.label(i);
            let score = if oracle {
                BinaryConfidenceScore::from_estimate(
                    if p.predicted != label { 1.0 } else { 0.0 },
                    0.5,
                )
            } else {
                self.adjudicator.adjudicate(&p.vector)?
            };
            Ok(TraceRow {
                index: i,
                label,
                predicted: p.predicted,
                verdict: score.verdict,
                omission_probability: score.omission_probability,
                measures: p.vector.clone(),
                faults: p.faults.clone(),
            })
        })?;
        let counts = trace.iter().fold(OutcomeCounts::default(), |mut c, t| {
            c.record(t.predicted == t.label, t.verdict == Verdict::Omit);
            c
        });
        Ok(EvaluationReport {
            metrics: WrapperMetrics::from_counts(counts)?,
            trace,
            score_seconds,
        })
    }
}

impl<C: Classifier + Serialize + DeserializeOwned> SproutWrapper<C> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(json)?;
        if v.format_version != WRAPPER_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: v.format_version,
                supported: WRAPPER_FORMAT_VERSION,
            });
        }
        let w: Self = serde_json::from_str(json)?;
        w.layout().ensure_matches(w.adjudicator.layout())?;
        Ok(w)
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
}
