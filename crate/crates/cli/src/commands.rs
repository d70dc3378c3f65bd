use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sprout_core::adjudicator::{train_adjudicator as fit_adjudicator, AdjudicationExample};
use sprout_core::data::{format_f64, SplitSpec};
use sprout_core::prelude::*;
use sprout_core::uncertainty::{
    compute_batch, layout_of, read_measures_csv, write_measures_csv, MeasureTiming, TimingClass,
};

use crate::config::{ensure_parent, sidecar_path, CommonArgs, Settings};
use crate::Usage;

const SUBSTITUTIONS: &[&str] = &[
    "UM5 checker: built-in random forest (50 trees) in place of XGBoost",
    "UM6_TR forest member: built-in random forest (50 trees)",
];

/// Reference importances and timing classes of the eleven measures, shown
/// beside a bundle's own ranking.
const REFERENCE_IMPORTANCE: &[(&str, f64, &str)] = &[
    ("UM7", 0.289, "M"),
    ("UM5", 0.189, "M"),
    ("UM6_NB", 0.138, "M"),
    ("UM6_ST", 0.128, "M"),
    ("UM6_TR", 0.128, "H"),
    ("UM3", 0.036, "N"),
    ("UM1", 0.032, "L"),
    ("UM2", 0.027, "N"),
    ("UM9", 0.017, "L"),
    ("UM4", 0.010, "L"),
    ("UM8", 0.004, "H"),
];

#[derive(Serialize, Deserialize)]
struct TimingRow {
    measure: String,
    fit_seconds: f64,
    score_seconds: f64,
    class: TimingClass,
}

#[derive(Serialize, Deserialize)]
struct MeasuresMetadata {
    dataset: String,
    label_column: String,
    classifier: ClassifierConfig,
    seed: u64,
    test_fraction: f64,
    train_rows: usize,
    test_rows: usize,
    flag_rate: f64,
    classifier_accuracy: f64,
    measures: Vec<NamedMeasure>,
    substitutions: Vec<String>,
    faults: usize,
    timings: Vec<TimingRow>,
}

fn load(settings: &Settings, path: &Path) -> Result<Dataset> {
    load_csv(path, &settings.label_column).with_context(|| format!("loading {}", path.display()))
}

fn train_test(settings: &Settings, data: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let mut spec = SplitSpec::new(settings.test_fraction, seed);
    if data.class_counts().iter().all(|&k| k == 0 || k >= 2) {
        spec = spec.stratified();
    }
    Ok(split(data, &spec)?)
}

pub fn measures(args: &CommonArgs) -> Result<()> {
    let settings = Settings::resolve(args)?;
    let seed = settings.seed()?;
    let out = settings.out()?;
    let path = settings.single_dataset()?;
    let data = load(&settings, path)?;
    let (train, test) = train_test(&settings, &data, seed)?;
    let clf = settings
        .classifier
        .fit(&train, seed)
        .map_err(|e| e.in_component("wrapped classifier"))?;
    let exec = Execution::default();
    let (fitted, fit_seconds) = fit_measures(&settings.measures, &train, &clf, seed, exec)?;
    let (points, score_seconds) = compute_batch(&fitted, &test, &clf, exec)?;
    let flags: Vec<bool> = points
        .iter()
        .zip(test.labels())
        .map(|(p, &y)| p.predicted != y)
        .collect();
    let faults: usize = points.iter().map(|p| p.faults.len()).sum();
    let vectors: Vec<MeasureVector> = points.into_iter().map(|p| p.vector).collect();
    let layout = layout_of(&fitted);
    ensure_parent(out)?;
    write_measures_csv(out, &layout, &vectors, &flags)?;

    let misc = flags.iter().filter(|&&f| f).count();
    let meta = MeasuresMetadata {
        dataset: path.display().to_string(),
        label_column: settings.label_column.clone(),
        classifier: settings.classifier.clone(),
        seed,
        test_fraction: settings.test_fraction,
        train_rows: train.len(),
        test_rows: test.len(),
        flag_rate: misc as f64 / test.len() as f64,
        classifier_accuracy: 1.0 - misc as f64 / test.len() as f64,
        measures: settings.measures.clone(),
        substitutions: SUBSTITUTIONS.iter().map(|s| s.to_string()).collect(),
        faults,
        timings: layout
            .names()
            .iter()
            .zip(fit_seconds.iter().zip(&score_seconds))
            .map(|(m, (&fit_seconds, &score_seconds))| {
                let t = MeasureTiming {
                    fit_seconds,
                    score_seconds,
                };
                TimingRow {
                    measure: m.clone(),
                    fit_seconds,
                    score_seconds,
                    class: t.class(),
                }
            })
            .collect(),
    };
    let meta_path = sidecar_path(out);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    println!(
        "wrote {} rows ({} misclassified) to {}",
        vectors.len(),
        misc,
        out.display()
    );
    if faults > 0 {
        eprintln!("warning: {faults} measure scoring faults substituted with 0.0");
    }
    Ok(())
}

/// Mean timings over the sidecars of `sources` that exist and match `layout`.
fn pooled_timings(
    sources: &[std::path::PathBuf],
    layout: &MeasureLayout,
) -> Option<Vec<MeasureTiming>> {
    let mut acc = vec![MeasureTiming::default(); layout.len()];
    let mut found = 0usize;
    for s in sources {
        let Ok(text) = std::fs::read_to_string(sidecar_path(s)) else {
            continue;
        };
        let Ok(meta) = serde_json::from_str::<MeasuresMetadata>(&text) else {
            continue;
        };
        let names: Vec<&str> = meta.timings.iter().map(|t| t.measure.as_str()).collect();
        if names
            != layout
                .names()
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
        {
            continue;
        }
        for (a, t) in acc.iter_mut().zip(&meta.timings) {
            a.fit_seconds += t.fit_seconds;
            a.score_seconds += t.score_seconds;
        }
        found += 1;
    }
    (found > 0).then(|| {
        acc.into_iter()
            .map(|t| MeasureTiming {
                fit_seconds: t.fit_seconds / found as f64,
                score_seconds: t.score_seconds / found as f64,
            })
            .collect()
    })
}

pub fn train_adjudicator(args: &CommonArgs, threshold: Option<f64>) -> Result<()> {
    let settings = Settings::resolve(args)?;
    let seed = settings.seed()?;
    let out = settings.out()?;
    if settings.datasets.is_empty() {
        return Err(Usage("--dataset is required (one or more measures CSVs)".into()).into());
    }
    let mut layout: Option<MeasureLayout> = None;
    let mut examples = Vec::new();
    for path in &settings.datasets {
        let (l, vectors, flags) =
            read_measures_csv(path).with_context(|| format!("reading {}", path.display()))?;
        match &layout {
            None => layout = Some(l),
            Some(first) => first
                .ensure_matches(&l)
                .with_context(|| format!("{} has a different measure layout", path.display()))?,
        }
        examples.extend(
            vectors
                .into_iter()
                .zip(flags)
                .map(|(measures, misc)| AdjudicationExample { measures, misc }),
        );
    }
    let layout = layout.expect("at least one dataset");
    let mut config = AdjudicatorConfig {
        seed,
        ..AdjudicatorConfig::default()
    };
    if let Some(t) = threshold.or(settings.threshold) {
        config.threshold = t;
    }
    let trained = fit_adjudicator(&layout, &examples, &config)?;
    for w in &trained.warnings {
        eprintln!("warning: {w}");
    }
    let mut adj = trained.adjudicator;
    adj.metadata.sources = settings
        .datasets
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    adj.metadata.timings = pooled_timings(&settings.datasets, &layout);
    ensure_parent(out)?;
    adj.save(out)?;
    println!(
        "trained on {} examples (flag rate {:.4}) -> {}",
        adj.metadata.examples,
        adj.metadata.flag_rate,
        out.display()
    );
    if let Some(v) = &adj.metadata.validation {
        println!(
            "held-out detection: accuracy {:.4}, misclassifications caught {:.4}, correct omitted {:.4} ({} examples)",
            v.accuracy, v.misc_recall, v.false_omission_rate, v.examples
        );
    }
    Ok(())
}

pub fn evaluate(args: &CommonArgs, oracle: bool, trace: Option<&Path>) -> Result<()> {
    let settings = Settings::resolve(args)?;
    let seed = settings.seed()?;
    let path = settings.single_dataset()?;
    let data = load(&settings, path)?;
    let (train, test) = train_test(&settings, &data, seed)?;
    let exec = Execution::default();
    let wrapper = match &settings.bundle {
        Some(b) => {
            let layout = MeasureLayout::of(&settings.measures);
            let adj = BinaryAdjudicator::load_for(b, &layout)
                .with_context(|| format!("loading bundle {}", b.display()))?;
            let adj = match settings.threshold {
                Some(t) => adj.with_threshold(t)?,
                None => adj,
            };
            let clf = settings
                .classifier
                .fit(&train, seed)
                .map_err(|e| e.in_component("wrapped classifier"))?;
            SproutWrapper::build_with(
                &train,
                clf,
                &settings.measures,
                AdjudicatorSource::Pretrained(adj),
                seed,
                exec,
            )?
        }
        None => {
            let holdout = AdjudicatorSource::DEFAULT_HOLDOUT;
            let (fit_rows, _) = adjudication_split(&train, holdout, seed)?;
            let clf = settings
                .classifier
                .fit(&fit_rows, seed)
                .map_err(|e| e.in_component("wrapped classifier"))?;
            let mut config = AdjudicatorConfig::default();
            if let Some(t) = settings.threshold {
                config.threshold = t;
            }
            SproutWrapper::build_with(
                &train,
                clf,
                &settings.measures,
                AdjudicatorSource::Train { config, holdout },
                seed,
                exec,
            )?
        }
    };
    let report = if oracle {
        wrapper.evaluate_oracle(&test, exec)?
    } else {
        wrapper.evaluate(&test, exec)?
    };
    println!("{}", report.metrics);
    if let Some(out) = &settings.out {
        ensure_parent(out)?;
        std::fs::write(out, report.metrics.to_csv())
            .with_context(|| format!("writing {}", out.display()))?;
    }
    if let Some(t) = trace {
        ensure_parent(t)?;
        report.write_trace_csv(t, &wrapper.layout())?;
    }
    let faults: usize = report.trace.iter().map(|t| t.faults.len()).sum();
    if faults > 0 {
        eprintln!("warning: {faults} measure scoring faults substituted with 0.0");
    }
    Ok(())
}

pub fn importance(args: &CommonArgs) -> Result<()> {
    let settings = Settings::resolve(args)?;
    let path = settings.bundle()?;
    let adj = BinaryAdjudicator::load(path)
        .with_context(|| format!("loading bundle {}", path.display()))?;
    let report = adj.importance_report(adj.metadata.timings.as_deref())?;
    let reference = |m: &str| REFERENCE_IMPORTANCE.iter().find(|r| r.0 == m);
    let mut csv = String::from(
        "rank,measure,importance,timing_class,reference_importance,reference_timing\n",
    );
    println!(
        "{:>4}  {:<8} {:>10}  {:>5}  {:>9}  {:>8}",
        "rank", "measure", "importance", "time", "reference", "ref time"
    );
    for (i, e) in report.ranked().iter().enumerate() {
        let class = e
            .timing_class
            .map_or_else(|| "-".to_string(), |c| c.to_string());
        let (ref_imp, ref_time) = reference(&e.measure).map_or_else(
            || ("-".to_string(), "-".to_string()),
            |r| (format!("{:.3}", r.1), r.2.to_string()),
        );
        println!(
            "{:>4}  {:<8} {:>10.6}  {:>5}  {:>9}  {:>8}",
            i + 1,
            e.measure,
            e.importance,
            class,
            ref_imp,
            ref_time
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            e.measure,
            format_f64(e.importance),
            class,
            ref_imp,
            ref_time
        ));
    }
    println!("total {:.12}", report.total());
    if let Some(out) = &settings.out {
        ensure_parent(out)?;
        std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

pub fn synth(
    args: &CommonArgs,
    rows: usize,
    features: usize,
    classes: usize,
    separation: f64,
) -> Result<()> {
    let settings = Settings::resolve(args)?;
    let seed = settings.seed()?;
    let out = settings.out()?;
    let data =
        make_blobs(rows, features, classes, separation, seed).map_err(|e| Usage(e.to_string()))?;
    ensure_parent(out)?;
    write_csv(&data, out, &settings.label_column)?;
    println!("wrote {rows} rows to {}", out.display());
    Ok(())
}
