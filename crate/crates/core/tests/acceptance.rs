//! End-to-end acceptance checks. Each check prints one PASS or FAIL line;
//! the process exits non-zero when any check fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use sprout_core::adjudicator::{
    train_adjudicator, AdjudicationExample, AdjudicatorConfig, BinaryAdjudicator,
};
use sprout_core::autoencoder::Autoencoder;
use sprout_core::classifiers::{Classifier, ClassifierConfig, ProbabilityVector};
use sprout_core::data::{make_blobs, split, Dataset, SplitSpec};
use sprout_core::par::Execution;
use sprout_core::rng::{derive_seed, seeded};
use sprout_core::uncertainty::{
    checker_agreement, compute_batch, fit_measures, normalized_entropy, reference_measures,
    write_measures_csv, FittedMeasure, MeasureConfig, MeasureLayout, MeasureVector,
    PosteriorSummary,
};
use sprout_core::wrapper::{
    adjudication_split, AdjudicatorSource, OutcomeCounts, SproutWrapper, WrapperMetrics,
};
use statrs::distribution::{Continuous, Normal};

type Check = Result<String, String>;
type NamedCheck = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_counts(rng: &mut impl rand::Rng) -> OutcomeCounts {
    loop {
        let c = OutcomeCounts {
            correct_passed: rng.random_range(0..5000),
            correct_omitted: rng.random_range(0..5000),
            misc_passed: rng.random_range(0..5000),
            misc_omitted: rng.random_range(0..5000),
        };
        if c.total() > 0 {
            return c;
        }
    }
}

fn metric_identities() -> Check {
    let start = Instant::now();
    let mut rng = seeded(17);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let c = random_counts(&mut rng);
        let m = WrapperMetrics::from_counts(c).map_err(|e| e.to_string())?;
        let n = c.total() as f64;
        let residuals = [
            m.alpha + m.epsilon - 1.0,
            m.phi - (m.phi_c + m.phi_m),
            m.alpha_w - (m.alpha - m.phi_c),
            m.epsilon_w - (m.epsilon - m.phi_m),
            m.alpha_w + m.epsilon_w + m.phi - 1.0,
            m.epsilon_w - c.misc_passed as f64 / n,
            m.phi_c - c.correct_omitted as f64 / n,
        ];
        worst = residuals.iter().fold(worst, |w, r| w.max(r.abs()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst <= 1e-12, "largest residual {worst:e}");
    ensure!(secs < 5.0, "took {secs:.2} s");
    Ok(format!(
        "10000 outcomes, largest residual {worst:.1e}, {secs:.3} s"
    ))
}

/// Classifier with a fixed output, for the agreement endpoints.
struct Fixed(ProbabilityVector);

impl Classifier for Fixed {
    fn class_count(&self) -> usize {
        self.0.class_count()
    }
    fn n_features(&self) -> usize {
        1
    }
    fn predict_proba(&self, _: &[f64]) -> sprout_core::Result<ProbabilityVector> {
        Ok(self.0.clone())
    }
}

fn random_simplex(rng: &mut impl rand::Rng, c: usize) -> ProbabilityVector {
    let w: Vec<f64> = (0..c)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    ProbabilityVector::from_weights(&w)
}

fn measure_ranges() -> Check {
    let mut rng = seeded(23);
    for c in 2..=10 {
        let u = normalized_entropy(&ProbabilityVector::uniform(c)).map_err(|e| e.to_string())?;
        ensure!(
            (u - 1.0).abs() <= 1e-9,
            "entropy of uniform over {c} classes is {u}"
        );
        let h =
            normalized_entropy(&ProbabilityVector::one_hot(c, c - 1)).map_err(|e| e.to_string())?;
        ensure!(h == 0.0, "entropy of one-hot over {c} classes is {h}");
    }
    let agree = checker_agreement(&Fixed(ProbabilityVector::one_hot(3, 1)), &[0.0], 1).unwrap();
    let disagree = checker_agreement(&Fixed(ProbabilityVector::one_hot(3, 1)), &[0.0], 2).unwrap();
    let unsure_a = checker_agreement(&Fixed(ProbabilityVector::uniform(3)), &[0.0], 0).unwrap();
    let unsure_b = checker_agreement(&Fixed(ProbabilityVector::uniform(3)), &[0.0], 2).unwrap();
    ensure!(
        agree == 1.0 && disagree == -1.0 && unsure_a.abs() == 0.0 && unsure_b.abs() == 0.0,
        "agreement endpoints {agree} {disagree} {unsure_a} {unsure_b}"
    );
    for _ in 0..10_000 {
        let c = rng.random_range(2..=8);
        let p = random_simplex(&mut rng, c);
        let h = normalized_entropy(&p).unwrap();
        ensure!((0.0..=1.0).contains(&h), "entropy {h} out of range");
        ensure!(
            p.max() >= 1.0 / c as f64 - 1e-15 && p.max() <= 1.0,
            "max probability {}",
            p.max()
        );
    }

    // every reference measure on random points, in and far out of distribution
    let data = make_blobs(900, 5, 3, 2.0, 3).map_err(|e| e.to_string())?;
    let clf = ClassifierConfig::GaussianNb
        .fit(&data, 3)
        .map_err(|e| e.to_string())?;
    let (fitted, _) = fit_measures(&reference_measures(), &data, &clf, 3, Execution::default())
        .map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> = (0..10_000)
        .map(|i| {
            let spread = if i % 2 == 0 { 3.0 } else { 25.0 };
            (0..5).map(|_| rng.random_range(-spread..spread)).collect()
        })
        .collect();
    let probes = Dataset::from_rows(&rows, vec![0; rows.len()], 3).map_err(|e| e.to_string())?;
    let (points, _) =
        compute_batch(&fitted, &probes, &clf, Execution::default()).map_err(|e| e.to_string())?;
    let layout = MeasureLayout::reference();
    for p in &points {
        ensure!(p.faults.is_empty(), "scoring faults {:?}", p.faults);
        for (name, &v) in layout.names().iter().zip(&p.vector.0) {
            let ok = match name.as_str() {
                "UM1" | "UM3" | "UM8" => (0.0..=1.0).contains(&v),
                "UM2" | "UM4" | "UM7" => v > 0.0 && v <= 1.0,
                "UM9" => v >= 0.0 && v.is_finite(),
                _ => (-1.0..=1.0).contains(&v),
            };
            ensure!(ok, "{name} = {v} out of range");
        }
    }
    Ok("entropy endpoints exact, agreement endpoints exact, 10000 probability vectors and 10000 points in range".into())
}

/// Nearest-neighbor agreement computed from scratch by full sort.
fn neighbor_oracle(
    train: &Dataset,
    predictions: &[usize],
    k: usize,
    row: &[f64],
    predicted: usize,
) -> f64 {
    let (n, f) = (train.len(), train.n_features());
    let mut mean = vec![0.0; f];
    let mut sd = vec![0.0; f];
    for j in 0..f {
        mean[j] = train.column(j).sum::<f64>() / n as f64;
        let ss: f64 = train.column(j).map(|v| (v - mean[j]) * (v - mean[j])).sum();
        sd[j] = (ss / (n as f64 - 1.0)).sqrt();
        if sd[j] < 1e-12 {
            sd[j] = 1.0;
        }
    }
    let z = |r: &[f64]| -> Vec<f64> { (0..f).map(|j| (r[j] - mean[j]) / sd[j]).collect() };
    let q = z(row);
    let mut d: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            (
                z(train.row(i))
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum(),
                i,
            )
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.min(n);
    d[..k]
        .iter()
        .filter(|(_, i)| predictions[*i] == predicted)
        .count() as f64
        / k as f64
}

fn gaussian_rows(rng: &mut impl rand::Rng, n: usize, f: usize, c: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..f)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(rng);
                    z + ((i % c) * (j + 1)) as f64 * 0.7
                })
                .collect()
        })
        .collect();
    Dataset::from_rows(&rows, (0..n).map(|i| i % c).collect(), c).unwrap()
}

fn oracle_equivalence() -> Check {
    let mut rng = seeded(31);
    let mut compared = 0;
    for inst in 0..50 {
        let n = rng.random_range(20..=500);
        let f = rng.random_range(1..=5);
        let c = rng.random_range(2..=3);
        let k = [1, 3, 7, 19, n + 3][inst % 5];
        let train = gaussian_rows(&mut rng, n, f, c);
        let clf = ClassifierConfig::tree()
            .fit(&train, inst as u64)
            .map_err(|e| e.to_string())?;
        let predictions: Vec<usize> = train.rows().map(|r| clf.predict(r).unwrap()).collect();
        let um8 = MeasureConfig::NeighborAgreement { k }
            .fit(&train, &clf, 0)
            .map_err(|e| e.to_string())?;
        for q in 0..20 {
            let row: Vec<f64> = if q < 5 {
                train.row(rng.random_range(0..n)).to_vec()
            } else {
                (0..f).map(|_| rng.random_range(-3.0..4.0)).collect()
            };
            let proba = clf.predict_proba(&row).unwrap();
            let predicted = proba.argmax();
            let got = um8
                .score(&row, &proba, predicted)
                .map_err(|e| e.to_string())?;
            let want = neighbor_oracle(&train, &predictions, k, &row, predicted);
            ensure!(
                got == want,
                "instance {inst} query {q}: {got} vs oracle {want}"
            );
            compared += 1;
        }
    }

    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let f = rng.random_range(1..=5);
        let n = rng.random_range(60..=300);
        let train = gaussian_rows(&mut rng, n, f, 3);
        let clf = ClassifierConfig::GaussianNb
            .fit(&train, 0)
            .map_err(|e| e.to_string())?;
        let um4 = MeasureConfig::Bayesian {
            summary: PosteriorSummary::MaxPosterior,
        }
        .fit(&train, &clf, 0)
        .map_err(|e| e.to_string())?;
        ensure!(
            matches!(um4, FittedMeasure::Bayesian { .. }),
            "unexpected fitted measure"
        );
        let mut dists = Vec::new();
        let mut priors = Vec::new();
        for class in 0..3 {
            let idx: Vec<usize> = (0..n).filter(|&i| train.label(i) == class).collect();
            let m = idx.len() as f64;
            priors.push(m / n as f64);
            dists.push(
                (0..f)
                    .map(|j| {
                        let mu = idx.iter().map(|&i| train.row(i)[j]).sum::<f64>() / m;
                        let var = idx
                            .iter()
                            .map(|&i| (train.row(i)[j] - mu).powi(2))
                            .sum::<f64>()
                            / m;
                        Normal::new(mu, var.sqrt()).unwrap()
                    })
                    .collect::<Vec<_>>(),
            );
        }
        for _ in 0..100 {
            let row: Vec<f64> = (0..f).map(|_| rng.random_range(-2.0..4.0)).collect();
            let joint: Vec<f64> = (0..3)
                .map(|cl| {
                    priors[cl]
                        * dists[cl]
                            .iter()
                            .zip(&row)
                            .map(|(d, &x)| d.pdf(x))
                            .product::<f64>()
                })
                .collect();
            let total: f64 = joint.iter().sum();
            let oracle: Vec<f64> = joint.iter().map(|j| j / total).collect();
            let proba = clf.predict_proba(&row).unwrap();
            for (a, b) in proba.as_slice().iter().zip(&oracle) {
                worst = worst.max((a - b).abs());
            }
            let max = oracle.iter().cloned().fold(0.0, f64::max);
            let score = um4.score(&row, &proba, proba.argmax()).unwrap();
            worst = worst.max((score - max).abs());
        }
        ensure!(worst <= 1e-9, "instance {inst}: posterior error {worst:e}");
    }
    Ok(format!(
        "{compared} neighbor-agreement queries exact over 50 instances; posterior error {worst:.1e} over 2000 queries"
    ))
}

fn gradient_check() -> Check {
    let mut rng = seeded(41);
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let batch: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let loss = |ae: &Autoencoder| -> f64 {
        rows.iter()
            .map(|r| ae.reconstruction_error(r).unwrap())
            .sum::<f64>()
            / rows.len() as f64
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..5 {
        for ae in [
            Autoencoder::new(3, seed).unwrap(),
            Autoencoder::with_layers(vec![3, 4, 2, 4, 3], seed).unwrap(),
        ] {
            let (l, grad) = ae.loss_and_gradient(&batch);
            ensure!(
                (l - loss(&ae)).abs() < 1e-12,
                "loss mismatch {l} vs {}",
                loss(&ae)
            );
            let h = 1e-5;
            for (k, &g) in grad.iter().enumerate() {
                let mut plus = ae.clone();
                plus.params[k] += h;
                let mut minus = ae.clone();
                minus.params[k] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let scale = g.abs().max(numeric.abs());
                if scale > 1e-7 {
                    worst = worst.max((g - numeric).abs() / scale);
                }
                checked += 1;
            }
        }
    }
    ensure!(worst < 1e-4, "relative error {worst:e}");
    Ok(format!(
        "{checked} parameters, largest relative error {worst:.1e}"
    ))
}

fn blob_experiment() -> Check {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for seed in 0..5u64 {
        let start = Instant::now();
        let data = make_blobs(4000, 8, 2, 1.2, seed).map_err(|e| e.to_string())?;
        let (train, test) =
            split(&data, &SplitSpec::new(0.5, seed).stratified()).map_err(|e| e.to_string())?;
        let (fit_rows, _) = adjudication_split(&train, AdjudicatorSource::DEFAULT_HOLDOUT, seed)
            .map_err(|e| e.to_string())?;
        let clf = ClassifierConfig::GaussianNb
            .fit(&fit_rows, seed)
            .map_err(|e| e.to_string())?;
        let wrapper = SproutWrapper::build(
            &train,
            clf,
            &reference_measures(),
            AdjudicatorSource::train(AdjudicatorConfig::default()),
            seed,
        )
        .map_err(|e| e.to_string())?;
        let m = wrapper
            .evaluate(&test, Execution::default())
            .map_err(|e| e.to_string())?
            .metrics;
        let secs = start.elapsed().as_secs_f64();
        lines.push(format!(
            "seed {seed}: eps {:.4} eps_w {:.4} phi {:.4} ({secs:.1} s)",
            m.epsilon, m.epsilon_w, m.phi
        ));
        if !(0.1..=0.3).contains(&m.epsilon) {
            failures.push(format!(
                "seed {seed}: eps {:.4} outside [0.1, 0.3]",
                m.epsilon
            ));
        }
        if m.epsilon_w > m.epsilon / 2.0 {
            failures.push(format!("seed {seed}: eps_w {:.4} > eps/2", m.epsilon_w));
        }
        if m.phi > 2.0 * m.epsilon {
            failures.push(format!("seed {seed}: phi {:.4} > 2 eps", m.phi));
        }
        if secs >= 60.0 {
            failures.push(format!("seed {seed}: {secs:.1} s"));
        }
    }
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(format!("{} [{}]", failures.join("; "), lines.join("; ")))
    }
}

fn oracle_adjudicator() -> Check {
    let mut out = Vec::new();
    for seed in 0..3u64 {
        let data = make_blobs(1200, 6, 3, 1.0, seed).map_err(|e| e.to_string())?;
        let (train, test) = split(&data, &SplitSpec::new(0.5, seed)).map_err(|e| e.to_string())?;
        let clf = ClassifierConfig::GaussianNb
            .fit(&train, seed)
            .map_err(|e| e.to_string())?;
        let wrapper = SproutWrapper::build(
            &train,
            clf,
            &reference_measures(),
            AdjudicatorSource::Pretrained(BinaryAdjudicator::always_pass(
                MeasureLayout::reference(),
            )),
            seed,
        )
        .map_err(|e| e.to_string())?;
        let m = wrapper
            .evaluate_oracle(&test, Execution::default())
            .map_err(|e| e.to_string())?
            .metrics;
        ensure!(
            m.epsilon_w == 0.0 && m.phi_c == 0.0,
            "seed {seed}: eps_w {} phi_c {}",
            m.epsilon_w,
            m.phi_c
        );
        ensure!(
            m.epsilon > 0.0 && m.phi_m == m.epsilon,
            "seed {seed}: phi_m {} eps {}",
            m.phi_m,
            m.epsilon
        );
        out.push(format!("eps {:.4}", m.epsilon));
    }
    Ok(format!(
        "eps_w = 0 and phi_c = 0 on 3 seeds ({})",
        out.join(", ")
    ))
}

fn single_measure_examples(n: usize, seed: u64) -> Vec<AdjudicationExample> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..11).map(|_| rng.random::<f64>()).collect();
            AdjudicationExample {
                misc: v[2] > 0.5,
                measures: MeasureVector(v),
            }
        })
        .collect()
}

fn importance_report() -> Check {
    let layout = MeasureLayout::reference();
    let mut totals = Vec::new();
    let mut um3 = f64::INFINITY;
    for seed in 0..5 {
        let trained = train_adjudicator(
            &layout,
            &single_measure_examples(1000, seed),
            &AdjudicatorConfig {
                seed,
                ..AdjudicatorConfig::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let report = trained
            .adjudicator
            .importance_report(None)
            .map_err(|e| e.to_string())?;
        let total = report.total();
        ensure!(
            (total - 1.0).abs() <= 1e-9,
            "seed {seed}: importances sum to {total}"
        );
        let v = report.get("UM3").unwrap_or(0.0);
        ensure!(
            v > 0.9,
            "seed {seed}: determining measure has importance {v}"
        );
        totals.push(total);
        um3 = um3.min(v);
    }
    let dev = totals.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    Ok(format!(
        "5 forests, sum deviation {dev:.1e}, determining measure >= {um3:.3}"
    ))
}

fn measures_csv_bytes(
    data: &Dataset,
    seed: u64,
    exec: Execution,
    path: &std::path::Path,
) -> Vec<u8> {
    let (train, test) = split(data, &SplitSpec::new(0.3, seed)).unwrap();
    let clf = ClassifierConfig::GaussianNb.fit(&train, seed).unwrap();
    let (fitted, _) = fit_measures(&reference_measures(), &train, &clf, seed, exec).unwrap();
    let (points, _) = compute_batch(&fitted, &test, &clf, exec).unwrap();
    let misc: Vec<bool> = points
        .iter()
        .zip(test.labels())
        .map(|(p, &y)| p.predicted != y)
        .collect();
    let vectors: Vec<MeasureVector> = points.into_iter().map(|p| p.vector).collect();
    write_measures_csv(path, &MeasureLayout::reference(), &vectors, &misc).unwrap();
    std::fs::read(path).unwrap()
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = make_blobs(1500, 8, 2, 1.2, 5).map_err(|e| e.to_string())?;
    let a = measures_csv_bytes(&data, 8, Execution::Parallel, &dir.path().join("a.csv"));
    let b = measures_csv_bytes(&data, 8, Execution::Parallel, &dir.path().join("b.csv"));
    let s = measures_csv_bytes(&data, 8, Execution::Sequential, &dir.path().join("s.csv"));
    ensure!(a == b, "measures CSV differs across reruns");
    ensure!(
        a == s,
        "measures CSV differs between sequential and parallel runs"
    );

    let (train, _) = split(&data, &SplitSpec::new(0.3, 8)).map_err(|e| e.to_string())?;
    let (fit_rows, _) = adjudication_split(&train, AdjudicatorSource::DEFAULT_HOLDOUT, 8)
        .map_err(|e| e.to_string())?;
    let clf = ClassifierConfig::GaussianNb
        .fit(&fit_rows, 8)
        .map_err(|e| e.to_string())?;
    let wrapper = SproutWrapper::build(
        &train,
        clf,
        &reference_measures(),
        AdjudicatorSource::train(AdjudicatorConfig::default()),
        8,
    )
    .map_err(|e| e.to_string())?;
    let wpath = dir.path().join("wrapper.json");
    wrapper.save(&wpath).map_err(|e| e.to_string())?;
    let wloaded: SproutWrapper = SproutWrapper::load(&wpath).map_err(|e| e.to_string())?;
    let apath = dir.path().join("adjudicator.json");
    wrapper
        .adjudicator
        .save(&apath)
        .map_err(|e| e.to_string())?;
    let aloaded = BinaryAdjudicator::load(&apath).map_err(|e| e.to_string())?;

    let mut rng = seeded(derive_seed(8, 99));
    let mut omitted = 0;
    for i in 0..1000 {
        let row: Vec<f64> = (0..8).map(|_| rng.random_range(-4.0..5.0)).collect();
        let (_, x) = wrapper.assess(&row).map_err(|e| e.to_string())?;
        let (_, y) = wloaded.assess(&row).map_err(|e| e.to_string())?;
        ensure!(
            x.verdict == y.verdict
                && x.omission_probability.to_bits() == y.omission_probability.to_bits(),
            "wrapper verdict {i} differs after reload"
        );
        omitted += usize::from(x.verdict == sprout_core::adjudicator::Verdict::Omit);
        let v = MeasureVector((0..11).map(|_| rng.random_range(-1.0..1.5)).collect());
        let p = wrapper
            .adjudicator
            .adjudicate(&v)
            .map_err(|e| e.to_string())?;
        let q = aloaded.adjudicate(&v).map_err(|e| e.to_string())?;
        ensure!(
            p.verdict == q.verdict
                && p.omission_probability.to_bits() == q.omission_probability.to_bits(),
            "adjudicator verdict {i} differs after reload"
        );
    }
    Ok(format!(
        "CSV identical across reruns and execution modes ({} bytes); 1000 wrapper and 1000 adjudicator verdicts bit-identical after reload ({omitted} omissions)",
        a.len()
    ))
}

fn worked_example() -> Check {
    let m = WrapperMetrics::from_counts(OutcomeCounts {
        correct_passed: 7736,
        correct_omitted: 1,
        misc_passed: 0,
        misc_omitted: 2263,
    })
    .map_err(|e| e.to_string())?;
    let expected = [
        ("alpha", m.alpha, 0.7737),
        ("epsilon", m.epsilon, 0.2263),
        ("phi", m.phi, 0.2264),
        ("epsilon_w", m.epsilon_w, 0.0),
        ("phi_m", m.phi_m, 0.2263),
        ("phi_c", m.phi_c, 0.0001),
    ];
    for (name, got, want) in expected {
        ensure!(
            format!("{got:.4}") == format!("{want:.4}"),
            "{name} = {got}, expected {want}"
        );
        ensure!(
            (got - want).abs() < 1e-12,
            "{name} = {got}, expected {want}"
        );
    }
    Ok("alpha 0.7737, epsilon 0.2263, phi 0.2264, epsilon_w 0, phi_m 0.2263, phi_c 0.0001".into())
}

fn main() {
    let checks: [NamedCheck; 9] = [
        ("metric identities", metric_identities),
        ("measure ranges and endpoints", measure_ranges),
        ("neighbor and posterior oracles", oracle_equivalence),
        ("autoencoder gradient", gradient_check),
        ("scaled blob experiment", blob_experiment),
        ("oracle adjudicator bound", oracle_adjudicator),
        ("importance report", importance_report),
        ("determinism and persistence", determinism),
        ("worked example counts", worked_example),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.2} s]");
            }
        }
    }
    println!("{} of {} acceptance checks passed", 9 - failed, 9);
    if failed > 0 {
        std::process::exit(1);
    }
}
