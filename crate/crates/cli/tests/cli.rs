use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sprout_core::adjudicator::{AdjudicatorModel, BinaryAdjudicator, Combine, Rule};
use sprout_core::uncertainty::MeasureLayout;

const HEADER: &str = "UM1,UM2,UM3,UM4,UM5,UM6_ST,UM6_NB,UM6_TR,UM7,UM8,UM9,misc_flag";

fn sprout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sprout"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = sprout(args);
    assert!(
        out.status.success(),
        "sprout {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    data: PathBuf,
}

impl Fixture {
    fn new(rows: &str, separation: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("blobs.csv");
        ok(&[
            "synth",
            "--out",
            s(&data),
            "--seed",
            "4",
            "--rows",
            rows,
            "--separation",
            separation,
        ]);
        Self { dir, data }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn measures(&self, name: &str, seed: &str) -> PathBuf {
        let out = self.path(name);
        ok(&[
            "measures",
            "--dataset",
            s(&self.data),
            "--out",
            s(&out),
            "--seed",
            seed,
        ]);
        out
    }
}

/// Parses the two-line metrics CSV into (name, value) pairs.
fn metrics(path: &Path) -> Vec<(String, String)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let names = lines.next().unwrap().split(',').map(String::from);
    let values = lines.next().unwrap().split(',').map(String::from);
    names.zip(values).collect()
}

fn metric(m: &[(String, String)], name: &str) -> f64 {
    m.iter()
        .find(|(n, _)| n == name)
        .unwrap()
        .1
        .parse()
        .unwrap()
}

#[test]
fn measures_csv_layout_and_reproducibility() {
    let fx = Fixture::new("500", "1.5");
    let a = fx.measures("a.csv", "9");
    let b = fx.measures("b.csv", "9");
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER);
    assert_eq!(text.lines().count(), 151);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fx.path("a.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["timings"].as_array().unwrap().len(), 11);
    assert!(meta["substitutions"][0]
        .as_str()
        .unwrap()
        .contains("random forest"));
}

#[test]
fn input_errors_exit_with_2() {
    let fx = Fixture::new("200", "2.0");
    let out = fx.path("x.csv");
    let missing = sprout(&[
        "measures",
        "--dataset",
        "/no/such/file.csv",
        "--out",
        s(&out),
        "--seed",
        "1",
    ]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());
    let no_seed = sprout(&["measures", "--dataset", s(&fx.data), "--out", s(&out)]);
    assert_eq!(no_seed.status.code(), Some(2));
    let bad_clf = sprout(&[
        "measures",
        "--dataset",
        s(&fx.data),
        "--out",
        s(&out),
        "--seed",
        "1",
        "--classifier",
        "svm",
    ]);
    assert_eq!(bad_clf.status.code(), Some(2));
    let bad_label = sprout(&[
        "measures",
        "--dataset",
        s(&fx.data),
        "--out",
        s(&out),
        "--seed",
        "1",
        "--label-column",
        "y",
    ]);
    assert_eq!(bad_label.status.code(), Some(2));
    assert_eq!(sprout(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn adjudicator_training_pools_sources() {
    let fx = Fixture::new("600", "1.2");
    let a = fx.measures("a.csv", "1");
    let b = fx.measures("b.csv", "2");
    let bundle = fx.path("adj.json");
    ok(&[
        "train-adjudicator",
        "--dataset",
        s(&a),
        "--dataset",
        s(&b),
        "--out",
        s(&bundle),
        "--seed",
        "3",
    ]);
    let adj = BinaryAdjudicator::load(&bundle).unwrap();
    assert_eq!(
        adj.metadata.sources,
        vec![s(&a).to_string(), s(&b).to_string()]
    );
    assert_eq!(adj.metadata.examples, 360);
    assert!(adj.metadata.validation.is_some());
    assert!(adj.metadata.timings.is_some());
    assert!(adj.is_forest());

    let imp = fx.path("imp.csv");
    let out = ok(&["importance", "--bundle", s(&bundle), "--out", s(&imp)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("total 1.0000000000"));
    let text = std::fs::read_to_string(&imp).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 11);
    assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    assert!(text.contains(",0.289,"));
}

#[test]
fn mismatched_layouts_are_rejected() {
    let fx = Fixture::new("300", "1.2");
    let a = fx.measures("a.csv", "1");
    let other = fx.path("other.csv");
    std::fs::write(&other, "UM2,UM3,misc_flag\n0.9,0.1,correct\n0.6,0.8,misc\n").unwrap();
    let r = sprout(&[
        "train-adjudicator",
        "--dataset",
        s(&a),
        "--dataset",
        s(&other),
        "--out",
        s(&fx.path("x.json")),
        "--seed",
        "1",
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("layout"));
}

#[test]
fn constant_and_oracle_bundles() {
    let fx = Fixture::new("600", "1.2");
    let a = fx.measures("a.csv", "5");
    let text = std::fs::read_to_string(&a)
        .unwrap()
        .replace(",misc\n", ",correct\n");
    let all_correct = fx.path("correct.csv");
    std::fs::write(&all_correct, text).unwrap();
    let bundle = fx.path("pass.json");
    let out = ok(&[
        "train-adjudicator",
        "--dataset",
        s(&all_correct),
        "--out",
        s(&bundle),
        "--seed",
        "1",
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    let m = fx.path("m.csv");
    ok(&[
        "evaluate",
        "--dataset",
        s(&fx.data),
        "--bundle",
        s(&bundle),
        "--seed",
        "5",
        "--out",
        s(&m),
    ]);
    let pass = metrics(&m);
    assert_eq!(metric(&pass, "epsilon_w"), metric(&pass, "epsilon"));
    assert_eq!(metric(&pass, "phi"), 0.0);
    assert_eq!(pass.last().unwrap().1, "NA");

    let o = fx.path("o.csv");
    let trace = fx.path("trace.csv");
    ok(&[
        "evaluate",
        "--dataset",
        s(&fx.data),
        "--bundle",
        s(&bundle),
        "--seed",
        "5",
        "--oracle",
        "--out",
        s(&o),
        "--trace",
        s(&trace),
    ]);
    let oracle = metrics(&o);
    assert_eq!(metric(&oracle, "epsilon_w"), 0.0);
    assert_eq!(metric(&oracle, "phi_c"), 0.0);
    assert_eq!(
        std::fs::read_to_string(&trace).unwrap().lines().count(),
        181
    );

    let importance = sprout(&["importance", "--bundle", s(&bundle)]);
    assert_eq!(importance.status.code(), Some(2));
}

#[test]
fn evaluate_report_obeys_identities() {
    let fx = Fixture::new("1000", "1.2");
    let m = fx.path("m.csv");
    ok(&[
        "evaluate",
        "--dataset",
        s(&fx.data),
        "--seed",
        "2",
        "--out",
        s(&m),
    ]);
    let r = metrics(&m);
    let g = |n| metric(&r, n);
    assert!((g("alpha") + g("epsilon") - 1.0).abs() < 1e-12);
    assert!((g("phi") - g("phi_c") - g("phi_m")).abs() < 1e-12);
    assert!((g("alpha_w") - (g("alpha") - g("phi_c"))).abs() < 1e-12);
    assert!((g("epsilon_w") - (g("epsilon") - g("phi_m"))).abs() < 1e-12);
    assert!((g("alpha_w") + g("epsilon_w") + g("phi") - 1.0).abs() < 1e-12);
    assert_eq!(g("n"), 300.0);
}

#[test]
fn rule_bundle_has_no_importances() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("rules.json");
    let adj = BinaryAdjudicator::new(
        MeasureLayout::reference(),
        AdjudicatorModel::Rules {
            rules: vec![Rule {
                measure: 2,
                cutoff: 0.9,
                below: false,
            }],
            combine: Combine::Any,
        },
        0.5,
    )
    .unwrap();
    adj.save(&bundle).unwrap();
    let r = sprout(&["importance", "--bundle", s(&bundle)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let fx = Fixture::new("300", "1.5");
    let cfg = fx.path("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "dataset = [{:?}]\nseed = 11\nclassifier = \"lda\"\ntest_fraction = 0.5\n\n[[measures]]\nname = \"UM2\"\nconfig = {{ kind = \"max_probability\" }}\n\n[[measures]]\nname = \"UM3\"\nconfig = {{ kind = \"entropy\" }}\n",
            s(&fx.data)
        ),
    )
    .unwrap();
    let out = fx.path("m.csv");
    ok(&[
        "measures",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--classifier",
        "tree",
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "UM2,UM3,misc_flag");
    assert_eq!(text.lines().count(), 151);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fx.path("m.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["classifier"]["kind"], "decision_tree");

    let bad = fx.path("bad.toml");
    std::fs::write(&bad, "sed = 3\n").unwrap();
    assert_eq!(
        sprout(&["measures", "--config", s(&bad), "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );
}
