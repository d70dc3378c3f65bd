use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use sprout_core::classifiers::ClassifierConfig;
use sprout_core::data::DEFAULT_LABEL_COLUMN;
use sprout_core::uncertainty::{reference_measures, NamedMeasure};

use crate::Usage;

/// Settings read from `--config`. Every field is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub dataset: Vec<PathBuf>,
    pub label_column: Option<String>,
    pub classifier: Option<String>,
    pub bundle: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub test_fraction: Option<f64>,
    pub threshold: Option<f64>,
    pub measures: Option<Vec<NamedMeasure>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Usage(format!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct CommonArgs {
    /// Input CSV; repeat to pool several.
    #[arg(long)]
    pub dataset: Vec<PathBuf>,
    #[arg(long)]
    pub label_column: Option<String>,
    /// gaussian-nb, bernoulli-nb, multinomial-nb, complement-nb, lda,
    /// logistic, tree, forest or knn
    #[arg(long)]
    pub classifier: Option<String>,
    /// Adjudicator bundle (JSON).
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Share of rows held out for testing.
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub datasets: Vec<PathBuf>,
    pub label_column: String,
    pub classifier: ClassifierConfig,
    pub bundle: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub test_fraction: f64,
    pub threshold: Option<f64>,
    pub measures: Vec<NamedMeasure>,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let classifier_name = args
            .classifier
            .clone()
            .or(file.classifier)
            .unwrap_or_else(|| "gaussian-nb".to_string());
        let classifier =
            ClassifierConfig::from_name(&classifier_name).map_err(|e| Usage(e.to_string()))?;
        let test_fraction = args.test_fraction.or(file.test_fraction).unwrap_or(0.3);
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Usage(format!("test fraction {test_fraction} outside (0,1)")).into());
        }
        Ok(Self {
            datasets: if args.dataset.is_empty() {
                file.dataset
            } else {
                args.dataset.clone()
            },
            label_column: args
                .label_column
                .clone()
                .or(file.label_column)
                .unwrap_or_else(|| DEFAULT_LABEL_COLUMN.to_string()),
            classifier,
            bundle: args.bundle.clone().or(file.bundle),
            seed: args.seed.or(file.seed),
            out: args.out.clone().or(file.out),
            test_fraction,
            threshold: file.threshold,
            measures: file.measures.unwrap_or_else(reference_measures),
        })
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Usage("a seed is required (--seed or `seed` in the config)".into()).into()
        })
    }

    pub fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Usage("an output path is required (--out)".into()).into())
    }

    pub fn single_dataset(&self) -> Result<&Path> {
        match self.datasets.as_slice() {
            [one] => Ok(one),
            [] => Err(Usage("--dataset is required".into()).into()),
            _ => Err(Usage("this command takes exactly one --dataset".into()).into()),
        }
    }

    pub fn bundle(&self) -> Result<&Path> {
        self.bundle
            .as_deref()
            .ok_or_else(|| Usage("--bundle is required".into()).into())
    }
}

/// `measures.csv` -> `measures.csv.meta.json`
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}
