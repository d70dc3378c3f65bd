//! Tabular datasets: CSV ingestion, standardization, splitting and
//! synthetic Gaussian blobs.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::rng;

pub const DEFAULT_LABEL_COLUMN: &str = "label";

/// Dense feature matrix (row-major) with class-index labels.
///
/// Labels are indices in `0..class_count`. The original label strings are
/// kept in `label_names` for reporting only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n_rows: usize,
    n_features: usize,
    labels: Vec<usize>,
    class_count: usize,
    feature_names: Vec<String>,
    label_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major `features`. Feature names default to
    /// `x0..`, label names to `0..`.
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        let feature_names = (0..n_features).map(|j| format!("x{j}")).collect();
        let label_names = (0..class_count).map(|c| c.to_string()).collect();
        Self::with_names(features, labels, class_count, feature_names, label_names)
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let f = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != f) {
            return Err(Error::BadRow {
                row: bad + 1,
                message: format!("expected {f} features, got {}", rows[bad].len()),
            });
        }
        Self::new(rows.concat(), f, labels, class_count)
    }

    pub fn with_names(
        features: Vec<f64>,
        labels: Vec<usize>,
        class_count: usize,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        if n_features == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if labels.is_empty() {
            return Err(Error::invalid("dataset needs at least one row"));
        }
        if class_count < 2 {
            return Err(Error::invalid("class_count < 2"));
        }
        if label_names.len() != class_count {
            return Err(Error::invalid(format!(
                "{} label names for {class_count} classes",
                label_names.len()
            )));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::invalid(format!(
                "feature matrix has {} values, expected {} rows x {n_features}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y >= class_count) {
            return Err(Error::BadRow {
                row: i + 1,
                message: format!("label {} outside 0..{class_count}", labels[i]),
            });
        }
        if let Some(k) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadRow {
                row: k / n_features + 1,
                message: format!(
                    "non-finite value in column `{}`",
                    feature_names[k % n_features]
                ),
            });
        }
        Ok(Self {
            n_rows: labels.len(),
            n_features,
            features,
            labels,
            class_count,
            feature_names,
            label_names,
        })
    }

    /// A dataset with no rows. Only consumers that need no training data
    /// (stateless measures) accept it; everything else rejects it.
    pub fn empty(n_features: usize, class_count: usize) -> Self {
        Self {
            features: Vec::new(),
            n_rows: 0,
            n_features,
            labels: Vec::new(),
            class_count,
            feature_names: (0..n_features).map(|j| format!("x{j}")).collect(),
            label_names: (0..class_count).map(|c| c.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features.max(1))
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// Per-class row counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices` (repeats allowed), keeping names and class count.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("selection is empty"));
        }
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Ok(Self {
            features,
            n_rows: indices.len(),
            n_features: self.n_features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        })
    }

    /// Rows at `rows` restricted to the feature `columns`.
    pub fn project(&self, rows: &[usize], columns: &[usize]) -> Result<Self> {
        if rows.is_empty() || columns.is_empty() {
            return Err(Error::invalid("projection is empty"));
        }
        if let Some(&j) = columns.iter().find(|&&j| j >= self.n_features) {
            return Err(Error::invalid(format!("column {j} out of range")));
        }
        let mut features = Vec::with_capacity(rows.len() * columns.len());
        for &i in rows {
            let r = self.row(i);
            features.extend(columns.iter().map(|&j| r[j]));
        }
        Ok(Self {
            features,
            n_rows: rows.len(),
            n_features: columns.len(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            feature_names: columns
                .iter()
                .map(|&j| self.feature_names[j].clone())
                .collect(),
            label_names: self.label_names.clone(),
        })
    }
}

/// Reads a CSV with a header row. Every column except `label_column`
/// becomes a feature (header order); labels map to `0..c` by first
/// appearance.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                let next = label_names.len();
                let y = *label_index.entry(cell.to_string()).or_insert_with(|| {
                    label_names.push(cell.to_string());
                    next
                });
                labels.push(y);
                continue;
            }
            let value: f64 = cell.trim().parse().map_err(|_| Error::BadRow {
                row,
                message: format!("non-numeric value `{cell}` in column `{}`", &headers[j]),
            })?;
            if !value.is_finite() {
                return Err(Error::BadRow {
                    row,
                    message: format!("non-finite value `{cell}` in column `{}`", &headers[j]),
                });
            }
            features.push(value);
        }
    }
    let class_count = label_names.len();
    Dataset::with_names(features, labels, class_count, feature_names, label_names)
}

/// Formats a float with 17 significant digits; parsing it back is exact.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes `data` as CSV with the label column last, using the original
/// label names.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = data.feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    writer.write_record(&header)?;
    for (i, row) in data.rows().enumerate() {
        let mut record: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        record.push(data.label_names[data.labels[i]].clone());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Per-feature affine map to zero mean, unit sample variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Sample standard deviations below this are treated as zero.
pub const MIN_STD: f64 = 1e-12;

impl Standardizer {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::invalid("standardizer needs at least 2 rows"));
        }
        let n = train.len() as f64;
        let f = train.n_features();
        let mut means = vec![0.0; f];
        for row in train.rows() {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut ss = vec![0.0; f];
        for row in train.rows() {
            for ((s, &v), &m) in ss.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = ss
            .into_iter()
            .map(|s| {
                let sd = (s / (n - 1.0)).sqrt();
                if sd < MIN_STD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.means.len(), row.len())?;
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }

    pub fn inverse_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.means.len(), row.len())?;
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&z, (&m, &s))| z * s + m)
            .collect())
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        check_dims(self.means.len(), data.n_features())?;
        let mut out = data.clone();
        for row in out.features.chunks_exact_mut(self.means.len()) {
            for ((v, &m), &s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Self {
        Self {
            test_fraction,
            seed,
            stratified: false,
        }
    }

    pub fn stratified(mut self) -> Self {
        self.stratified = true;
        self
    }
}

/// Row indices of the (train, test) partition, each sorted ascending.
pub fn split_indices(data: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction {} outside (0,1)",
            spec.test_fraction
        )));
    }
    let mut rng = rng::seeded(spec.seed);
    let mut test = Vec::new();
    let mut train = Vec::new();
    if spec.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.class_count()];
        for (i, &y) in data.labels().iter().enumerate() {
            by_class[y].push(i);
        }
        for mut members in by_class {
            let k = (members.len() as f64 * spec.test_fraction).round() as usize;
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..k]);
            train.extend_from_slice(&members[k..]);
        }
    } else {
        let mut all: Vec<usize> = (0..data.len()).collect();
        let k = (data.len() as f64 * spec.test_fraction).round() as usize;
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..k]);
        train.extend_from_slice(&all[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid(format!(
            "test fraction {} leaves an empty partition of {} rows",
            spec.test_fraction,
            data.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(data, spec)?;
    Ok((data.select(&train)?, data.select(&test)?))
}

/// `c` isotropic unit-variance Gaussian clusters with balanced labels
/// (`label = i mod c`).
///
/// Class `i` is centered at `separation / sqrt(2) * (1 + i / f) * e_(i mod f)`,
/// so centers on distinct axes lie exactly `separation` apart.
pub fn make_blobs(n: usize, f: usize, c: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if f == 0 || c < 2 || n < c {
        return Err(Error::invalid(format!(
            "make_blobs needs n >= c >= 2 and f >= 1 (n={n}, f={f}, c={c})"
        )));
    }
    if !separation.is_finite() {
        return Err(Error::invalid("separation must be finite"));
    }
    let scale = separation / std::f64::consts::SQRT_2;
    let mut rng = rng::seeded(seed);
    let mut features = Vec::with_capacity(n * f);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % c;
        let axis = y % f;
        let center = scale * (1 + y / f) as f64;
        for j in 0..f {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(if j == axis { center + noise } else { noise });
        }
        labels.push(y);
    }
    Dataset::new(features, f, labels, c)
}
