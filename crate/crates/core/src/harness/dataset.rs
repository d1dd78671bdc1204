//! Numeric datasets: CSV ingestion, synthetic generators and fold splits.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attack::Target;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes(v) => v.len(),
            Labels::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn target(&self, i: usize) -> Target {
        match self {
            Labels::Classes(v) => Target::Class(v[i]),
            Labels::Values(v) => Target::Value(v[i]),
        }
    }

    /// `max label + 1`, at least 2; `None` for regression labels.
    pub fn n_classes(&self) -> Option<usize> {
        match self {
            Labels::Classes(v) => Some(v.iter().copied().max().map_or(2, |m| (m + 1).max(2))),
            Labels::Values(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelKind {
    Class,
    Value,
}

/// Row-major numeric feature matrix plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Labels,
    pub feature_names: Vec<String>,
    pub source_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSummary {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub sigma: f64,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Labels,
        feature_names: Vec<String>,
        source_path: impl Into<String>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::Data("dataset has no feature columns".into()));
        }
        if let Some(i) = features.iter().position(|r| r.len() != d) {
            return Err(Error::Data(format!(
                "row {i} has {} values, expected {d}",
                features[i].len()
            )));
        }
        if labels.len() != features.len() {
            return Err(Error::Data(format!(
                "{} labels for {} rows",
                labels.len(),
                features.len()
            )));
        }
        for (i, r) in features.iter().enumerate() {
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "row {i}, column {j}: non-finite value"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            source_path: source_path.into(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_single_class(&self) -> bool {
        match &self.labels {
            Labels::Classes(v) => v.iter().all(|&c| c == v[0]),
            Labels::Values(_) => false,
        }
    }

    pub fn rows(&self, idx: &[usize]) -> Vec<&[f64]> {
        idx.iter().map(|&i| self.features[i].as_slice()).collect()
    }

    pub fn summary(&self) -> Vec<FeatureSummary> {
        let n = self.n_rows() as f64;
        (0..self.n_features())
            .map(|j| {
                let col = self.features.iter().map(|r| r[j]);
                let min = col.clone().fold(f64::INFINITY, f64::min);
                let max = col.clone().fold(f64::NEG_INFINITY, f64::max);
                let mean = col.clone().sum::<f64>() / n;
                let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                FeatureSummary {
                    name: self.feature_names[j].clone(),
                    min,
                    max,
                    sigma: var.sqrt(),
                }
            })
            .collect()
    }

    /// Writes the dataset as CSV with a trailing `label` column.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header).expect("in-memory write");
        for (i, row) in self.features.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(match &self.labels {
                Labels::Classes(c) => c[i].to_string(),
                Labels::Values(v) => v[i].to_string(),
            });
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Which column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Numeric strings select by 0-based index when there is no header row
    /// or no header cell of that name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label: &LabelColumn,
    has_header: bool,
    kind: LabelKind,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label, has_header, kind, &path.display().to_string())
}

/// Parses numeric CSV text. String cells in feature columns are rejected
/// with their line and column; encode categoricals before loading.
pub fn parse_csv(
    text: &str,
    label: &LabelColumn,
    has_header: bool,
    kind: LabelKind,
    source: &str,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Option<Vec<String>> = if has_header {
        let h = reader
            .headers()
            .map_err(|e| Error::Data(format!("{source}: cannot read header: {e}")))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Data(format!("{source}: malformed row at line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(|(_, r)| r.len()))
        .ok_or_else(|| Error::Data(format!("{source}: empty file")))?;
    let label_idx = match label {
        LabelColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::Data(format!("{source}: label column {name:?} not found")))?,
        LabelColumn::Index(i) => {
            let by_name = header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == &i.to_string()));
            match by_name {
                Some(p) => p,
                None if *i < width => *i,
                None => {
                    return Err(Error::Data(format!(
                        "{source}: label column {i} out of range for {width} columns"
                    )))
                }
            }
        }
    };
    let names: Vec<String> = (0..width)
        .filter(|&c| c != label_idx)
        .map(|c| {
            header
                .as_ref()
                .map_or_else(|| format!("x{c}"), |h| h[c].clone())
        })
        .collect();
    let col_name = |c: usize| {
        header
            .as_ref()
            .map_or_else(|| format!("#{c}"), |h| format!("{:?}", h[c]))
    };

    let mut features = Vec::with_capacity(records.len());
    let mut class_labels = Vec::new();
    let mut value_labels = Vec::new();
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(Error::Data(format!(
                "{source}: line {line} has {} fields, expected {width}",
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "{source}: line {line}, column {}: non-numeric value {cell:?}",
                    col_name(c)
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{source}: line {line}, column {}: non-finite value",
                    col_name(c)
                )));
            }
            if c == label_idx {
                match kind {
                    LabelKind::Class => {
                        if v < 0.0 || v.fract() != 0.0 {
                            return Err(Error::Data(format!(
                                "{source}: line {line}: class label {cell:?} is not a non-negative integer"
                            )));
                        }
                        class_labels.push(v as usize);
                    }
                    LabelKind::Value => value_labels.push(v),
                }
            } else {
                row.push(v);
            }
        }
        features.push(row);
    }
    let labels = match kind {
        LabelKind::Class => Labels::Classes(class_labels),
        LabelKind::Value => Labels::Values(value_labels),
    };
    let ds = Dataset::new(features, labels, names, source)?;
    if ds.is_single_class() {
        log::warn!("{source}: every row has the same class label");
    }
    Ok(ds)
}

/// Shuffled k-fold partition of `0..n`. Fold sizes differ by at most one.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::Config(format!("{n} rows cannot fill {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, u64::MAX));
    let mut folds = vec![Vec::new(); k];
    for (p, i) in idx.into_iter().enumerate() {
        folds[p % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Synthetic benchmark data, generated offline and deterministically.
pub mod synthetic {
    use super::*;

    /// Two Gaussian clusters with identity covariance. Class 0 is centred at
    /// 5 on every axis, class 1 at `5 + separation`; the label therefore
    /// depends on every feature at once.
    pub fn clusters(n: usize, n_features: usize, separation: f64, seed: u64) -> Dataset {
        let base = 5.0;
        let shift = separation;
        let mut r = rng::stream(seed, 1);
        let noise = Normal::new(0.0, 1.0).expect("valid normal");
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % 2;
            let center = base + shift * y as f64;
            features.push(
                (0..n_features)
                    .map(|_| center + noise.sample(&mut r))
                    .collect(),
            );
            labels.push(y);
        }
        let names = (0..n_features).map(|j| format!("x{j}")).collect();
        Dataset::new(
            features,
            Labels::Classes(labels),
            names,
            "synthetic:clusters",
        )
        .expect("generator output is valid")
    }

    /// The default effectiveness benchmark: 500 rows of [`clusters`] with 100
    /// features and separation 1.5.
    pub fn benchmark(seed: u64) -> Dataset {
        clusters(500, 100, 1.5, seed)
    }

    /// Two interleaved half circles with Gaussian jitter, shifted into the
    /// positive quadrant.
    pub fn half_moons(n: usize, noise: f64, seed: u64) -> Dataset {
        let mut r = rng::stream(seed, 2);
        let jitter = Normal::new(0.0, noise).expect("valid normal");
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % 2;
            let t: f64 = r.random_range(0.0..std::f64::consts::PI);
            let (a, b) = if y == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            features.push(vec![
                a + 2.0 + jitter.sample(&mut r),
                b + 2.0 + jitter.sample(&mut r),
            ]);
            labels.push(y);
        }
        Dataset::new(
            features,
            Labels::Classes(labels),
            vec!["u".into(), "v".into()],
            "synthetic:half-moons",
        )
        .expect("generator output is valid")
    }
}
