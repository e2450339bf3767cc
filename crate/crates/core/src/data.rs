//! Tabular datasets, CSV loading and train/test split policies.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// An immutable labelled feature matrix.
///
/// Labels are dense class ids in `0..k`. `k` is fixed by the label encoding,
/// so a subset (e.g. one side of a split) keeps the parent's `k` even when it
/// does not contain every class.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<usize>,
    k: usize,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    name: String,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        x: DMatrix<f64>,
        y: Vec<usize>,
        k: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let class_names = (0..k).map(|c| c.to_string()).collect();
        Self::with_class_names(name, x, y, k, feature_names, class_names)
    }

    pub fn with_class_names(
        name: impl Into<String>,
        x: DMatrix<f64>,
        y: Vec<usize>,
        k: usize,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (m, n) = x.shape();
        if m == 0 || n == 0 {
            return Err(Error::InvalidDataset(format!("shape {m}x{n} is empty")));
        }
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        if y.len() != m {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {m} rows",
                y.len()
            )));
        }
        if feature_names.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {n} columns",
                feature_names.len()
            )));
        }
        if class_names.len() != k {
            return Err(Error::InvalidDataset(format!(
                "{} class names for k = {k}",
                class_names.len()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidDataset(format!("label {bad} outside 0..{k}")));
        }
        for (col, column) in x.column_iter().enumerate() {
            if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Self {
            x,
            y,
            k,
            feature_names,
            class_names,
            name: name.into(),
        })
    }

    /// Builds a dataset from row vectors with generated feature names.
    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>], y: Vec<usize>, k: usize) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDataset("ragged rows".into()));
        }
        let x = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let names = (0..n).map(|j| format!("f{j}")).collect();
        Self::new(name, x, y, k, names)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    /// Number of samples.
    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    /// Number of features.
    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// Number of classes in the label encoding.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.x.row(i).into_owned()
    }

    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(indices);
        let y = indices.iter().map(|&i| self.y[i]).collect();
        Self::with_class_names(
            self.name.clone(),
            x,
            y,
            self.k,
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }

    /// Same labels and metadata with a replacement feature matrix.
    pub fn with_features(&self, x: DMatrix<f64>) -> Result<Self> {
        if x.shape() != self.x.shape() {
            return Err(Error::InvalidDataset("feature matrix shape changed".into()));
        }
        Self::with_class_names(
            self.name.clone(),
            x,
            self.y.clone(),
            self.k,
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }

    /// Same features and metadata with replacement labels.
    pub fn with_labels(&self, y: Vec<usize>) -> Result<Self> {
        Self::with_class_names(
            self.name.clone(),
            self.x.clone(),
            y,
            self.k,
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }

    /// Appends rows, keeping the existing rows as a prefix.
    pub fn append_rows(&self, rows: &[DVector<f64>], labels: &[usize]) -> Result<Self> {
        let (m, n) = self.x.shape();
        let extra = rows.len();
        let mut x = self.x.clone().resize_vertically(m + extra, 0.0);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::WidthMismatch { expected: n, found: row.len() });
            }
            x.row_mut(m + r).copy_from(&row.transpose());
        }
        let mut y = self.y.clone();
        y.extend_from_slice(labels);
        Self::with_class_names(
            self.name.clone(),
            x,
            y,
            self.k,
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// How a dataset is partitioned into train and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitPolicy {
    /// Shuffle by `seed`, then the first `⌊m·ratio⌋` rows become train.
    Ratio { ratio: f64, seed: u64 },
    /// Train and test come from separate files (e.g. release versions).
    Presplit,
}

impl SplitPolicy {
    /// 75/25, used for issue lifetime data.
    pub fn issue_lifetime(seed: u64) -> Self {
        SplitPolicy::Ratio { ratio: 0.75, seed }
    }

    /// 80/20, used for static code warnings.
    pub fn static_code(seed: u64) -> Self {
        SplitPolicy::Ratio { ratio: 0.8, seed }
    }
}

/// Shuffles with `seed` and slices off the first `⌊m·ratio⌋` rows as train.
pub fn split_ratio(d: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidDataset(format!("split ratio {ratio} outside (0, 1)")));
    }
    let m = d.m();
    let n_train = (m as f64 * ratio).floor() as usize;
    if n_train == 0 || n_train == m {
        return Err(Error::DegenerateSplit { train: n_train, test: m - n_train });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng_from(seed));
    let train = d.subset(&order[..n_train])?;
    let test = d.subset(&order[n_train..])?;
    Ok((train, test))
}

/// Validates a version-based pair and returns it untouched.
pub fn presplit(train: Dataset, test: Dataset) -> Result<(Dataset, Dataset)> {
    if train.n() != test.n() {
        return Err(Error::PresplitMismatch(format!(
            "train has {} features, test has {}",
            train.n(),
            test.n()
        )));
    }
    if train.class_names() != test.class_names() {
        return Err(Error::PresplitMismatch("label encodings differ".into()));
    }
    Ok((train, test))
}

/// Loaded data: either a single file to split, or a presplit pair.
#[derive(Debug, Clone)]
pub enum Source {
    Single(Dataset),
    Pair(Dataset, Dataset),
}

impl Source {
    pub fn split(self, policy: SplitPolicy) -> Result<(Dataset, Dataset)> {
        match (self, policy) {
            (Source::Single(d), SplitPolicy::Ratio { ratio, seed }) => split_ratio(&d, ratio, seed),
            (Source::Pair(tr, te), SplitPolicy::Presplit) => presplit(tr, te),
            (Source::Single(_), SplitPolicy::Presplit) => {
                Err(Error::Config("presplit policy requires a train and a test file".into()))
            }
            (Source::Pair(..), SplitPolicy::Ratio { .. }) => {
                Err(Error::Config("ratio policy takes a single file".into()))
            }
        }
    }
}

struct RawTable {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
}

fn read_table(path: &Path, label_column: &str) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|source| Error::Open { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers()?.clone();
    if header.is_empty() {
        return Err(Error::EmptyFile { path: path.to_path_buf() });
    }
    let label_idx = header
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based data row numbers, header excluded
        let row_no = r + 1;
        let mut row = Vec::with_capacity(feature_names.len());
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if col == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row: row_no,
                col,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: row_no, col });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile { path: path.to_path_buf() });
    }
    Ok(RawTable { feature_names, rows, labels })
}

/// Dense first-appearance label encoding, shared across files of a pair.
#[derive(Debug, Default, Clone)]
pub struct LabelEncoder {
    index: HashMap<String, usize>,
    names: Vec<String>,
}

impl LabelEncoder {
    pub fn encode(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.names.len();
        self.index.insert(label.to_string(), id);
        self.names.push(label.to_string());
        id
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn build(table: RawTable, y: Vec<usize>, enc: &LabelEncoder, name: String) -> Result<Dataset> {
    let x = DMatrix::from_fn(table.rows.len(), table.feature_names.len(), |i, j| table.rows[i][j]);
    Dataset::with_class_names(
        name,
        x,
        y,
        enc.names().len(),
        table.feature_names,
        enc.names().to_vec(),
    )
}

/// Loads a headed CSV; every non-label cell must be numeric.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_table(path, label_column)?;
    let mut enc = LabelEncoder::default();
    let y = table.labels.iter().map(|l| enc.encode(l)).collect();
    if enc.names().len() < 2 {
        return Err(Error::TooFewClasses(enc.names().len()));
    }
    build(table, y, &enc, dataset_name(path))
}

/// Loads a train/test pair with one label encoding (train labels first).
pub fn load_csv_pair(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    label_column: &str,
) -> Result<(Dataset, Dataset)> {
    let (train_path, test_path) = (train_path.as_ref(), test_path.as_ref());
    let train = read_table(train_path, label_column)?;
    let test = read_table(test_path, label_column)?;
    if train.feature_names != test.feature_names {
        return Err(Error::PresplitMismatch("feature columns differ".into()));
    }
    let mut enc = LabelEncoder::default();
    let y_train: Vec<usize> = train.labels.iter().map(|l| enc.encode(l)).collect();
    let y_test: Vec<usize> = test.labels.iter().map(|l| enc.encode(l)).collect();
    if enc.names().len() < 2 {
        return Err(Error::TooFewClasses(enc.names().len()));
    }
    let tr = build(train, y_train, &enc, dataset_name(train_path))?;
    let te = build(test, y_test, &enc, dataset_name(test_path))?;
    presplit(tr, te)
}
