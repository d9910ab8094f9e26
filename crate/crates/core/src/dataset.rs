//! Observation matrices, labeled/unlabeled partitions and column aggregation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// An `n × p` table of observations with ordered variable identifiers
/// (wavelengths, or column positions) and optional class labels.
///
/// Labels are dense zero-based indices into `class_names`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    values: Vec<f64>,
    var_ids: Vec<f64>,
    labels: Option<Vec<usize>>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major values.
    ///
    /// When `labels` is present every class in `class_names` must occur at
    /// least once. Unlabeled datasets may still carry class names so the
    /// number of groups is known.
    pub fn new(
        values: Vec<f64>,
        var_ids: Vec<f64>,
        labels: Option<Vec<usize>>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let p = var_ids.len();
        if p == 0 {
            return Err(Error::InvalidData("dataset has no variables".into()));
        }
        if values.len() % p != 0 {
            return Err(Error::InvalidData(format!(
                "{} values do not fill rows of width {p}",
                values.len()
            )));
        }
        let n = values.len() / p;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite value at row {}, column {}", i / p, i % p)));
        }
        if var_ids.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidData("variable identifiers must be strictly increasing".into()));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::InvalidData(format!("{} labels for {n} rows", labels.len())));
            }
            let mut counts = vec![0usize; class_names.len()];
            for &l in labels {
                if l >= class_names.len() {
                    return Err(Error::InvalidData(format!("label index {l} out of range")));
                }
                counts[l] += 1;
            }
            if let Some(g) = counts.iter().position(|&c| c == 0) {
                return Err(Error::InvalidData(format!("class '{}' has no rows", class_names[g])));
            }
        }
        Ok(Self { n, p, values, var_ids, labels, class_names })
    }

    /// Builds a labeled dataset from label strings; class indices follow the
    /// order in which label strings first appear.
    pub fn with_string_labels<S: AsRef<str>>(values: Vec<f64>, var_ids: Vec<f64>, labels: &[S]) -> Result<Self> {
        let mut class_names: Vec<String> = Vec::new();
        let mut idx = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let g = match class_names.iter().position(|c| c == l) {
                Some(g) => g,
                None => {
                    class_names.push(l.into());
                    class_names.len() - 1
                }
            };
            idx.push(g);
        }
        Self::new(values, var_ids, Some(idx), class_names)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        self.p
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn var_ids(&self) -> &[f64] {
        &self.var_ids
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }

    /// Per-class row counts; empty when unlabeled.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in self.labels().unwrap_or(&[]) {
            counts[l] += 1;
        }
        counts
    }

    /// The `n × cols.len()` matrix of the selected columns, in `cols` order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        Matrix::from_row_major(self.n, cols.len(), data)
    }

    /// Subset of rows, in the given order. Labels are carried over when
    /// `keep_labels` is set, otherwise dropped.
    fn take_rows(&self, rows: &[usize], keep_labels: bool) -> Dataset {
        let mut values = Vec::with_capacity(rows.len() * self.p);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        let labels = match (&self.labels, keep_labels) {
            (Some(l), true) => Some(rows.iter().map(|&r| l[r]).collect()),
            _ => None,
        };
        Dataset {
            n: rows.len(),
            p: self.p,
            values,
            var_ids: self.var_ids.clone(),
            labels,
            class_names: self.class_names.clone(),
        }
    }

    /// Same data with the labels removed.
    pub fn without_labels(&self) -> Dataset {
        Dataset { labels: None, ..self.clone() }
    }

    pub(crate) fn with_labels(mut self, labels: Vec<usize>, class_names: Vec<String>) -> Result<Dataset> {
        self.labels = None;
        Dataset::new(self.values, self.var_ids, Some(labels), class_names)
    }
}

/// A labeled/unlabeled partition of a labeled dataset.
///
/// The true classes of the unlabeled rows are held back and only reachable
/// through [`LabeledSplit::ground_truth`], which fitting code never calls.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    labeled: Dataset,
    unlabeled: Dataset,
    truth: Vec<usize>,
    labeled_rows: Vec<usize>,
    unlabeled_rows: Vec<usize>,
    seed: u64,
}

impl LabeledSplit {
    /// Rebuilds a split from explicit parent row indices.
    pub fn from_rows(parent: &Dataset, labeled_rows: Vec<usize>, unlabeled_rows: Vec<usize>, seed: u64) -> Result<Self> {
        let all = parent.labels().ok_or_else(|| Error::InvalidData("split requires a labeled dataset".into()))?;
        let mut seen = vec![false; parent.n_rows()];
        for &r in labeled_rows.iter().chain(&unlabeled_rows) {
            if r >= parent.n_rows() || seen[r] {
                return Err(Error::InvalidData(format!("row {r} out of range or repeated in split")));
            }
            seen[r] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidData("split does not cover every row".into()));
        }
        let labeled = parent.take_rows(&labeled_rows, true);
        if let Some(g) = labeled.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::ClassTooSmall { class: parent.class_names[g].clone(), size: 0 });
        }
        let unlabeled = parent.take_rows(&unlabeled_rows, false);
        let truth = unlabeled_rows.iter().map(|&r| all[r]).collect();
        Ok(Self { labeled, unlabeled, truth, labeled_rows, unlabeled_rows, seed })
    }

    /// The labeled rows (with labels).
    pub fn labeled(&self) -> &Dataset {
        &self.labeled
    }

    /// The unlabeled rows (labels withheld).
    pub fn unlabeled(&self) -> &Dataset {
        &self.unlabeled
    }

    /// True classes of the unlabeled rows, for scoring only.
    pub fn ground_truth(&self) -> &[usize] {
        &self.truth
    }

    pub fn labeled_rows(&self) -> &[usize] {
        &self.labeled_rows
    }

    pub fn unlabeled_rows(&self) -> &[usize] {
        &self.unlabeled_rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_classes(&self) -> usize {
        self.labeled.n_classes()
    }
}

/// Per-class labeled counts: `round(train_frac · n)` rows in total,
/// apportioned by largest remainder with every class given at least one.
fn labeled_counts(class_sizes: &[usize], class_names: &[String], train_frac: f64) -> Result<Vec<usize>> {
    let n: usize = class_sizes.iter().sum();
    let mut counts = Vec::with_capacity(class_sizes.len());
    let mut remainders = Vec::with_capacity(class_sizes.len());
    for (g, &size) in class_sizes.iter().enumerate() {
        let quota = train_frac * size as f64;
        if quota < 1.0 {
            return Err(Error::ClassTooSmall { class: class_names[g].clone(), size });
        }
        let base = libm::floor(quota) as usize;
        counts.push(base.min(size));
        remainders.push((quota - base as f64, g));
    }
    let target = (libm::round(train_frac * n as f64) as usize).max(counts.iter().sum());
    let mut extra = target - counts.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, g) in remainders.iter().cycle().take(remainders.len() * 2) {
        if extra == 0 {
            break;
        }
        if counts[g] < class_sizes[g] {
            counts[g] += 1;
            extra -= 1;
        }
    }
    Ok(counts)
}

/// Random class-stratified partition into labeled and unlabeled rows.
/// Deterministic for a given seed.
pub fn stratified_split(d: &Dataset, train_frac: f64, seed: u64) -> Result<LabeledSplit> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidConfig(format!("train fraction {train_frac} not in (0, 1)")));
    }
    let labels = d.labels().ok_or_else(|| Error::InvalidData("split requires a labeled dataset".into()))?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); d.n_classes()];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let counts = labeled_counts(&sizes, d.class_names(), train_frac)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled_rows = Vec::new();
    let mut unlabeled_rows = Vec::new();
    for (rows, &k) in members.iter_mut().zip(&counts) {
        rows.shuffle(&mut rng);
        labeled_rows.extend_from_slice(&rows[..k]);
        unlabeled_rows.extend_from_slice(&rows[k..]);
    }
    labeled_rows.sort_unstable();
    unlabeled_rows.sort_unstable();
    LabeledSplit::from_rows(d, labeled_rows, unlabeled_rows, seed)
}

/// Replaces consecutive blocks of `level` columns by their row-wise mean.
/// A trailing partial block is averaged over its actual width; the new
/// identifier of each block is the mean of its members' identifiers.
pub fn aggregate(d: &Dataset, level: usize) -> Result<Dataset> {
    if level == 0 {
        return Err(Error::InvalidConfig("aggregation level must be at least 1".into()));
    }
    if level > d.n_vars() {
        return Err(Error::InvalidConfig(format!(
            "aggregation level {level} exceeds the {} available variables",
            d.n_vars()
        )));
    }
    if level == 1 {
        return Ok(d.clone());
    }
    let blocks: Vec<(usize, usize)> =
        (0..d.n_vars()).step_by(level).map(|start| (start, (start + level).min(d.n_vars()))).collect();
    let var_ids = blocks.iter().map(|&(a, b)| crate::math::mean(&d.var_ids[a..b])).collect();
    let mut values = Vec::with_capacity(d.n_rows() * blocks.len());
    for i in 0..d.n_rows() {
        let row = d.row(i);
        values.extend(blocks.iter().map(|&(a, b)| crate::math::mean(&row[a..b])));
    }
    Ok(Dataset { n: d.n, p: blocks.len(), values, var_ids, labels: d.labels.clone(), class_names: d.class_names.clone() })
}
