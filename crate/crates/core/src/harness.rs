//! Scoring of a selection run on the held-back labels, summaries over many
//! splits, selection frequencies and class merging.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceStructure;
use crate::dataset::{Dataset, LabeledSplit};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::mixture::classify;
use crate::search::{run, SearchConfig, SelectionOutcome, TraceRecord};

/// Result of selecting, fitting and scoring one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub misclassification: f64,
    /// `confusion[true][predicted]` counts over the unlabeled rows.
    pub confusion: Vec<Vec<usize>>,
    pub selected_cols: Vec<usize>,
    pub selected_var_ids: Vec<f64>,
    pub structure: Option<CovarianceStructure>,
    pub hit_iteration_cap: bool,
    pub trace: Vec<TraceRecord>,
}

/// Runs the search on `split`, classifies the unlabeled rows with the
/// final model and scores them against the withheld labels.
pub fn evaluate_split(split: &LabeledSplit, config: &SearchConfig) -> Result<SplitRecord> {
    let outcome = run(split, config)?;
    Ok(score_outcome(split, &outcome))
}

/// Scores a finished search. With nothing selected every row is assigned
/// the most frequent labeled class.
pub fn score_outcome(split: &LabeledSplit, outcome: &SelectionOutcome) -> SplitRecord {
    let groups = split.n_classes();
    let predicted = match &outcome.model {
        Some(model) => classify(model, split.unlabeled()).labels,
        None => {
            let counts = split.labeled().class_counts();
            let majority = (0..groups).fold(0, |b, g| if counts[g] > counts[b] { g } else { b });
            vec![majority; split.unlabeled().n_rows()]
        }
    };
    let truth = split.ground_truth();
    let mut confusion = vec![vec![0usize; groups]; groups];
    for (&t, &p) in truth.iter().zip(&predicted) {
        confusion[t][p] += 1;
    }
    let errors = truth.iter().zip(&predicted).filter(|(t, p)| t != p).count();
    let misclassification = if truth.is_empty() { 0.0 } else { errors as f64 / truth.len() as f64 };
    let var_ids = split.labeled().var_ids();
    SplitRecord {
        seed: split.seed(),
        misclassification,
        confusion,
        selected_var_ids: outcome.state.chosen.iter().map(|&c| var_ids[c]).collect(),
        selected_cols: outcome.state.chosen.clone(),
        structure: outcome.model.as_ref().map(|m| m.structure()),
        hit_iteration_cap: outcome.hit_iteration_cap,
        trace: outcome.state.trace.clone(),
    }
}

/// Aggregate over the successful splits of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub successful: usize,
    pub failed: usize,
    pub mean_misclassification: f64,
    /// Sample standard deviation (n - 1 denominator); zero for one split.
    pub sd_misclassification: f64,
    /// Summed confusion counts.
    pub confusion: Vec<Vec<usize>>,
    /// Row-normalized confusion in percent.
    pub confusion_percent: Vec<Vec<f64>>,
    pub mean_selected: f64,
    pub min_selected: usize,
    pub max_selected: usize,
}

pub fn mean_sd(rates: &[f64]) -> (f64, f64) {
    if rates.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let sd = if rates.len() < 2 {
        0.0
    } else {
        sqrt(rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0))
    };
    (mean, sd)
}

/// Summarizes successful records; `failed` counts splits that produced no
/// record and is reported alongside the denominator.
pub fn summarize(records: &[SplitRecord], failed: usize, groups: usize) -> Summary {
    let rates: Vec<f64> = records.iter().map(|r| r.misclassification).collect();
    let (mean, sd) = mean_sd(&rates);
    let mut confusion = vec![vec![0usize; groups]; groups];
    for r in records {
        for (row, src) in confusion.iter_mut().zip(&r.confusion) {
            for (c, s) in row.iter_mut().zip(src) {
                *c += s;
            }
        }
    }
    let confusion_percent = confusion
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter().map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 }).collect()
        })
        .collect();
    let sizes: Vec<usize> = records.iter().map(|r| r.selected_cols.len()).collect();
    Summary {
        successful: records.len(),
        failed,
        mean_misclassification: mean,
        sd_misclassification: sd,
        confusion,
        confusion_percent,
        mean_selected: if sizes.is_empty() { f64::NAN } else { sizes.iter().sum::<usize>() as f64 / sizes.len() as f64 },
        min_selected: sizes.iter().copied().min().unwrap_or(0),
        max_selected: sizes.iter().copied().max().unwrap_or(0),
    }
}

/// How often each variable was selected across splits, for every variable
/// in identifier order.
pub fn frequency_histogram(records: &[SplitRecord], var_ids: &[f64]) -> Vec<(f64, usize)> {
    let mut counts = vec![0usize; var_ids.len()];
    for r in records {
        for &c in &r.selected_cols {
            counts[c] += 1;
        }
    }
    var_ids.iter().copied().zip(counts).collect()
}

/// Relabels classes through `mapping` (source name → merged name); classes
/// not mentioned keep their name. Merged classes are ordered by the first
/// original class that maps to them.
pub fn merge_classes(d: &Dataset, mapping: &[(String, String)]) -> Result<Dataset> {
    let labels = d.labels().ok_or_else(|| Error::InvalidData("cannot merge classes of unlabeled data".into()))?;
    for (from, _) in mapping {
        if !d.class_names().iter().any(|c| c == from) {
            return Err(Error::InvalidConfig(format!("unknown class '{from}' in merge mapping")));
        }
    }
    let mut names: Vec<String> = Vec::new();
    let mut remap = Vec::with_capacity(d.n_classes());
    for name in d.class_names() {
        let target = mapping.iter().find(|(f, _)| f == name).map_or(name, |(_, t)| t);
        let idx = match names.iter().position(|n| n == target) {
            Some(i) => i,
            None => {
                names.push(target.clone());
                names.len() - 1
            }
        };
        remap.push(idx);
    }
    if names.is_empty() {
        return Err(Error::InvalidConfig("class merge leaves no classes".into()));
    }
    let new_labels = labels.iter().map(|&l| remap[l]).collect();
    d.clone().with_labels(new_labels, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn record(rate: f64, cols: Vec<usize>) -> SplitRecord {
        SplitRecord {
            seed: 0,
            misclassification: rate,
            confusion: vec![vec![1, 0], vec![0, 1]],
            selected_var_ids: cols.iter().map(|&c| c as f64).collect(),
            selected_cols: cols,
            structure: None,
            hit_iteration_cap: false,
            trace: Vec::new(),
        }
    }

    #[test]
    fn histogram_single_run() {
        let ids = [600.0, 626.0, 700.0, 814.0];
        let h = frequency_histogram(&[record(0.0, vec![1, 3])], &ids);
        assert_eq!(h, vec![(600.0, 0), (626.0, 1), (700.0, 0), (814.0, 1)]);
    }

    #[test]
    fn summary_statistics() {
        let recs = [record(0.1, vec![0]), record(0.2, vec![0, 1]), record(0.3, vec![1])];
        let s = summarize(&recs, 1, 2);
        assert!((s.mean_misclassification - 0.2).abs() < 1e-15);
        assert!((s.sd_misclassification - 0.1).abs() < 1e-15);
        assert_eq!(s.failed, 1);
        assert_eq!(s.confusion, vec![vec![3, 0], vec![0, 3]]);
        assert_eq!(s.confusion_percent[0], vec![100.0, 0.0]);
        assert_eq!((s.min_selected, s.max_selected), (1, 2));
    }

    #[test]
    fn merge_poultry() {
        let names = ["beef", "chicken", "lamb", "pork", "turkey"];
        let sizes = [32, 55, 34, 55, 55];
        let labels: Vec<&str> = names.iter().zip(sizes).flat_map(|(n, s)| core::iter::repeat(*n).take(s)).collect();
        let d = Dataset::with_string_labels(vec![0.0; labels.len()], vec![1.0], &labels).unwrap();
        let map = vec![("chicken".to_string(), "poultry".to_string()), ("turkey".to_string(), "poultry".to_string())];
        let m = merge_classes(&d, &map).unwrap();
        assert_eq!(m.n_classes(), 4);
        assert_eq!(m.class_names(), &["beef", "poultry", "lamb", "pork"]);
        assert_eq!(m.class_counts()[1], 110);
        assert_eq!(merge_classes(&d, &[]).unwrap(), d);
        assert!(merge_classes(&d, &[("goat".to_string(), "x".to_string())]).is_err());
    }
}
