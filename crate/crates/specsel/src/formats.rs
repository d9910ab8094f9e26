//! JSON documents: split manifests, exported models and selection traces.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use specsel_core::mixture::ModelParams;
use specsel_core::{CovarianceStructure, Dataset, Decision, LabeledSplit, MixtureModel, Proposal, TraceRecord};

use crate::error::{CliError, Result};

/// Which rows of a dataset were labeled in one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_frac: f64,
    pub n_rows: usize,
    pub labeled_rows: Vec<usize>,
    pub unlabeled_rows: Vec<usize>,
}

impl SplitManifest {
    pub fn from_split(split: &LabeledSplit, train_frac: f64) -> Self {
        Self {
            seed: split.seed(),
            train_frac,
            n_rows: split.labeled_rows().len() + split.unlabeled_rows().len(),
            labeled_rows: split.labeled_rows().to_vec(),
            unlabeled_rows: split.unlabeled_rows().to_vec(),
        }
    }

    /// Rebuilds the split on `d`, which must have the row count recorded.
    pub fn apply(&self, d: &Dataset) -> Result<LabeledSplit> {
        if d.n_rows() != self.n_rows {
            return Err(CliError::Data(format!("manifest covers {} rows, data has {}", self.n_rows, d.n_rows())));
        }
        Ok(LabeledSplit::from_rows(d, self.labeled_rows.clone(), self.unlabeled_rows.clone(), self.seed)?)
    }
}

/// One line of `trace.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub iteration: usize,
    pub phase: Proposal,
    pub var_id: Option<f64>,
    pub bic_diff: Option<f64>,
    pub structure: Option<CovarianceStructure>,
    pub decision: Decision,
}

impl From<&TraceRecord> for TraceLine {
    fn from(r: &TraceRecord) -> Self {
        Self {
            iteration: r.iteration,
            phase: r.phase,
            var_id: r.var_id,
            bic_diff: r.bic_diff.filter(|v| v.is_finite()),
            structure: r.structure,
            decision: r.decision,
        }
    }
}

pub fn write_trace<W: Write>(mut w: W, trace: &[TraceRecord]) -> std::io::Result<()> {
    for r in trace {
        serde_json::to_writer(&mut w, &TraceLine::from(r))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(r: R) -> Result<Vec<TraceLine>> {
    r.lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, line)| {
            let line = line.map_err(|e| CliError::Data(format!("trace line {}: {e}", i + 1)))?;
            serde_json::from_str(&line).map_err(|e| CliError::Data(format!("trace line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// A fitted model with the class names its groups stand for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedModel {
    pub class_names: Vec<String>,
    #[serde(flatten)]
    pub params: ModelParams,
}

pub fn export_model(model: &MixtureModel, d: &Dataset, path: &Path) -> Result<()> {
    write_json(path, &ExportedModel { class_names: d.class_names().to_vec(), params: model.to_params(d.var_ids()) })
}

pub fn import_model(path: &Path) -> Result<(MixtureModel, Vec<String>)> {
    let exported: ExportedModel = read_json(path)?;
    Ok((MixtureModel::from_params(&exported.params)?, exported.class_names))
}
