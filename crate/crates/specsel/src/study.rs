//! Repeated random-split studies and their on-disk reports.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use specsel_core::{
    aggregate, evaluate_split, frequency_histogram, stratified_split, summarize, CovarianceStructure, Dataset,
    SearchConfig, SplitRecord, Summary,
};

use crate::error::{CliError, Result};
use crate::formats::{write_json, write_trace, SplitManifest};

/// Settings for a multi-split study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub train_frac: f64,
    pub splits: usize,
    pub master_seed: u64,
    pub search: SearchConfig,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { train_frac: 0.5, splits: 50, master_seed: 0, search: SearchConfig::default(), workers: None }
    }
}

/// Seed of the `i`-th split; any split can be rerun from the master seed
/// and its index alone.
pub fn split_seed(master: u64, i: usize) -> u64 {
    master ^ i as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitFailure {
    pub seed: u64,
    pub error: String,
}

/// Raw study results in split order.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub records: Vec<SplitRecord>,
    pub failures: Vec<SplitFailure>,
    pub manifests: Vec<SplitManifest>,
}

impl Study {
    pub fn summary(&self, groups: usize) -> Summary {
        summarize(&self.records, self.failures.len(), groups)
    }
}

fn validate(d: &Dataset, cfg: &StudyConfig) -> Result<()> {
    if cfg.splits == 0 {
        return Err(CliError::Config("at least one split is required".into()));
    }
    if cfg.workers == Some(0) {
        return Err(CliError::Config("worker count must be positive".into()));
    }
    cfg.search.validate()?;
    // class sizes and the fraction are checked once, not per split
    stratified_split(d, cfg.train_frac, cfg.master_seed)?;
    Ok(())
}

/// Runs `cfg.splits` independent splits. Splits are evaluated in parallel
/// and collected in seed order, so results do not depend on the worker
/// count.
pub fn run_study(d: &Dataset, cfg: &StudyConfig) -> Result<Study> {
    validate(d, cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start workers: {e}")))?;
    let seeds: Vec<u64> = (0..cfg.splits).map(|i| split_seed(cfg.master_seed, i)).collect();
    let outcomes: Vec<(SplitManifest, std::result::Result<SplitRecord, String>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let split = stratified_split(d, cfg.train_frac, seed).expect("split validated up front");
                let manifest = SplitManifest::from_split(&split, cfg.train_frac);
                let result = evaluate_split(&split, &cfg.search).map_err(|e| e.to_string());
                match &result {
                    Ok(r) => info!("split {seed}: error {:.4}, {} selected", r.misclassification, r.selected_cols.len()),
                    Err(e) => warn!("split {seed} failed: {e}"),
                }
                (manifest, result)
            })
            .collect()
    });
    let mut study = Study { records: Vec::new(), failures: Vec::new(), manifests: Vec::new() };
    for (manifest, result) in outcomes {
        match result {
            Ok(r) => study.records.push(r),
            Err(error) => study.failures.push(SplitFailure { seed: manifest.seed, error }),
        }
        study.manifests.push(manifest);
    }
    Ok(study)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub rows: usize,
    pub variables: usize,
    pub class_names: Vec<String>,
    pub class_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub train_frac: f64,
    pub splits: usize,
    pub master_seed: u64,
    pub strategy: String,
    /// A number, or `"inf"` when every move is refused.
    pub min_evidence: serde_json::Value,
    pub updating: bool,
    pub max_selected: Option<usize>,
    pub max_iterations: usize,
    pub ordering: specsel_core::CandidateOrder,
    pub aggregate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitEntry {
    pub seed: u64,
    pub misclassification: f64,
    pub confusion: Vec<Vec<usize>>,
    pub selected_var_ids: Vec<f64>,
    pub structure: Option<CovarianceStructure>,
    pub hit_iteration_cap: bool,
    pub trace_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramEntry {
    pub var_id: f64,
    pub count: usize,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub dataset: DatasetInfo,
    pub config: ReportConfig,
    pub summary: Summary,
    pub splits: Vec<SplitEntry>,
    pub failures: Vec<SplitFailure>,
    pub histogram: Vec<HistogramEntry>,
}

fn trace_path(seed: u64) -> String {
    format!("splits/{seed}/trace.jsonl")
}

pub fn build_report(d: &Dataset, cfg: &StudyConfig, aggregate_level: usize, study: &Study) -> RunReport {
    let min_evidence = if cfg.search.min_evidence.is_finite() {
        serde_json::json!(cfg.search.min_evidence)
    } else {
        serde_json::json!("inf")
    };
    RunReport {
        dataset: DatasetInfo {
            rows: d.n_rows(),
            variables: d.n_vars(),
            class_names: d.class_names().to_vec(),
            class_sizes: d.class_counts(),
        },
        config: ReportConfig {
            train_frac: cfg.train_frac,
            splits: cfg.splits,
            master_seed: cfg.master_seed,
            strategy: cfg.search.strategy.to_string(),
            min_evidence,
            updating: cfg.search.updating,
            max_selected: cfg.search.max_selected,
            max_iterations: cfg.search.max_iterations,
            ordering: cfg.search.ordering,
            aggregate: aggregate_level,
        },
        summary: study.summary(d.n_classes()),
        splits: study
            .records
            .iter()
            .map(|r| SplitEntry {
                seed: r.seed,
                misclassification: r.misclassification,
                confusion: r.confusion.clone(),
                selected_var_ids: r.selected_var_ids.clone(),
                structure: r.structure,
                hit_iteration_cap: r.hit_iteration_cap,
                trace_path: trace_path(r.seed),
            })
            .collect(),
        failures: study.failures.clone(),
        histogram: frequency_histogram(&study.records, d.var_ids())
            .into_iter()
            .map(|(var_id, count)| HistogramEntry { var_id, count })
            .collect(),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::write(path, e))
}

fn write_csv_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::write(path, e))
}

/// Writes `report.json`, `hist.csv`, `confusion.csv` and one directory per
/// split holding `trace.jsonl` and `manifest.json`.
pub fn write_study(out: &Path, d: &Dataset, study: &Study, report: &RunReport) -> Result<()> {
    create_dir(out)?;
    write_json(&out.join("report.json"), report)?;
    write_csv_rows(
        &out.join("hist.csv"),
        &["var_id", "count"],
        report.histogram.iter().map(|h| vec![h.var_id.to_string(), h.count.to_string()]),
    )?;
    let names = d.class_names();
    let mut rows = Vec::new();
    for (t, (counts, pct)) in report.summary.confusion.iter().zip(&report.summary.confusion_percent).enumerate() {
        for (p, (c, q)) in counts.iter().zip(pct).enumerate() {
            rows.push(vec![names[t].clone(), names[p].clone(), c.to_string(), q.to_string()]);
        }
    }
    write_csv_rows(&out.join("confusion.csv"), &["true_class", "predicted_class", "count", "percent"], rows)?;
    for manifest in &study.manifests {
        let dir = out.join("splits").join(manifest.seed.to_string());
        create_dir(&dir)?;
        write_json(&dir.join("manifest.json"), manifest)?;
    }
    for r in &study.records {
        let path = out.join(trace_path(r.seed));
        let file = fs::File::create(&path).map_err(|e| CliError::write(&path, e))?;
        write_trace(BufWriter::new(file), &r.trace).map_err(|e| CliError::write(&path, e))?;
    }
    Ok(())
}

/// One row of the aggregation sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: usize,
    pub variables: usize,
    pub successful: usize,
    pub failed: usize,
    pub mean_misclassification: f64,
    pub sd_misclassification: f64,
    pub mean_selected: f64,
}

/// Aggregates `d` at each level and runs the full study with the same
/// master seed, so every level sees the same splits.
pub fn aggregation_sweep(d: &Dataset, levels: &[usize], cfg: &StudyConfig) -> Result<Vec<(SweepRow, Dataset, Study)>> {
    if levels.is_empty() {
        return Err(CliError::Config("no aggregation levels given".into()));
    }
    levels
        .iter()
        .map(|&level| {
            let agg = aggregate(d, level)?;
            info!("aggregation level {level}: {} variables", agg.n_vars());
            let study = run_study(&agg, cfg)?;
            let s = study.summary(agg.n_classes());
            let row = SweepRow {
                level,
                variables: agg.n_vars(),
                successful: s.successful,
                failed: s.failed,
                mean_misclassification: s.mean_misclassification,
                sd_misclassification: s.sd_misclassification,
                mean_selected: s.mean_selected,
            };
            Ok((row, agg, study))
        })
        .collect()
}

pub fn write_sweep_table(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_csv_rows(
        path,
        &["level", "variables", "successful", "failed", "mean_misclassification", "sd_misclassification", "mean_selected"],
        rows.iter().map(|r| {
            vec![
                r.level.to_string(),
                r.variables.to_string(),
                r.successful.to_string(),
                r.failed.to_string(),
                r.mean_misclassification.to_string(),
                r.sd_misclassification.to_string(),
                r.mean_selected.to_string(),
            ]
        }),
    )
}
