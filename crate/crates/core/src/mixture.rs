//! Class-conditional Gaussian models fitted on labeled rows, optionally
//! updated by EM with unlabeled rows, and posterior classification.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::covariance::{self, CovarianceSet, CovarianceStructure, GroupScatter};
use crate::dataset::{Dataset, LabeledSplit};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{exp, fabs, ln, log_sum_exp};

/// EM stopping rule: relative change in observed-data log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 500 }
    }
}

/// Whether the unlabeled rows take part in fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fitting {
    Supervised,
    SemiSupervised,
}

impl Fitting {
    pub fn from_updating(updating: bool) -> Self {
        if updating {
            Fitting::SemiSupervised
        } else {
            Fitting::Supervised
        }
    }
}

/// Fitted Gaussian class model on a subset of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    /// Dataset column indices the model was fitted on, in order.
    pub cols: Vec<usize>,
    pub tau: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covs: CovarianceSet,
    pub loglik: f64,
    pub n_fit: usize,
    /// Free parameters: `G - 1` proportions, `G p` means, covariance terms.
    pub d: usize,
    pub bic: f64,
    /// A covariance eigenvalue hit the floor.
    pub singular: bool,
    pub converged: bool,
    pub iterations: usize,
    /// Observed-data log-likelihood after each E-step (EM fits only).
    pub loglik_history: Vec<f64>,
}

impl MixtureModel {
    pub fn structure(&self) -> CovarianceStructure {
        self.covs.structure()
    }

    pub fn groups(&self) -> usize {
        self.tau.len()
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    /// Singular or non-converged.
    pub fn is_flagged(&self) -> bool {
        self.singular || !self.converged
    }

    /// `ln τ_g + ln f(x | μ_g, Σ_g)` for every group.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        (0..self.groups()).map(|g| ln(self.tau[g]) + self.covs.log_density(g, x, &self.means[g])).collect()
    }

    /// Plain-data view of the parameters for export.
    pub fn to_params(&self, var_ids: &[f64]) -> ModelParams {
        ModelParams {
            structure: self.structure(),
            var_ids: self.cols.iter().map(|&c| var_ids[c]).collect(),
            cols: self.cols.clone(),
            tau: self.tau.clone(),
            means: self.means.clone(),
            covariances: self
                .covs
                .sigmas()
                .iter()
                .map(|s| (0..s.rows()).map(|i| s.row(i).to_vec()).collect())
                .collect(),
            loglik: self.loglik,
            n_fit: self.n_fit,
            d: self.d,
            bic: self.bic,
            singular: self.singular,
            converged: self.converged,
        }
    }

    /// Rebuilds a model from exported parameters.
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        let groups = params.tau.len();
        let p = params.cols.len();
        if params.means.len() != groups || params.covariances.len() != groups {
            return Err(Error::InvalidData("parameter arrays disagree on the number of groups".into()));
        }
        if params.means.iter().any(|m| m.len() != p) {
            return Err(Error::InvalidData("mean vectors do not match the column count".into()));
        }
        let mut sigmas = Vec::with_capacity(groups);
        for rows in &params.covariances {
            if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                return Err(Error::InvalidData(format!("covariance matrices must be {p} x {p}")));
            }
            sigmas.push(Matrix::from_row_major(p, p, rows.concat()));
        }
        let covs = CovarianceSet::from_matrices(params.structure, sigmas)?;
        Ok(Self {
            cols: params.cols.clone(),
            tau: params.tau.clone(),
            means: params.means.clone(),
            covs,
            loglik: params.loglik,
            n_fit: params.n_fit,
            d: params.d,
            bic: params.bic,
            singular: params.singular,
            converged: params.converged,
            iterations: 0,
            loglik_history: Vec::new(),
        })
    }
}

/// Serializable model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub structure: CovarianceStructure,
    pub var_ids: Vec<f64>,
    pub cols: Vec<usize>,
    pub tau: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub loglik: f64,
    pub n_fit: usize,
    pub d: usize,
    pub bic: f64,
    pub singular: bool,
    pub converged: bool,
}

/// Posterior class probabilities `ẑ` for a set of rows, with hard labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    /// `rows × G` posterior matrix.
    pub z_hat: Matrix,
    /// Argmax class per row; ties go to the lower class index.
    pub labels: Vec<usize>,
    /// Rows whose maximum posterior was shared by several classes.
    pub ties: Vec<usize>,
}

impl Responsibilities {
    fn from_log_joint(rows: Vec<Vec<f64>>, groups: usize) -> (Self, f64) {
        let mut z_hat = Matrix::zeros(rows.len(), groups);
        let mut labels = Vec::with_capacity(rows.len());
        let mut ties = Vec::new();
        let mut total = 0.0;
        for (i, lj) in rows.iter().enumerate() {
            let lse = log_sum_exp(lj);
            total += lse;
            let mut best = 0;
            for g in 0..groups {
                z_hat[(i, g)] = exp(lj[g] - lse);
                if lj[g] > lj[best] {
                    best = g;
                }
            }
            if (0..groups).filter(|&g| lj[g] == lj[best]).count() > 1 {
                ties.push(i);
            }
            labels.push(best);
        }
        (Self { z_hat, labels, ties }, total)
    }
}

fn complete_loglik(model_tau: &[f64], covs: &CovarianceSet, means: &[Vec<f64>], x: &Matrix, labels: &[usize]) -> f64 {
    (0..x.rows())
        .map(|i| {
            let g = labels[i];
            ln(model_tau[g]) + covs.log_density(g, x.row(i), &means[g])
        })
        .sum()
}

fn param_total(structure: CovarianceStructure, p: usize, groups: usize) -> usize {
    groups - 1 + groups * p + structure.param_count(p, groups)
}

fn bic(loglik: f64, d: usize, n: usize) -> f64 {
    2.0 * loglik - d as f64 * ln(n as f64)
}

fn check_cols(d: &Dataset, cols: &[usize]) -> Result<()> {
    if cols.is_empty() {
        return Err(Error::InvalidData("at least one column is required".into()));
    }
    if let Some(&c) = cols.iter().find(|&&c| c >= d.n_vars()) {
        return Err(Error::InvalidData(format!("column {c} out of range")));
    }
    Ok(())
}

fn supervised_from_matrix(
    x: &Matrix,
    labels: &[usize],
    groups: usize,
    cols: &[usize],
    structure: CovarianceStructure,
) -> Result<MixtureModel> {
    if groups == 0 {
        return Err(Error::InvalidData("at least one class is required".into()));
    }
    let stats = GroupScatter::from_labels(x, labels, groups);
    if let Some(g) = stats.weights.iter().position(|&w| w == 0.0) {
        return Err(Error::InvalidData(format!("class {g} has no labeled rows")));
    }
    let covs = covariance::estimate(&stats, structure)?;
    let n = x.rows();
    let tau: Vec<f64> = stats.weights.iter().map(|w| w / n as f64).collect();
    let loglik = complete_loglik(&tau, &covs, &stats.means, x, labels);
    let d = param_total(structure, x.cols(), groups);
    Ok(MixtureModel {
        cols: cols.to_vec(),
        tau,
        means: stats.means,
        singular: covs.is_regularized(),
        covs,
        loglik,
        n_fit: n,
        d,
        bic: bic(loglik, d, n),
        converged: true,
        iterations: 0,
        loglik_history: Vec::new(),
    })
}

/// Maximum-likelihood fit on labeled rows only: class frequencies, class
/// means and constrained covariances from hard-labeled scatter.
pub fn fit_supervised(labeled: &Dataset, cols: &[usize], structure: CovarianceStructure) -> Result<MixtureModel> {
    check_cols(labeled, cols)?;
    let labels = labeled.labels().ok_or_else(|| Error::InvalidData("supervised fit needs labels".into()))?;
    let x = labeled.select_columns(cols);
    supervised_from_matrix(&x, labels, labeled.n_classes(), cols, structure)
}

/// EM fit over labeled rows (hard indicators) and unlabeled rows (soft
/// posteriors), started from the supervised estimate. With no unlabeled
/// rows the supervised fit is returned unchanged.
pub fn fit_semisupervised(
    split: &LabeledSplit,
    cols: &[usize],
    structure: CovarianceStructure,
) -> Result<(MixtureModel, Responsibilities)> {
    fit_semisupervised_with(split, cols, structure, EmOptions::default())
}

pub fn fit_semisupervised_with(
    split: &LabeledSplit,
    cols: &[usize],
    structure: CovarianceStructure,
    opts: EmOptions,
) -> Result<(MixtureModel, Responsibilities)> {
    let labeled = split.labeled();
    check_cols(labeled, cols)?;
    let labels = labeled.labels().ok_or_else(|| Error::InvalidData("labeled part has no labels".into()))?;
    let groups = labeled.n_classes();
    let x = labeled.select_columns(cols);
    let y = split.unlabeled().select_columns(cols);
    let init = supervised_from_matrix(&x, labels, groups, cols, structure)?;
    if y.rows() == 0 {
        let resp = Responsibilities { z_hat: Matrix::zeros(0, groups), labels: Vec::new(), ties: Vec::new() };
        return Ok((init, resp));
    }
    em(init, &x, labels, &y, opts)
}

fn em(
    init: MixtureModel,
    x: &Matrix,
    labels: &[usize],
    y: &Matrix,
    opts: EmOptions,
) -> Result<(MixtureModel, Responsibilities)> {
    let groups = init.groups();
    let (n_l, n_u) = (x.rows(), y.rows());
    let n_total = n_l + n_u;
    let p = x.cols();
    let structure = init.structure();

    let mut stacked = Vec::with_capacity(n_total * p);
    stacked.extend_from_slice(x.as_slice());
    stacked.extend_from_slice(y.as_slice());
    let all = Matrix::from_row_major(n_total, p, stacked);
    let mut z = Matrix::zeros(n_total, groups);
    for (i, &l) in labels.iter().enumerate() {
        z[(i, l)] = 1.0;
    }

    let mut model = init;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let resp = loop {
        // E-step at the current parameters
        let rows: Vec<Vec<f64>> = (0..n_u).map(|j| model.log_joint(y.row(j))).collect();
        let (resp, unlabeled_ll) = Responsibilities::from_log_joint(rows, groups);
        let ll = complete_loglik(&model.tau, &model.covs, &model.means, x, labels) + unlabeled_ll;
        let previous = history.last().copied();
        history.push(ll);
        model.loglik = ll;
        if let Some(prev) = previous {
            if fabs(ll - prev) <= opts.tol * fabs(ll) {
                converged = true;
                break resp;
            }
        }
        if iterations == opts.max_iter {
            break resp;
        }
        iterations += 1;

        // M-step on combined hard + soft weights
        for j in 0..n_u {
            for g in 0..groups {
                z[(n_l + j, g)] = resp.z_hat[(j, g)];
            }
        }
        let stats = GroupScatter::from_weights(&all, &z);
        let covs = covariance::estimate_from(&stats, structure, Some(&model.covs))?;
        model.tau = stats.weights.iter().map(|w| w / n_total as f64).collect();
        model.means = stats.means;
        model.covs = covs;
    };
    model.n_fit = n_total;
    model.bic = bic(model.loglik, model.d, n_total);
    model.singular = model.covs.is_regularized();
    model.converged = converged;
    model.iterations = iterations;
    model.loglik_history = history;
    Ok((model, resp))
}

/// Posterior class probabilities for every row of `data` under `model`,
/// evaluated with log-sum-exp.
pub fn classify(model: &MixtureModel, data: &Dataset) -> Responsibilities {
    let x = data.select_columns(&model.cols);
    let rows = (0..x.rows()).map(|i| model.log_joint(x.row(i))).collect();
    Responsibilities::from_log_joint(rows, model.groups()).0
}

/// Fits one structure with the requested fitting mode.
pub fn fit(split: &LabeledSplit, cols: &[usize], structure: CovarianceStructure, mode: Fitting) -> Result<MixtureModel> {
    match mode {
        Fitting::Supervised => fit_supervised(split.labeled(), cols, structure),
        Fitting::SemiSupervised => fit_semisupervised(split, cols, structure).map(|(m, _)| m),
    }
}

/// Orders candidate fits: higher BIC wins; on an exact tie an unflagged
/// model beats a flagged one, then fewer parameters win.
fn better(a: &MixtureModel, b: &MixtureModel) -> bool {
    if a.bic != b.bic {
        return a.bic > b.bic;
    }
    if a.is_flagged() != b.is_flagged() {
        return !a.is_flagged();
    }
    a.d < b.d
}

/// Fits every structure applicable to `cols.len()` dimensions and returns
/// the highest-BIC non-singular fit.
pub fn best_structure_fit(split: &LabeledSplit, cols: &[usize], mode: Fitting) -> Result<MixtureModel> {
    let mut best: Option<MixtureModel> = None;
    for &s in CovarianceStructure::for_dim(cols.len()) {
        let m = fit(split, cols, s, mode)?;
        if m.singular || !m.bic.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |b| better(&m, b)) {
            best = Some(m);
        }
    }
    best.ok_or(Error::AllStructuresSingular)
}
