//! BIC comparison of the grouping and no-grouping models for one variable.
//!
//! Grouping: the variable and the chosen set are jointly class-conditional
//! Gaussian. No grouping: the chosen set is class-conditional Gaussian and
//! the variable is a linear regression on it. Half the BIC difference
//! approximates the log Bayes factor; the remaining variables enter both
//! models identically and drop out.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceStructure;
use crate::dataset::LabeledSplit;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};
use crate::math::{ln, LN_2PI};
use crate::mixture::{best_structure_fit, Fitting, MixtureModel};

/// Relative pivot tolerance for dropping collinear predictors.
const RANK_TOL: f64 = 1e-10;
/// Residual variance below this fraction of the target variance is flagged.
const NEAR_PERFECT: f64 = 1e-12;

/// Gaussian linear regression of one variable on a set of others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub alpha: f64,
    /// Slopes in predictor order; zero for dropped predictors.
    pub beta: Vec<f64>,
    /// Residual variance, RSS / rows.
    pub sigma2: f64,
    pub loglik: f64,
    /// Intercept, effective slopes and variance.
    pub d_reg: usize,
    pub bic_reg: f64,
    pub rows: usize,
    /// Predictor columns dropped as linearly dependent.
    pub dropped: Vec<usize>,
    /// Residual variance negligible relative to the target's; the
    /// likelihood is evaluated at the floor variance.
    pub near_perfect: bool,
}

fn regression_rows(split: &LabeledSplit, cols: &[usize], mode: Fitting) -> Matrix {
    let labeled = split.labeled().select_columns(cols);
    match mode {
        Fitting::Supervised => labeled,
        Fitting::SemiSupervised => {
            let unlabeled = split.unlabeled().select_columns(cols);
            let mut data = labeled.as_slice().to_vec();
            data.extend_from_slice(unlabeled.as_slice());
            Matrix::from_row_major(labeled.rows() + unlabeled.rows(), cols.len(), data)
        }
    }
}

/// Least-squares regression of column `target` on `predictors`, over the
/// labeled rows, plus the unlabeled rows when fitting semi-supervised.
/// An empty predictor set gives the marginal mean and variance.
pub fn fit_regression(split: &LabeledSplit, target: usize, predictors: &[usize], mode: Fitting) -> Result<RegressionFit> {
    if predictors.contains(&target) {
        return Err(Error::InvalidConfig(format!("column {target} cannot predict itself")));
    }
    let mut cols = Vec::with_capacity(predictors.len() + 1);
    cols.push(target);
    cols.extend_from_slice(predictors);
    if let Some(&c) = cols.iter().find(|&&c| c >= split.labeled().n_vars()) {
        return Err(Error::InvalidData(format!("column {c} out of range")));
    }
    let data = regression_rows(split, &cols, mode);
    let (n, q) = (data.rows(), predictors.len());
    // more predictors than rows is handled by dropping dependent columns
    if n < 2 {
        return Err(Error::InvalidData(format!("{n} rows are too few for a regression")));
    }
    let nf = n as f64;
    let means: Vec<f64> = (0..=q).map(|j| (0..n).map(|i| data[(i, j)]).sum::<f64>() / nf).collect();
    let y: Vec<f64> = (0..n).map(|i| data[(i, 0)] - means[0]).collect();
    let var_y = y.iter().map(|v| v * v).sum::<f64>() / nf;

    let (beta, rank, dropped, rss) = if q == 0 {
        (Vec::new(), 0, Vec::new(), var_y * nf)
    } else {
        let mut x = Matrix::zeros(n, q);
        for i in 0..n {
            for j in 0..q {
                x[(i, j)] = data[(i, j + 1)] - means[j + 1];
            }
        }
        let ls = least_squares(&x, &y, RANK_TOL);
        let dropped = ls.dropped.iter().map(|&j| predictors[j]).collect();
        (ls.coef, ls.rank, dropped, ls.rss)
    };
    let alpha = means[0] - beta.iter().zip(&means[1..]).map(|(b, m)| b * m).sum::<f64>();
    let sigma2 = rss / nf;
    let floor = NEAR_PERFECT * var_y;
    let near_perfect = sigma2 < floor || sigma2 == 0.0;
    let s2 = if near_perfect { floor.max(f64::MIN_POSITIVE) } else { sigma2 };
    let loglik = -0.5 * nf * (LN_2PI + ln(s2)) - 0.5 * rss / s2;
    let d_reg = rank + 2;
    Ok(RegressionFit {
        alpha,
        beta,
        sigma2,
        loglik,
        d_reg,
        bic_reg: 2.0 * loglik - d_reg as f64 * ln(nf),
        rows: n,
        dropped,
        near_perfect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    Add,
    Remove,
}

/// Outcome of one grouping/no-grouping comparison.
///
/// `evidence` is `bic_grouping - bic_nogrouping` for an addition and
/// `bic_nogrouping - bic_grouping` for a removal, so a positive value always
/// favours the proposed move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub proposal: Proposal,
    /// Dataset column of the variable proposed for addition or removal.
    pub column: usize,
    pub var_id: f64,
    pub bic_grouping: f64,
    pub structure_grouping: Option<CovarianceStructure>,
    pub bic_nogrouping: f64,
    /// Structure of the class model on the chosen part; `None` when empty.
    pub structure_nogrouping: Option<CovarianceStructure>,
    pub evidence: f64,
}

impl ComparisonResult {
    fn new(
        proposal: Proposal,
        column: usize,
        var_id: f64,
        grouping: (f64, Option<CovarianceStructure>),
        nogrouping: (f64, Option<CovarianceStructure>),
    ) -> Self {
        let diff = grouping.0 - nogrouping.0;
        let evidence = match proposal {
            Proposal::Add => diff,
            Proposal::Remove => -diff,
        };
        let evidence = if evidence.is_nan() { f64::NEG_INFINITY } else { evidence };
        Self {
            proposal,
            column,
            var_id,
            bic_grouping: grouping.0,
            structure_grouping: grouping.1,
            bic_nogrouping: nogrouping.0,
            structure_nogrouping: nogrouping.1,
            evidence,
        }
    }

    /// `bic_grouping - bic_nogrouping`, whatever the proposal.
    pub fn diff(&self) -> f64 {
        self.bic_grouping - self.bic_nogrouping
    }
}

fn grouping_bic(split: &LabeledSplit, cols: &[usize], mode: Fitting) -> Result<(f64, Option<CovarianceStructure>)> {
    match best_structure_fit(split, cols, mode) {
        Ok(m) => Ok((m.bic, Some(m.structure()))),
        Err(Error::AllStructuresSingular) => Ok((f64::NEG_INFINITY, None)),
        Err(e) => Err(e),
    }
}

/// BIC of the class labels alone: the multinomial part of a class model
/// with no variables. Unlabeled rows carry no information about it but
/// count towards `n` when fitting semi-supervised.
pub fn label_bic(split: &LabeledSplit, mode: Fitting) -> f64 {
    let counts = split.labeled().class_counts();
    let n_labeled: usize = counts.iter().sum();
    let n = match mode {
        Fitting::Supervised => n_labeled,
        Fitting::SemiSupervised => n_labeled + split.unlabeled().n_rows(),
    };
    let loglik: f64 =
        counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 * ln(c as f64 / n_labeled as f64)).sum();
    2.0 * loglik - (counts.len() - 1) as f64 * ln(n as f64)
}

/// Evidence for adding `proposed` to `chosen`.
///
/// `chosen_model` is the cached best fit on `chosen` (ignored and refitted
/// if it covers different columns); with `chosen` empty the no-grouping
/// side is the label model plus the intercept-only regression.
pub fn compare_add(
    split: &LabeledSplit,
    chosen: &[usize],
    proposed: usize,
    chosen_model: Option<&MixtureModel>,
    mode: Fitting,
) -> Result<ComparisonResult> {
    if chosen.contains(&proposed) {
        return Err(Error::InvalidConfig(format!("column {proposed} is already chosen")));
    }
    let mut cols = chosen.to_vec();
    cols.push(proposed);
    let grouping = grouping_bic(split, &cols, mode)?;
    let chosen_part = if chosen.is_empty() {
        (label_bic(split, mode), None)
    } else {
        match chosen_model.filter(|m| m.cols == chosen) {
            Some(m) => (m.bic, Some(m.structure())),
            None => grouping_bic(split, chosen, mode)?,
        }
    };
    let reg = fit_regression(split, proposed, chosen, mode)?;
    let var_id = split.labeled().var_ids()[proposed];
    Ok(ComparisonResult::new(Proposal::Add, proposed, var_id, grouping, (chosen_part.0 + reg.bic_reg, chosen_part.1)))
}

/// Evidence for removing `candidate` from `chosen`: the class model on the
/// full set against the best class model without it plus its regression on
/// the rest. Removing down to an empty set is refused.
pub fn compare_remove(
    split: &LabeledSplit,
    chosen: &[usize],
    candidate: usize,
    chosen_model: Option<&MixtureModel>,
    mode: Fitting,
) -> Result<ComparisonResult> {
    if !chosen.contains(&candidate) {
        return Err(Error::InvalidConfig(format!("column {candidate} is not chosen")));
    }
    if chosen.len() < 2 {
        return Err(Error::InvalidConfig("cannot remove the only chosen variable".into()));
    }
    let grouping = match chosen_model.filter(|m| m.cols == chosen) {
        Some(m) => (m.bic, Some(m.structure())),
        None => grouping_bic(split, chosen, mode)?,
    };
    let rest: Vec<usize> = chosen.iter().copied().filter(|&c| c != candidate).collect();
    let reduced = grouping_bic(split, &rest, mode)?;
    let reg = fit_regression(split, candidate, &rest, mode)?;
    let var_id = split.labeled().var_ids()[candidate];
    Ok(ComparisonResult::new(Proposal::Remove, candidate, var_id, grouping, (reduced.0 + reg.bic_reg, reduced.1)))
}
