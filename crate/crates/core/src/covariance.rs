//! Constrained Gaussian covariance structures of the eigendecomposition
//! family `Σ_g = λ_g D_g A_g D_g^T` (volume, shape, orientation), with
//! weighted maximum-likelihood estimators for each structure.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Cholesky, Matrix};
use crate::math::{exp, fabs, ln, LN_2PI};

/// Relative tolerance and iteration cap for the alternating estimators.
const INNER_TOL: f64 = 1e-8;
const INNER_MAX_ITER: usize = 200;
/// Eigenvalue floor relative to the mean diagonal of each covariance.
const EIGEN_FLOOR: f64 = 1e-10;

/// Covariance model identifier. Letters read volume/shape/orientation:
/// `E`qual across groups, `V`ariable, or `I`dentity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CovarianceStructure {
    /// One shared variance (univariate only).
    E,
    /// Group-specific variances (univariate only).
    V,
    EII,
    VII,
    EEI,
    VEI,
    EVI,
    VVI,
    EEE,
    EEV,
    VEV,
    VVV,
}

impl CovarianceStructure {
    pub const UNIVARIATE: [CovarianceStructure; 2] = [Self::E, Self::V];

    pub const MULTIVARIATE: [CovarianceStructure; 10] =
        [Self::EII, Self::VII, Self::EEI, Self::VEI, Self::EVI, Self::VVI, Self::EEE, Self::EEV, Self::VEV, Self::VVV];

    /// Structures applicable to data of dimension `p`.
    pub fn for_dim(p: usize) -> &'static [CovarianceStructure] {
        match p {
            0 => &[],
            1 => &Self::UNIVARIATE,
            _ => &Self::MULTIVARIATE,
        }
    }

    pub fn is_valid_for(self, p: usize) -> bool {
        Self::for_dim(p).contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::E => "E",
            Self::V => "V",
            Self::EII => "EII",
            Self::VII => "VII",
            Self::EEI => "EEI",
            Self::VEI => "VEI",
            Self::EVI => "EVI",
            Self::VVI => "VVI",
            Self::EEE => "EEE",
            Self::EEV => "EEV",
            Self::VEV => "VEV",
            Self::VVV => "VVV",
        }
    }

    /// Number of free covariance parameters for `groups` groups in
    /// dimension `p`. Volume contributes 1 or G, shape `p - 1` once or per
    /// group, orientation `p(p-1)/2` once or per group.
    pub fn param_count(self, p: usize, groups: usize) -> usize {
        let shape = p.saturating_sub(1);
        let orient = p * p.saturating_sub(1) / 2;
        let g = groups;
        match self {
            Self::E => 1,
            Self::V => g,
            Self::EII => 1,
            Self::VII => g,
            Self::EEI => 1 + shape,
            Self::VEI => g + shape,
            Self::EVI => 1 + g * shape,
            Self::VVI => g + g * shape,
            Self::EEE => 1 + shape + orient,
            Self::EEV => 1 + shape + g * orient,
            Self::VEV => g + shape + g * orient,
            Self::VVV => g * (1 + shape + orient),
        }
    }
}

impl fmt::Display for CovarianceStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CovarianceStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::UNIVARIATE
            .iter()
            .chain(&Self::MULTIVARIATE)
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown covariance structure '{s}'")))
    }
}

/// Weighted sufficient statistics per group: effective size, mean and
/// scatter `Σ_i w_ig (x_i - μ_g)(x_i - μ_g)^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScatter {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub scatter: Vec<Matrix>,
}

impl GroupScatter {
    /// Statistics from an `n × p` data matrix and `n × G` weight matrix.
    pub fn from_weights(x: &Matrix, z: &Matrix) -> Self {
        let (n, p, groups) = (x.rows(), x.cols(), z.cols());
        let mut weights = vec![0.0; groups];
        let mut means = vec![vec![0.0; p]; groups];
        for i in 0..n {
            let row = x.row(i);
            for g in 0..groups {
                let w = z[(i, g)];
                if w == 0.0 {
                    continue;
                }
                weights[g] += w;
                for (m, v) in means[g].iter_mut().zip(row) {
                    *m += w * v;
                }
            }
        }
        for (m, &w) in means.iter_mut().zip(&weights) {
            for v in m.iter_mut() {
                *v /= w;
            }
        }
        let mut scatter = vec![Matrix::zeros(p, p); groups];
        let mut dev = vec![0.0; p];
        for i in 0..n {
            let row = x.row(i);
            for g in 0..groups {
                let w = z[(i, g)];
                if w == 0.0 {
                    continue;
                }
                for k in 0..p {
                    dev[k] = row[k] - means[g][k];
                }
                let s = &mut scatter[g];
                for a in 0..p {
                    let wa = w * dev[a];
                    for b in a..p {
                        s[(a, b)] += wa * dev[b];
                    }
                }
            }
        }
        for s in scatter.iter_mut() {
            for a in 0..p {
                for b in 0..a {
                    s[(a, b)] = s[(b, a)];
                }
            }
        }
        Self { weights, means, scatter }
    }

    /// Statistics from hard class labels in `0..groups`.
    pub fn from_labels(x: &Matrix, labels: &[usize], groups: usize) -> Self {
        let mut z = Matrix::zeros(x.rows(), groups);
        for (i, &l) in labels.iter().enumerate() {
            z[(i, l)] = 1.0;
        }
        Self::from_weights(x, &z)
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn groups(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn pooled(&self) -> Matrix {
        let p = self.dim();
        let mut w = Matrix::zeros(p, p);
        for s in &self.scatter {
            w.add_assign(s);
        }
        w
    }
}

/// Group covariance matrices satisfying one structural constraint, with
/// cached factorizations for density evaluation.
#[derive(Debug, Clone)]
pub struct CovarianceSet {
    structure: CovarianceStructure,
    sigmas: Vec<Matrix>,
    factors: Vec<Cholesky>,
    log_dets: Vec<f64>,
    /// Shape vectors, kept to warm start the alternating estimators.
    shapes: Vec<Vec<f64>>,
    regularized: bool,
}

impl PartialEq for CovarianceSet {
    fn eq(&self, other: &Self) -> bool {
        self.structure == other.structure && self.sigmas == other.sigmas && self.regularized == other.regularized
    }
}

impl CovarianceSet {
    pub fn structure(&self) -> CovarianceStructure {
        self.structure
    }

    pub fn sigmas(&self) -> &[Matrix] {
        &self.sigmas
    }

    pub fn sigma(&self, g: usize) -> &Matrix {
        &self.sigmas[g]
    }

    pub fn log_dets(&self) -> &[f64] {
        &self.log_dets
    }

    pub fn groups(&self) -> usize {
        self.sigmas.len()
    }

    pub fn dim(&self) -> usize {
        self.sigmas.first().map_or(0, Matrix::rows)
    }

    /// Whether an eigenvalue had to be raised to the floor.
    pub fn is_regularized(&self) -> bool {
        self.regularized
    }

    /// Builds a set from explicit matrices (e.g. an imported model),
    /// applying the same eigenvalue floor as estimation.
    pub fn from_matrices(structure: CovarianceStructure, sigmas: Vec<Matrix>) -> Result<Self> {
        let p = sigmas.first().map_or(0, Matrix::rows);
        if !structure.is_valid_for(p) {
            return Err(Error::StructureMismatch { structure: structure.name(), dim: p });
        }
        if sigmas.iter().any(|s| s.rows() != p || s.cols() != p) {
            return Err(Error::InvalidData("covariance matrices must share one square shape".into()));
        }
        Ok(finalize(structure, sigmas, Vec::new(), 0.0))
    }

    /// Multivariate normal log-density of `x` under group `g` with mean `mean`.
    pub fn log_density(&self, g: usize, x: &[f64], mean: &[f64]) -> f64 {
        let dev: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
        -0.5 * (x.len() as f64 * LN_2PI + self.log_dets[g] + self.factors[g].quad_form(&dev))
    }

    /// Gaussian log-likelihood part that depends on the covariances:
    /// `-½ Σ_g [n_g (p ln 2π + ln|Σ_g|) + tr(Σ_g^{-1} W_g)]`.
    pub fn scatter_loglik(&self, stats: &GroupScatter) -> f64 {
        let p = stats.dim() as f64;
        (0..self.groups())
            .map(|g| {
                -0.5 * (stats.weights[g] * (p * LN_2PI + self.log_dets[g])
                    + self.factors[g].trace_solve(&stats.scatter[g]))
            })
            .sum()
    }
}

/// Weighted MLE of the group covariances under `structure`.
pub fn estimate(stats: &GroupScatter, structure: CovarianceStructure) -> Result<CovarianceSet> {
    estimate_from(stats, structure, None)
}

/// As [`estimate`], starting the alternating estimators (VEI, VEV) from
/// `previous` when it has the same structure and shape. Each alternating
/// update maximizes over one block exactly, so the result never has lower
/// likelihood than the starting point.
pub fn estimate_from(
    stats: &GroupScatter,
    structure: CovarianceStructure,
    previous: Option<&CovarianceSet>,
) -> Result<CovarianceSet> {
    let p = stats.dim();
    let groups = stats.groups();
    if !structure.is_valid_for(p) {
        return Err(Error::StructureMismatch { structure: structure.name(), dim: p });
    }
    if groups == 0 || stats.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidData("every group needs positive weight".into()));
    }
    let previous = previous.filter(|c| c.structure == structure && c.dim() == p && c.groups() == groups);
    let n = stats.total_weight();
    let pf = p as f64;
    let nk = &stats.weights;
    let scale_floor = stats.pooled().trace() / (n * pf);

    use CovarianceStructure::*;
    let (sigmas, shapes) = match structure {
        E | EEE => {
            let s = stats.pooled().scale(1.0 / n);
            (vec![s; groups], Vec::new())
        }
        V | VVV => (stats.scatter.iter().zip(nk).map(|(w, &ng)| w.scale(1.0 / ng)).collect(), Vec::new()),
        EII => {
            let lambda = stats.pooled().trace() / (n * pf);
            (vec![Matrix::identity(p).scale(lambda); groups], Vec::new())
        }
        VII => (
            stats.scatter.iter().zip(nk).map(|(w, &ng)| Matrix::identity(p).scale(w.trace() / (ng * pf))).collect(),
            Vec::new(),
        ),
        EEI => {
            let d: Vec<f64> = stats.pooled().diag().iter().map(|v| v / n).collect();
            (vec![Matrix::diagonal(&d); groups], Vec::new())
        }
        VVI => (
            stats
                .scatter
                .iter()
                .zip(nk)
                .map(|(w, &ng)| Matrix::diagonal(&w.diag().iter().map(|v| v / ng).collect::<Vec<_>>()))
                .collect(),
            Vec::new(),
        ),
        EVI => {
            // closed form: B_g = diag(W_g)/|diag W_g|^{1/p}, λ = Σ_g |diag W_g|^{1/p} / n
            let mut lambda = 0.0;
            let mut shapes = Vec::with_capacity(groups);
            for w in &stats.scatter {
                let d = w.diag();
                let root = geometric_mean(&d);
                lambda += root;
                shapes.push(d.iter().map(|v| v / root).collect::<Vec<f64>>());
            }
            lambda /= n;
            let sigmas = shapes.iter().map(|b| Matrix::diagonal(&b.iter().map(|v| lambda * v).collect::<Vec<_>>())).collect();
            (sigmas, shapes)
        }
        VEI => vei(stats, previous),
        EEV => {
            let eig: Vec<(Vec<f64>, Matrix)> = stats.scatter.iter().map(symmetric_eigen).collect();
            let mut total = vec![0.0; p];
            for (vals, _) in &eig {
                for (t, v) in total.iter_mut().zip(vals) {
                    *t += v;
                }
            }
            let root = geometric_mean(&total);
            let shape: Vec<f64> = total.iter().map(|v| v / root).collect();
            let lambda = root / n;
            let scaled: Vec<f64> = shape.iter().map(|a| lambda * a).collect();
            let sigmas = eig.iter().map(|(_, vecs)| Matrix::from_eigen(&scaled, vecs)).collect();
            (sigmas, vec![shape])
        }
        VEV => vev(stats, previous),
    };
    Ok(finalize(structure, sigmas, shapes, scale_floor))
}

fn geometric_mean(v: &[f64]) -> f64 {
    if v.iter().any(|&x| !(x > 0.0)) {
        return 0.0;
    }
    exp(v.iter().map(|&x| ln(x)).sum::<f64>() / v.len() as f64)
}

fn converged(old: f64, new: f64) -> bool {
    fabs(new - old) <= INNER_TOL * fabs(new).max(1.0)
}

/// `Σ_g = λ_g B`, `B` diagonal with unit determinant.
fn vei(stats: &GroupScatter, previous: Option<&CovarianceSet>) -> (Vec<Matrix>, Vec<Vec<f64>>) {
    let p = stats.dim();
    let pf = p as f64;
    let nk = &stats.weights;
    let diags: Vec<Vec<f64>> = stats.scatter.iter().map(Matrix::diag).collect();
    let mut shape = match previous {
        Some(prev) => prev.shapes[0].clone(),
        None => {
            let pooled = stats.pooled().diag();
            let root = geometric_mean(&pooled);
            pooled.iter().map(|v| v / root).collect()
        }
    };
    let mut lambdas = vec![0.0; nk.len()];
    let mut objective = f64::INFINITY;
    for _ in 0..INNER_MAX_ITER {
        for (g, d) in diags.iter().enumerate() {
            let t: f64 = d.iter().zip(&shape).map(|(w, b)| w / b).sum();
            lambdas[g] = t / (pf * nk[g]);
        }
        let mut acc = vec![0.0; p];
        for (g, d) in diags.iter().enumerate() {
            for (a, w) in acc.iter_mut().zip(d) {
                *a += w / lambdas[g];
            }
        }
        let root = geometric_mean(&acc);
        if !(root > 0.0) {
            break;
        }
        shape = acc.iter().map(|v| v / root).collect();
        let next: f64 = diags
            .iter()
            .enumerate()
            .map(|(g, d)| {
                let t: f64 = d.iter().zip(&shape).map(|(w, b)| w / b).sum();
                nk[g] * pf * ln(lambdas[g]) + t / lambdas[g]
            })
            .sum();
        let done = converged(objective, next);
        objective = next;
        if done {
            break;
        }
    }
    let sigmas = lambdas
        .iter()
        .map(|&l| Matrix::diagonal(&shape.iter().map(|b| l * b).collect::<Vec<_>>()))
        .collect();
    (sigmas, vec![shape])
}

/// `Σ_g = λ_g D_g A D_g^T`, `A` diagonal (descending) with unit determinant.
fn vev(stats: &GroupScatter, previous: Option<&CovarianceSet>) -> (Vec<Matrix>, Vec<Vec<f64>>) {
    let p = stats.dim();
    let pf = p as f64;
    let nk = &stats.weights;
    // D_g given A is the eigenbasis of W_g with eigenvalues paired in
    // descending order, independent of λ_g.
    let eig: Vec<(Vec<f64>, Matrix)> = stats.scatter.iter().map(symmetric_eigen).collect();
    let mut shape = match previous {
        Some(prev) => prev.shapes[0].clone(),
        None => {
            let mut total = vec![0.0; p];
            for (vals, _) in &eig {
                for (t, v) in total.iter_mut().zip(vals) {
                    *t += v;
                }
            }
            let root = geometric_mean(&total);
            total.iter().map(|v| v / root).collect()
        }
    };
    let mut lambdas = vec![0.0; nk.len()];
    let mut objective = f64::INFINITY;
    for _ in 0..INNER_MAX_ITER {
        for (g, (vals, _)) in eig.iter().enumerate() {
            let t: f64 = vals.iter().zip(&shape).map(|(w, a)| w / a).sum();
            lambdas[g] = t / (pf * nk[g]);
        }
        let mut acc = vec![0.0; p];
        for (g, (vals, _)) in eig.iter().enumerate() {
            for (a, w) in acc.iter_mut().zip(vals) {
                *a += w / lambdas[g];
            }
        }
        let root = geometric_mean(&acc);
        if !(root > 0.0) {
            break;
        }
        shape = acc.iter().map(|v| v / root).collect();
        let next: f64 = eig
            .iter()
            .enumerate()
            .map(|(g, (vals, _))| {
                let t: f64 = vals.iter().zip(&shape).map(|(w, a)| w / a).sum();
                nk[g] * pf * ln(lambdas[g]) + t / lambdas[g]
            })
            .sum();
        let done = converged(objective, next);
        objective = next;
        if done {
            break;
        }
    }
    let sigmas = eig
        .iter()
        .zip(&lambdas)
        .map(|((_, vecs), &l)| Matrix::from_eigen(&shape.iter().map(|a| l * a).collect::<Vec<_>>(), vecs))
        .collect();
    (sigmas, vec![shape])
}

/// Applies the eigenvalue floor and caches Cholesky factors.
fn finalize(
    structure: CovarianceStructure,
    sigmas: Vec<Matrix>,
    shapes: Vec<Vec<f64>>,
    scale_floor: f64,
) -> CovarianceSet {
    let mut regularized = false;
    let mut out = Vec::with_capacity(sigmas.len());
    let mut factors = Vec::with_capacity(sigmas.len());
    let mut log_dets = Vec::with_capacity(sigmas.len());
    for mut s in sigmas {
        let p = s.rows();
        s.symmetrize();
        let mean_diag = s.trace() / p as f64;
        let reference = if mean_diag.is_finite() && mean_diag > 0.0 {
            mean_diag
        } else if scale_floor.is_finite() && scale_floor > 0.0 {
            scale_floor
        } else {
            1.0
        };
        let floor = EIGEN_FLOOR * reference;
        if s.as_slice().iter().any(|v| !v.is_finite()) {
            s = Matrix::identity(p).scale(floor);
            regularized = true;
        } else {
            let is_diag = (0..p).all(|i| (0..p).all(|j| i == j || s[(i, j)] == 0.0));
            if is_diag {
                let d = s.diag();
                if d.iter().any(|&v| v < floor) {
                    regularized = true;
                    s = Matrix::diagonal(&d.iter().map(|&v| v.max(floor)).collect::<Vec<_>>());
                }
            } else {
                let (vals, vecs) = symmetric_eigen(&s);
                if vals.iter().any(|&v| v < floor) {
                    regularized = true;
                    let clamped: Vec<f64> = vals.iter().map(|&v| v.max(floor)).collect();
                    s = Matrix::from_eigen(&clamped, &vecs);
                }
            }
        }
        let chol = match Cholesky::new(&s) {
            Some(c) => c,
            None => {
                regularized = true;
                let (vals, vecs) = symmetric_eigen(&s);
                let clamped: Vec<f64> = vals.iter().map(|&v| v.max(floor)).collect();
                s = Matrix::from_eigen(&clamped, &vecs);
                for i in 0..p {
                    s[(i, i)] += floor;
                }
                Cholesky::new(&s).unwrap_or_else(|| {
                    s = Matrix::identity(p).scale(reference);
                    Cholesky::new(&s).expect("scaled identity is positive definite")
                })
            }
        };
        log_dets.push(chol.log_det());
        factors.push(chol);
        out.push(s);
    }
    CovarianceSet { structure, sigmas: out, factors, log_dets, shapes, regularized }
}
