//! Small dense linear algebra for the low-dimensional problems the fitting
//! code sees (a few dozen variables at most): Cholesky, symmetric Jacobi
//! eigendecomposition and column-pivoted Householder QR.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{fabs, sqrt};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics on a length mismatch.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Replaces the matrix by `(A + A^T) / 2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| fabs(a - b)).fold(0.0, f64::max)
    }

    /// `V diag(values) V^T` where the columns of `vectors` are eigenvectors.
    pub fn from_eigen(values: &[f64], vectors: &Matrix) -> Matrix {
        let n = values.len();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for (k, &v) in values.iter().enumerate() {
                    s += vectors[(i, k)] * v * vectors[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    /// Returns `None` if the matrix is not numerically positive definite.
    pub fn new(a: &Matrix) -> Option<Self> {
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = sqrt(d);
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(Self { lower: l })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diag().iter().map(|d| crate::math::ln(*d)).sum::<f64>()
    }

    /// `v^T A^{-1} v`, computed by forward substitution.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let n = v.len();
        let mut z = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            let mut s = v[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * z[k];
            }
            z[i] = s / self.lower[(i, i)];
            acc += z[i] * z[i];
        }
        acc
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    }

    /// `tr(A^{-1} B)` for a square `B`.
    pub fn trace_solve(&self, b: &Matrix) -> f64 {
        let n = b.rows();
        let mut total = 0.0;
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            total += self.solve(&col)[j];
        }
        total
    }
}

/// Eigenvalues (descending) and unit eigenvectors (as columns) of a
/// symmetric matrix, by cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);
    let scale: f64 = m.as_slice().iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (fabs(theta) + sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    (values, vectors)
}

/// Solution of a least-squares problem by column-pivoted Householder QR.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// Coefficients in the original column order; dropped columns are zero.
    pub coef: Vec<f64>,
    pub rank: usize,
    /// Columns judged linearly dependent on the others.
    pub dropped: Vec<usize>,
    pub rss: f64,
}

/// Minimizes `||X b - y||` where `x` is `rows × k`. Columns whose pivoted
/// diagonal falls below `rel_tol` times the largest are dropped.
pub fn least_squares(x: &Matrix, y: &[f64], rel_tol: f64) -> LeastSquares {
    let (n, k) = (x.rows(), x.cols());
    assert_eq!(y.len(), n);
    let mut a = x.clone();
    let mut rhs = y.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut norms: Vec<f64> = (0..k).map(|j| (0..n).map(|i| a[(i, j)] * a[(i, j)]).sum()).collect();
    let steps = n.min(k);
    let mut rank = 0;
    let mut r00 = 0.0;
    for step in 0..steps {
        let (best, &best_norm) = norms[step..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, v)| (i + step, v))
            .unwrap();
        if best != step {
            norms.swap(step, best);
            perm.swap(step, best);
            for i in 0..n {
                let t = a[(i, step)];
                a[(i, step)] = a[(i, best)];
                a[(i, best)] = t;
            }
        }
        let alpha = sqrt((step..n).map(|i| a[(i, step)] * a[(i, step)]).sum::<f64>());
        if step == 0 {
            r00 = alpha;
        }
        if best_norm <= 0.0 || alpha <= rel_tol * r00 || alpha == 0.0 {
            break;
        }
        let sign = if a[(step, step)] >= 0.0 { 1.0 } else { -1.0 };
        let mut house: Vec<f64> = (step..n).map(|i| a[(i, step)]).collect();
        house[0] += sign * alpha;
        let hnorm2: f64 = house.iter().map(|v| v * v).sum();
        for j in step..k {
            let dot: f64 = house.iter().enumerate().map(|(r, h)| h * a[(step + r, j)]).sum();
            let f = 2.0 * dot / hnorm2;
            for (r, h) in house.iter().enumerate() {
                a[(step + r, j)] -= f * h;
            }
        }
        let dot: f64 = house.iter().enumerate().map(|(r, h)| h * rhs[step + r]).sum();
        let f = 2.0 * dot / hnorm2;
        for (r, h) in house.iter().enumerate() {
            rhs[step + r] -= f * h;
        }
        for j in (step + 1)..k {
            norms[j] = ((step + 1)..n).map(|i| a[(i, j)] * a[(i, j)]).sum();
        }
        rank += 1;
    }
    let mut sol = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..rank {
            s -= a[(i, j)] * sol[j];
        }
        sol[i] = s / a[(i, i)];
    }
    let mut coef = vec![0.0; k];
    for (i, &v) in sol.iter().enumerate() {
        coef[perm[i]] = v;
    }
    let mut dropped: Vec<usize> = perm[rank..].to_vec();
    dropped.sort_unstable();
    let rss = (0..n)
        .map(|i| {
            let fit: f64 = (0..k).map(|j| x[(i, j)] * coef[j]).sum();
            (y[i] - fit) * (y[i] - fit)
        })
        .sum();
    LeastSquares { coef, rank, dropped, rss }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> Matrix {
        Matrix::from_row_major(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0])
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd3();
        let c = Cholesky::new(&a).unwrap();
        let llt = c.lower.matmul(&c.lower.transpose());
        assert!(llt.max_abs_diff(&a) < 1e-14);
        let x = c.solve(&[1.0, 2.0, 3.0]);
        let back: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[(i, j)] * x[j]).sum()).collect();
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn eigen_reconstructs_and_orders() {
        let a = spd3();
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        assert!(Matrix::from_eigen(&vals, &vecs).max_abs_diff(&a) < 1e-12);
        let vtv = vecs.transpose().matmul(&vecs);
        assert!(vtv.max_abs_diff(&Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn least_squares_drops_duplicate_column() {
        let x = Matrix::from_row_major(4, 2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
        let ls = least_squares(&x, &[2.0, 4.0, 6.0, 8.0], 1e-10);
        assert_eq!(ls.rank, 1);
        assert_eq!(ls.dropped.len(), 1);
        assert!((ls.coef[0] + ls.coef[1] - 2.0).abs() < 1e-12);
        assert!(ls.rss < 1e-20);
    }
}
