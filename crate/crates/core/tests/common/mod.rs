#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specsel_core::synthetic::standard_normal;
use specsel_core::{Dataset, LabeledSplit};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian classes with random means and random correlated covariances.
pub fn random_dataset(rng: &mut ChaCha8Rng, per_class: &[usize], p: usize, spread: f64) -> Dataset {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (g, &count) in per_class.iter().enumerate() {
        let mean: Vec<f64> = (0..p).map(|_| spread * standard_normal(rng)).collect();
        let mix: Vec<f64> = (0..p * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale: Vec<f64> = (0..p).map(|_| rng.gen_range(0.5..2.0)).collect();
        for _ in 0..count {
            let e: Vec<f64> = (0..p).map(|_| standard_normal(rng)).collect();
            for a in 0..p {
                let v: f64 = e[a] * scale[a] + (0..a).map(|b| 0.5 * mix[a * p + b] * e[b]).sum::<f64>();
                values.push(mean[a] + v);
            }
            labels.push(g);
        }
    }
    let names = (0..per_class.len()).map(|g| format!("g{g}")).collect();
    Dataset::new(values, (0..p).map(|j| j as f64).collect(), Some(labels), names).unwrap()
}

/// Splits the rows of `d` by a per-row Bernoulli draw, keeping at least
/// `min_labeled` labeled rows per class.
pub fn random_split(rng: &mut ChaCha8Rng, d: &Dataset, frac: f64, min_labeled: usize) -> LabeledSplit {
    let labels = d.labels().unwrap();
    let mut seen = vec![0usize; d.n_classes()];
    let (mut labeled, mut unlabeled) = (Vec::new(), Vec::new());
    for (i, &l) in labels.iter().enumerate() {
        if seen[l] < min_labeled || rng.gen_bool(frac) {
            seen[l] += 1;
            labeled.push(i);
        } else {
            unlabeled.push(i);
        }
    }
    LabeledSplit::from_rows(d, labeled, unlabeled, 0).unwrap()
}

pub fn all_labeled(d: &Dataset) -> LabeledSplit {
    LabeledSplit::from_rows(d, (0..d.n_rows()).collect(), Vec::new(), 0).unwrap()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Explicit inverse and determinant by Gauss-Jordan elimination.
pub fn inverse_det(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    let mut det = 1.0;
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        if piv != k {
            m.swap(k, piv);
            det = -det;
        }
        let d = m[k][k];
        det *= d;
        for v in m[k].iter_mut() {
            *v /= d;
        }
        for i in 0..n {
            if i != k {
                let f = m[i][k];
                for j in 0..2 * n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
    }
    (m.into_iter().map(|r| r[n..].to_vec()).collect(), det)
}
