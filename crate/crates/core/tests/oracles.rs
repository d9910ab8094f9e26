mod common;

use common::{all_labeled, gauss_solve, inverse_det, random_dataset, rng};
use rand::Rng;
use specsel_core::{classify, fit_regression, fit_supervised, CovarianceStructure, Fitting};

#[test]
fn vvv_matches_sample_moments() {
    let mut r = rng(11);
    for _ in 0..100 {
        let p = r.gen_range(1..=5);
        let groups = r.gen_range(2..=4);
        let sizes: Vec<usize> = (0..groups).map(|_| r.gen_range(p + 3..40)).collect();
        let d = random_dataset(&mut r, &sizes, p, 3.0);
        let cols: Vec<usize> = (0..p).collect();
        let s = if p == 1 { CovarianceStructure::V } else { CovarianceStructure::VVV };
        let m = fit_supervised(&d, &cols, s).unwrap();
        let labels = d.labels().unwrap();
        for g in 0..groups {
            let rows: Vec<usize> = (0..d.n_rows()).filter(|&i| labels[i] == g).collect();
            let ng = rows.len() as f64;
            let mean: Vec<f64> = (0..p).map(|a| rows.iter().map(|&i| d.value(i, a)).sum::<f64>() / ng).collect();
            for a in 0..p {
                assert!((m.means[g][a] - mean[a]).abs() < 1e-12);
                for b in 0..p {
                    let cov = rows.iter().map(|&i| (d.value(i, a) - mean[a]) * (d.value(i, b) - mean[b])).sum::<f64>() / ng;
                    let got = m.covs.sigma(g)[(a, b)];
                    assert!((got - cov).abs() < 1e-12, "sigma[{g}][{a},{b}] {got} vs {cov}");
                }
            }
            assert!((m.tau[g] - ng / d.n_rows() as f64).abs() < 1e-15);
        }
    }
}

#[test]
fn regression_matches_normal_equations() {
    let mut r = rng(12);
    for _ in 0..100 {
        let p = r.gen_range(2..=6);
        let n = r.gen_range(p + 5..80);
        let d = random_dataset(&mut r, &[n], p, 2.0);
        let target = r.gen_range(0..p);
        let predictors: Vec<usize> = (0..p).filter(|&j| j != target).collect();
        let fit = fit_regression(&all_labeled(&d), target, &predictors, Fitting::Supervised).unwrap();

        // [1, x] design, normal equations
        let q = predictors.len() + 1;
        let design: Vec<Vec<f64>> = (0..n)
            .map(|i| std::iter::once(1.0).chain(predictors.iter().map(|&j| d.value(i, j))).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| d.value(i, target)).collect();
        let xtx: Vec<Vec<f64>> =
            (0..q).map(|a| (0..q).map(|b| (0..n).map(|i| design[i][a] * design[i][b]).sum()).collect()).collect();
        let xty: Vec<f64> = (0..q).map(|a| (0..n).map(|i| design[i][a] * y[i]).sum()).collect();
        let coef = gauss_solve(xtx, xty);
        assert!((fit.alpha - coef[0]).abs() < 1e-10, "alpha {} vs {}", fit.alpha, coef[0]);
        for (b, c) in fit.beta.iter().zip(&coef[1..]) {
            assert!((b - c).abs() < 1e-10);
        }
        let rss: f64 = (0..n)
            .map(|i| {
                let e = y[i] - design[i].iter().zip(&coef).map(|(x, c)| x * c).sum::<f64>();
                e * e
            })
            .sum();
        let s2 = rss / n as f64;
        assert!((fit.sigma2 - s2).abs() < 1e-10 * s2.max(1.0));
        let ll = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + s2.ln() + 1.0);
        assert!((fit.loglik - ll).abs() < 1e-10 * ll.abs().max(1.0));
        assert_eq!(fit.d_reg, q + 1);
    }
}

#[test]
fn posteriors_match_density_ratio() {
    let mut r = rng(13);
    for _ in 0..100 {
        let p = r.gen_range(1..=4);
        let groups = r.gen_range(2..=4);
        let sizes: Vec<usize> = (0..groups).map(|_| r.gen_range(p + 3..30)).collect();
        let d = random_dataset(&mut r, &sizes, p, 1.0);
        let structures = CovarianceStructure::for_dim(p);
        let s = structures[r.gen_range(0..structures.len())];
        let cols: Vec<usize> = (0..p).collect();
        let m = fit_supervised(&d, &cols, s).unwrap();
        let post = classify(&m, &d);

        let parts: Vec<(Vec<Vec<f64>>, f64)> = (0..groups)
            .map(|g| {
                let sigma: Vec<Vec<f64>> = (0..p).map(|a| (0..p).map(|b| m.covs.sigma(g)[(a, b)]).collect()).collect();
                inverse_det(&sigma)
            })
            .collect();
        for i in 0..d.n_rows() {
            let x = d.row(i);
            let dens: Vec<f64> = (0..groups)
                .map(|g| {
                    let (inv, det) = &parts[g];
                    let diff: Vec<f64> = (0..p).map(|a| x[a] - m.means[g][a]).collect();
                    let q: f64 = (0..p).map(|a| (0..p).map(|b| diff[a] * inv[a][b] * diff[b]).sum::<f64>()).sum();
                    m.tau[g] * (2.0 * std::f64::consts::PI).powf(-(p as f64) / 2.0) * det.powf(-0.5) * (-0.5 * q).exp()
                })
                .collect();
            let total: f64 = dens.iter().sum();
            for g in 0..groups {
                let oracle = dens[g] / total;
                assert!((post.z_hat[(i, g)] - oracle).abs() < 1e-12, "{s} row {i} class {g}: {} vs {oracle}", post.z_hat[(i, g)]);
            }
        }
    }
}
