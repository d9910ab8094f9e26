mod common;

use proptest::prelude::*;
use specsel_core::math::log_sum_exp;
use specsel_core::mixture::fit_supervised;
use specsel_core::{aggregate, classify, compare_add, stratified_split, CovarianceStructure, Dataset, Fitting, LabeledSplit};

fn labeled_dataset(sizes: &[usize], p: usize, seed: u64) -> Dataset {
    let mut r = common::rng(seed);
    common::random_dataset(&mut r, sizes, p, 2.5)
}

fn transformed(d: &Dataset, scale: f64, shift: f64) -> Dataset {
    let values = d.values().iter().map(|v| scale * v + shift).collect();
    Dataset::new(values, d.var_ids().to_vec(), d.labels().map(<[usize]>::to_vec), d.class_names().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn split_partitions_rows(sizes in prop::collection::vec(4usize..40, 1..5), frac in 0.25f64..0.75, seed in any::<u64>()) {
        let d = labeled_dataset(&sizes, 2, seed);
        let s = stratified_split(&d, frac, seed).unwrap();
        let mut all: Vec<usize> = s.labeled_rows().iter().chain(s.unlabeled_rows()).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..d.n_rows()).collect::<Vec<_>>());
        let n: usize = sizes.iter().sum();
        prop_assert_eq!(s.labeled_rows().len(), ((frac * n as f64).round() as usize).max(sizes.iter().map(|&k| (frac * k as f64).floor() as usize).sum()));
        for (g, &k) in s.labeled().class_counts().iter().enumerate() {
            let quota = frac * sizes[g] as f64;
            prop_assert!(k as f64 >= quota.floor() && k as f64 <= quota.floor() + 1.0);
        }
        prop_assert_eq!(s.ground_truth().len(), s.unlabeled().n_rows());
        prop_assert!(s.unlabeled().labels().is_none());
        let again = stratified_split(&d, frac, seed).unwrap();
        prop_assert_eq!(again.labeled_rows(), s.labeled_rows());
    }

    #[test]
    fn aggregation_column_count(p in 1usize..60, level in 1usize..60) {
        prop_assume!(level <= p);
        let d = labeled_dataset(&[5, 5], p, p as u64);
        let a = aggregate(&d, level).unwrap();
        prop_assert_eq!(a.n_vars(), p.div_ceil(level));
        prop_assert_eq!(a.n_rows(), d.n_rows());
        let ids = a.var_ids();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn log_sum_exp_shift(xs in prop::collection::vec(-700.0f64..700.0, 1..10), c in -300.0f64..300.0) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let a = log_sum_exp(&xs) + c;
        let b = log_sum_exp(&shifted);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let l = log_sum_exp(&xs);
        prop_assert!(l >= m && l <= m + (xs.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn posterior_rows_are_distributions(seed in any::<u64>(), k in 0usize..10, p in 2usize..4) {
        let d = labeled_dataset(&[12, 15, 9], p, seed);
        let s = CovarianceStructure::MULTIVARIATE[k];
        let cols: Vec<usize> = (0..p).collect();
        let m = fit_supervised(&d, &cols, s).unwrap();
        let post = classify(&m, &d);
        for i in 0..d.n_rows() {
            let row = post.z_hat.row(i);
            prop_assert!(row.iter().all(|&z| (0.0..=1.0).contains(&z)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn evidence_ignores_order_of_chosen(seed in any::<u64>(), updating in any::<bool>()) {
        let d = labeled_dataset(&[15, 15], 4, seed);
        let split = LabeledSplit::from_rows(&d, (0..20).collect(), (20..30).collect(), seed).unwrap();
        let mode = Fitting::from_updating(updating);
        let a = compare_add(&split, &[0, 1], 3, None, mode).unwrap();
        let b = compare_add(&split, &[1, 0], 3, None, mode).unwrap();
        prop_assert!((a.evidence - b.evidence).abs() <= 1e-6 * a.evidence.abs().max(1.0));
    }

    #[test]
    fn evidence_invariant_to_affine_rescaling(seed in any::<u64>(), scale in 0.1f64..10.0, shift in -50.0f64..50.0) {
        let d = labeled_dataset(&[15, 15], 3, seed);
        let e = transformed(&d, scale, shift);
        let rows = |d: &Dataset| LabeledSplit::from_rows(d, (0..20).collect(), (20..30).collect(), 0).unwrap();
        for chosen in [vec![], vec![0], vec![0, 1]] {
            let a = compare_add(&rows(&d), &chosen, 2, None, Fitting::Supervised).unwrap();
            let b = compare_add(&rows(&e), &chosen, 2, None, Fitting::Supervised).unwrap();
            prop_assert!((a.diff() - b.diff()).abs() <= 1e-6 * a.diff().abs().max(1.0), "{} vs {}", a.diff(), b.diff());
        }
    }
}
