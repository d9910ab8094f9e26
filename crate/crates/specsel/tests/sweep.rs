use specsel::study::{aggregation_sweep, run_study, StudyConfig};
use specsel_core::synthetic::peaked_spectra;
use specsel_core::{aggregate, SearchConfig};

/// Three classes whose narrow peaks sit 25 channels apart: blocks of 30
/// still separate them, blocks of 70 average all three together.
fn spectra() -> specsel_core::Dataset {
    peaked_spectra(30, &[75.0, 100.0, 125.0], 280, 8.0, 3.0, 0.3, 17).unwrap()
}

fn config() -> StudyConfig {
    StudyConfig { splits: 5, master_seed: 4, search: SearchConfig::default(), ..StudyConfig::default() }
}

#[test]
fn coarse_aggregation_degrades() {
    let d = spectra();
    let rows = aggregation_sweep(&d, &[30, 70], &config()).unwrap();
    let (fine, coarse) = (&rows[0].0, &rows[1].0);
    assert_eq!((fine.variables, coarse.variables), (10, 4));
    assert!(coarse.mean_misclassification > fine.mean_misclassification);
    assert!(coarse.mean_misclassification > 2.0 * fine.mean_misclassification.max(0.05));
}

#[test]
fn level_one_matches_plain_study() {
    let d = peaked_spectra(15, &[10.0, 20.0], 30, 2.0, 2.0, 0.3, 3).unwrap();
    let cfg = config();
    let sweep = aggregation_sweep(&d, &[1], &cfg).unwrap();
    let plain = run_study(&aggregate(&d, 1).unwrap(), &cfg).unwrap();
    assert_eq!(sweep[0].2, plain);
    assert_eq!(sweep[0].2, run_study(&d, &cfg).unwrap());
}
