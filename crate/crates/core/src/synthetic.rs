//! Seeded generators for planted-signal test data.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::math::{exp, ln, sqrt};

/// Standard normal draw by Box-Muller.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    sqrt(-2.0 * ln(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Classes with a Gaussian signal block on a few columns and independent
/// normal noise everywhere else.
#[derive(Debug, Clone)]
pub struct Planted {
    pub per_class: Vec<usize>,
    pub n_vars: usize,
    pub signal_cols: Vec<usize>,
    /// `class_means[g][k]` is the mean of signal column `k` in class `g`.
    pub class_means: Vec<Vec<f64>>,
    /// Lower-triangular factor of each class covariance on the signal block.
    pub class_factors: Vec<Matrix>,
    pub noise_mean: f64,
    pub noise_sd: f64,
}

impl Planted {
    /// Rows are grouped by class; variable identifiers are `1..=n_vars`.
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.signal_cols.len();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (g, &count) in self.per_class.iter().enumerate() {
            for _ in 0..count {
                let mut row: Vec<f64> =
                    (0..self.n_vars).map(|_| self.noise_mean + self.noise_sd * standard_normal(&mut rng)).collect();
                let e: Vec<f64> = (0..k).map(|_| standard_normal(&mut rng)).collect();
                let l = &self.class_factors[g];
                for (a, &col) in self.signal_cols.iter().enumerate() {
                    let v: f64 = (0..=a).map(|b| l[(a, b)] * e[b]).sum();
                    row[col] = self.class_means[g][a] + v;
                }
                values.extend(row);
                labels.push(g);
            }
        }
        let names = (0..self.per_class.len()).map(|g| format!("class{}", g + 1)).collect::<Vec<String>>();
        Dataset::new(values, (1..=self.n_vars).map(|j| j as f64).collect(), Some(labels), names)
    }
}

/// Same data with labels randomly permuted, destroying any class signal.
pub fn shuffle_labels(d: &Dataset, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = d.labels().map(<[usize]>::to_vec).unwrap_or_default();
    labels.shuffle(&mut rng);
    Dataset::new(d.values().to_vec(), d.var_ids().to_vec(), Some(labels), d.class_names().to_vec())
}

/// Smooth synthetic spectra with narrow class-specific absorption peaks.
///
/// Each class adds a Gaussian peak of height `peak_height` and width
/// `peak_width` channels at its own position; all rows share a random
/// smooth baseline plus white noise of standard deviation `noise_sd`.
pub fn peaked_spectra(
    per_class: usize,
    peak_centers: &[f64],
    n_channels: usize,
    peak_height: f64,
    peak_width: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(per_class * peak_centers.len() * n_channels);
    let mut labels = Vec::new();
    for (g, &center) in peak_centers.iter().enumerate() {
        for _ in 0..per_class {
            let offset = standard_normal(&mut rng);
            let slope = 0.2 * standard_normal(&mut rng);
            for c in 0..n_channels {
                let t = c as f64 / n_channels as f64;
                let z = (c as f64 - center) / peak_width;
                let peak = peak_height * exp(-0.5 * z * z);
                values.push(offset + slope * t + peak + noise_sd * standard_normal(&mut rng));
            }
            labels.push(g);
        }
    }
    let names = (0..peak_centers.len()).map(|g| format!("class{}", g + 1)).collect::<Vec<String>>();
    Dataset::new(values, (0..n_channels).map(|c| 400.0 + 2.0 * c as f64).collect(), Some(labels), names)
}
