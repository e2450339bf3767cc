//! Seeded synthetic datasets for tests, benchmarks and the self-test.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::rng::rng_from;

/// Two isotropic Gaussian blobs centred at `0` and `sep·1`, alternating labels.
pub fn blobs(m: usize, n: usize, sep: f64, std: f64, seed: u64) -> Dataset {
    let mut rng = rng_from(seed);
    let noise = Normal::new(0.0, std).expect("std must be finite and >= 0");
    let y: Vec<usize> = (0..m).map(|i| i % 2).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&c| (0..n).map(|_| c as f64 * sep + noise.sample(&mut rng)).collect())
        .collect();
    Dataset::from_rows(format!("blobs-{seed}"), &rows, y, 2).expect("valid blobs")
}

/// `k` classes with means in `[−3, 3]ⁿ` sharing one random correlated covariance.
pub fn gaussian_classes(m: usize, n: usize, k: usize, seed: u64) -> Dataset {
    let mut rng = rng_from(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let means: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let mix: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + 0.4 * z.sample(&mut rng)).collect())
        .collect();
    let y: Vec<usize> = (0..m).map(|i| i % k).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&c| {
            let e: Vec<f64> = (0..n).map(|_| z.sample(&mut rng)).collect();
            (0..n).map(|i| means[c][i] + (0..n).map(|j| mix[i][j] * e[j]).sum::<f64>()).collect()
        })
        .collect();
    Dataset::from_rows(format!("gauss-{seed}"), &rows, y, k).expect("valid gaussian classes")
}

/// Uniform points on `[0, cells]²` labelled by the parity of their cell.
pub fn checkerboard(m: usize, cells: usize, seed: u64) -> Dataset {
    let mut rng = rng_from(seed);
    let side = cells as f64;
    let mut rows = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    for _ in 0..m {
        let (a, b): (f64, f64) = (rng.random_range(0.0..side), rng.random_range(0.0..side));
        y.push((a.floor() as usize + b.floor() as usize) % 2);
        rows.push(vec![a, b]);
    }
    if y.iter().all(|&c| c == y[0]) {
        y[0] = 1 - y[0];
    }
    Dataset::from_rows(format!("checkerboard-{seed}"), &rows, y, 2).expect("valid checkerboard")
}

/// Binary data where class 1 makes up `minority_ratio` of the rows (at least one).
/// The minority is shifted by `1.5` standard deviations on every feature.
pub fn imbalanced(m: usize, n: usize, minority_ratio: f64, seed: u64) -> Dataset {
    let mut rng = rng_from(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let minority = ((m as f64 * minority_ratio).round() as usize).clamp(1, m - 1);
    let y: Vec<usize> = (0..m).map(|i| usize::from(i < minority)).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&c| (0..n).map(|_| 1.5 * c as f64 + z.sample(&mut rng)).collect())
        .collect();
    Dataset::from_rows(format!("imbalanced-{seed}"), &rows, y, 2).expect("valid imbalanced data")
}

/// The shipped benchmark: 600 rows, 12 skewed count-like features, 20% defective.
///
/// Five features carry signal; the rest are noise. Values are
/// exponentiated Gaussians so scaling and resampling choices matter.
pub fn benchmark(seed: u64) -> Dataset {
    const M: usize = 600;
    const N: usize = 12;
    const INFORMATIVE: usize = 5;
    let mut rng = rng_from(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rows = Vec::with_capacity(M);
    let mut y = Vec::with_capacity(M);
    for _ in 0..M {
        let latent = z.sample(&mut rng);
        let defective = latent + 0.5 * z.sample(&mut rng) > 0.84;
        let row = (0..N)
            .map(|j| {
                let signal = if j < INFORMATIVE { 0.8 * latent } else { 0.0 };
                (signal + z.sample(&mut rng) + j as f64 * 0.2).exp().round()
            })
            .collect();
        rows.push(row);
        y.push(usize::from(defective));
    }
    Dataset::from_rows("synthetic-defects", &rows, y, 2).expect("valid benchmark")
}
