//! Small bundled regression datasets for tests and desk-scale grids.

use rand::Rng;
use rand_distr::StandardNormal;
use tabbench_core::rng_from_seed;

use crate::RawData;

/// `y = w·x + noise` with standard-normal features; the target is the last column.
pub fn linear_dataset(rows: usize, features: usize, noise: f64, seed: u64) -> RawData {
    let mut rng = rng_from_seed(seed);
    let w: Vec<f64> = (0..features).map(|j| 1.0 + j as f64 * 0.5).collect();
    let data = (0..rows)
        .map(|_| {
            let mut row: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
            let z: f64 = rng.sample(StandardNormal);
            let y = row.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + noise * z;
            row.push(y);
            row
        })
        .collect();
    let mut header: Vec<String> = (0..features).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    RawData { header, rows: data }
}

/// Smooth nonlinear target with interactions, standing in for a real
/// regression table at desk scale. Target is the last column.
pub fn friedman_dataset(rows: usize, noise: f64, seed: u64) -> RawData {
    let mut rng = rng_from_seed(seed);
    let data = (0..rows)
        .map(|_| {
            let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let z: f64 = rng.sample(StandardNormal);
            let y = 10.0 * (std::f64::consts::PI * x[0] * x[1]).sin()
                + 20.0 * (x[2] - 0.5).powi(2)
                + 10.0 * x[3]
                + 5.0 * x[4]
                + noise * z;
            let mut row = x;
            row.push(y);
            row
        })
        .collect();
    let header = ["x0", "x1", "x2", "x3", "x4", "y"].iter().map(|s| s.to_string()).collect();
    RawData { header, rows: data }
}
