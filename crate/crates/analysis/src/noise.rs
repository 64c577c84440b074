//! Seed-to-seed noise of stored evaluations.

use tabbench_core::{BenchTable, ConfigIndex, Metric, SeedRecord};

use crate::{AnalysisError, Result};

fn metric_of(r: &SeedRecord, metric: Metric, epoch: usize) -> f64 {
    match metric {
        Metric::Train => r.train_curve[epoch - 1],
        Metric::Valid => r.valid_curve[epoch - 1],
        Metric::Test => r.final_test_mse,
        Metric::Runtime => r.runtime_seconds,
        Metric::NParams => r.n_params as f64,
    }
}

/// Population standard deviation of `metric` across the seeds of `config`.
/// `epoch` is 1-based and only consulted for curve metrics.
pub fn noise_std(table: &BenchTable, config: ConfigIndex, epoch: usize, metric: Metric) -> Result<f64> {
    if matches!(metric, Metric::Train | Metric::Valid) {
        table.check_budget(epoch)?;
    }
    let records = &table.entry(config)?.records;
    if records.len() < 2 {
        return Err(AnalysisError::Invalid(format!(
            "noise needs at least 2 seeds, table has {}",
            records.len()
        )));
    }
    let xs: Vec<f64> = records.iter().map(|r| metric_of(r, metric, epoch)).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Ok((xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

/// [`noise_std`] for every config, in index order.
pub fn noise_all(table: &BenchTable, epoch: usize, metric: Metric) -> Result<Vec<f64>> {
    (0..table.space().cardinality())
        .map(|i| noise_std(table, ConfigIndex(i), epoch, metric))
        .collect()
}
