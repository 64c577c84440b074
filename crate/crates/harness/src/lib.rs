//! Seeded optimizer runs on tabular benchmarks.
//!
//! Each run loops suggest, table lookup, observe. The simulated clock only
//! advances by the stored training runtime of each lookup, so optimizer
//! overhead never counts. Regret is the incumbent's mean test error minus the
//! best mean test error in the table.

mod aggregate;
mod compare;
mod error;
mod run;

pub use aggregate::{aggregate, final_regret_ecdf, log_time_grid, AggregateCurve};
pub use compare::{bundle_files, compare, meta_json, run_seed, write_bundle, CompareOptions, Report, StrategyResult};
pub use error::{HarnessError, Result};
pub use run::{run_once, run_with, Benchmark, Event, IncumbentMode, RunOptions, RunTrace, StopReason, StopRule};

#[cfg(test)]
pub(crate) mod tests {
    use tabbench_core::space::Hyperparameter;
    use tabbench_core::{BenchTable, ConfigSpace, EvalEntry, SeedRecord};

    /// Six cells; higher index means lower error, runtimes differ per seed.
    pub(crate) fn tiny_table() -> BenchTable {
        let space = ConfigSpace::new(vec![
            Hyperparameter::ordinal("a", &[1.0, 2.0, 3.0]),
            Hyperparameter::categorical("b", &["x", "y"]),
        ])
        .unwrap();
        let entries = (0..6)
            .map(|i| EvalEntry {
                records: (0..2)
                    .map(|s| SeedRecord {
                        seed: s,
                        train_curve: vec![1.0; 10],
                        valid_curve: (1..=10).map(|e| (6 - i) as f64 + 1.0 / e as f64 + 0.1 * s as f64).collect(),
                        final_test_mse: (6 - i) as f64 + 0.2 * s as f64,
                        runtime_seconds: 0.1 * (i + 1) as f64 + 0.37 * s as f64,
                        n_params: 10,
                        diverged: false,
                    })
                    .collect(),
            })
            .collect();
        BenchTable::new(space, 10, "tiny", entries).unwrap()
    }
}
