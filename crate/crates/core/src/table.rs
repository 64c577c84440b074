use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::space::{ConfigIndex, ConfigSpace};
use crate::{Error, Result};

fn is_false(b: &bool) -> bool {
    !*b
}

/// One training run of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    /// Training-set MSE after each epoch.
    pub train_curve: Vec<f64>,
    /// Validation-set MSE after each epoch.
    pub valid_curve: Vec<f64>,
    pub final_test_mse: f64,
    pub runtime_seconds: f64,
    pub n_params: u64,
    /// Set when training hit a non-finite loss; curves carry the last finite
    /// value forward from that point.
    #[serde(default, skip_serializing_if = "is_false")]
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub records: Vec<SeedRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Train,
    Valid,
    Test,
    Runtime,
    NParams,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Metric::Train),
            "valid" => Ok(Metric::Valid),
            "test" => Ok(Metric::Test),
            "runtime" => Ok(Metric::Runtime),
            "n_params" | "params" => Ok(Metric::NParams),
            other => Err(format!("unknown metric `{other}` (train, valid, test, runtime, n_params)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryResult {
    pub valid_mse: f64,
    pub runtime_charged_seconds: f64,
    pub seed_drawn: u64,
    pub budget_epochs: usize,
}

/// Complete grid of evaluations; immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchTable {
    space: ConfigSpace,
    max_epochs: usize,
    dataset_name: String,
    entries: Vec<EvalEntry>,
}

impl BenchTable {
    /// Builds a table and checks every structural invariant.
    pub fn new(
        space: ConfigSpace,
        max_epochs: usize,
        dataset_name: impl Into<String>,
        entries: Vec<EvalEntry>,
    ) -> Result<Self> {
        let table = BenchTable {
            space,
            max_epochs,
            dataset_name: dataset_name.into(),
            entries,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Integrity(msg));
        if self.max_epochs == 0 {
            return fail("max_epochs must be positive".into());
        }
        if self.entries.len() != self.space.cardinality() {
            return fail(format!(
                "{} entries for a space of cardinality {}",
                self.entries.len(),
                self.space.cardinality()
            ));
        }
        let n_seeds = self.entries.first().map_or(0, |e| e.records.len());
        if n_seeds == 0 {
            return fail("entries must hold at least one record".into());
        }
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.records.len() != n_seeds {
                return fail(format!(
                    "config {i} has {} records, expected {n_seeds}",
                    entry.records.len()
                ));
            }
            let n_params = entry.records[0].n_params;
            for (s, r) in entry.records.iter().enumerate() {
                let at = format!("config {i} record {s}");
                if r.train_curve.len() != self.max_epochs || r.valid_curve.len() != self.max_epochs {
                    return fail(format!("{at}: curves must have {} epochs", self.max_epochs));
                }
                if !r.train_curve.iter().chain(&r.valid_curve).all(|&x| ok(x)) {
                    return fail(format!("{at}: curve entries must be finite and >= 0"));
                }
                if !ok(r.final_test_mse) {
                    return fail(format!("{at}: final_test_mse must be finite and >= 0"));
                }
                if !(r.runtime_seconds.is_finite() && r.runtime_seconds > 0.0) {
                    return fail(format!("{at}: runtime_seconds must be positive"));
                }
                if r.n_params == 0 || r.n_params != n_params {
                    return fail(format!("{at}: n_params must be positive and shared across seeds"));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn max_epochs(&self) -> usize {
        self.max_epochs
    }

    pub fn dataset_name(&self) -> &str {
        &self.dataset_name
    }

    pub fn n_seeds(&self) -> usize {
        self.entries[0].records.len()
    }

    pub fn entries(&self) -> &[EvalEntry] {
        &self.entries
    }

    pub fn entry(&self, config: ConfigIndex) -> Result<&EvalEntry> {
        self.space.check_index(config)?;
        Ok(&self.entries[config.0])
    }

    pub fn check_budget(&self, budget_epochs: usize) -> Result<()> {
        if (1..=self.max_epochs).contains(&budget_epochs) {
            Ok(())
        } else {
            Err(Error::BudgetOutOfRange {
                budget: budget_epochs,
                max_epochs: self.max_epochs,
            })
        }
    }

    /// Runtime charged for training `record` for `budget_epochs` epochs.
    pub fn charge(&self, record: &SeedRecord, budget_epochs: usize) -> f64 {
        record.runtime_seconds * budget_epochs as f64 / self.max_epochs as f64
    }

    /// Simulates one evaluation: draws a stored run uniformly and reports its
    /// validation error at `budget_epochs`.
    pub fn query<R: Rng + ?Sized>(
        &self,
        config: ConfigIndex,
        budget_epochs: usize,
        rng: &mut R,
    ) -> Result<QueryResult> {
        let entry = self.entry(config)?;
        self.check_budget(budget_epochs)?;
        let record = &entry.records[rng.random_range(0..entry.records.len())];
        Ok(QueryResult {
            valid_mse: record.valid_curve[budget_epochs - 1],
            runtime_charged_seconds: self.charge(record, budget_epochs),
            seed_drawn: record.seed,
            budget_epochs,
        })
    }

    /// Mean over seeds. `budget_epochs` is only consulted for curve metrics.
    pub fn mean_metric(&self, config: ConfigIndex, metric: Metric, budget_epochs: usize) -> Result<f64> {
        let entry = self.entry(config)?;
        if matches!(metric, Metric::Train | Metric::Valid) {
            self.check_budget(budget_epochs)?;
        }
        Ok(mean_of(entry, metric, budget_epochs))
    }

    /// [`mean_metric`](Self::mean_metric) for every cell, in index order.
    pub fn mean_metric_all(&self, metric: Metric, budget_epochs: usize) -> Result<Vec<f64>> {
        if matches!(metric, Metric::Train | Metric::Valid) {
            self.check_budget(budget_epochs)?;
        }
        Ok(self
            .entries
            .iter()
            .map(|e| mean_of(e, metric, budget_epochs))
            .collect())
    }

    /// Best cell by mean test error; ties go to the lowest index.
    pub fn global_optimum(&self) -> (ConfigIndex, f64) {
        let mut best = (ConfigIndex(0), f64::INFINITY);
        for (i, e) in self.entries.iter().enumerate() {
            let y = mean_of(e, Metric::Test, self.max_epochs);
            if y < best.1 {
                best = (ConfigIndex(i), y);
            }
        }
        best
    }
}

fn mean_of(entry: &EvalEntry, metric: Metric, budget_epochs: usize) -> f64 {
    let sum: f64 = entry
        .records
        .iter()
        .map(|r| match metric {
            Metric::Train => r.train_curve[budget_epochs - 1],
            Metric::Valid => r.valid_curve[budget_epochs - 1],
            Metric::Test => r.final_test_mse,
            Metric::Runtime => r.runtime_seconds,
            Metric::NParams => r.n_params as f64,
        })
        .sum();
    sum / entry.records.len() as f64
}
