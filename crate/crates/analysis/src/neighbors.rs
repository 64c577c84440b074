//! One-flip neighborhood of a configuration.

use tabbench_core::space::Value;
use tabbench_core::{BenchTable, ConfigIndex, Metric};

use crate::{AnalysisError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborRow {
    pub param: usize,
    pub param_name: String,
    pub from: Value,
    pub to: Value,
    pub config: ConfigIndex,
    pub mean_test: f64,
    /// `(y_new - y_ref) / y_ref`.
    pub relative_change: f64,
}

/// Every config that differs from `config` in exactly one parameter, with its
/// mean test error relative to that of `config`, sorted ascending by relative
/// change (ties keep parameter then value order).
pub fn local_neighborhood(table: &BenchTable, config: ConfigIndex) -> Result<Vec<NeighborRow>> {
    let space = table.space();
    let y_ref = table.mean_metric(config, Metric::Test, table.max_epochs())?;
    if y_ref == 0.0 {
        return Err(AnalysisError::Undefined(format!(
            "config {} has zero mean test error, relative change is undefined",
            config.0
        )));
    }
    let here = space.decode(config)?;
    let mut rows = Vec::with_capacity(space.neighbor_count());
    for n in space.neighbors(config)? {
        let there = space.decode(n)?;
        let param = (0..space.len()).find(|&j| there[j] != here[j]).expect("neighbor differs");
        let hp = &space.params()[param];
        let mean_test = table.mean_metric(n, Metric::Test, table.max_epochs())?;
        rows.push(NeighborRow {
            param,
            param_name: hp.name.clone(),
            from: hp.values[here[param]].clone(),
            to: hp.values[there[param]].clone(),
            config: n,
            mean_test,
            relative_change: (mean_test - y_ref) / y_ref,
        });
    }
    rows.sort_by(|a, b| a.relative_change.total_cmp(&b.relative_change));
    Ok(rows)
}
