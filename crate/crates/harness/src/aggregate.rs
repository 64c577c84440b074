//! Pointwise regret quantiles across runs.

use serde::Serialize;
use tabbench_analysis::{quantile_nearest_rank, Ecdf};

use crate::{HarnessError, Result, RunTrace};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateCurve {
    pub times: Vec<f64>,
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

/// Carries each trace's regret forward onto `grid` and takes nearest-rank
/// quartiles and median at every grid time.
pub fn aggregate(traces: &[RunTrace], grid: &[f64]) -> Result<AggregateCurve> {
    if grid.is_empty() {
        return Err(HarnessError::Invalid("empty time grid".into()));
    }
    if traces.is_empty() {
        return Err(HarnessError::Invalid("no traces to aggregate".into()));
    }
    let mut curve = AggregateCurve {
        times: grid.to_vec(),
        median: Vec::with_capacity(grid.len()),
        q25: Vec::with_capacity(grid.len()),
        q75: Vec::with_capacity(grid.len()),
    };
    let mut column = vec![0.0; traces.len()];
    for &t in grid {
        for (slot, trace) in column.iter_mut().zip(traces) {
            *slot = trace.regret_at(t);
        }
        column.sort_by(f64::total_cmp);
        curve.q25.push(quantile_nearest_rank(&column, 0.25)?);
        curve.median.push(quantile_nearest_rank(&column, 0.5)?);
        curve.q75.push(quantile_nearest_rank(&column, 0.75)?);
    }
    Ok(curve)
}

/// ECDF of the regret each run holds at `cutoff` seconds. Runs without an
/// event by then contribute their initial regret.
pub fn final_regret_ecdf(traces: &[RunTrace], cutoff: f64) -> Result<Ecdf> {
    let regrets: Vec<f64> = traces.iter().map(|t| t.regret_at(cutoff)).collect();
    Ok(Ecdf::new(&regrets)?)
}

/// `n` log-spaced times from the earliest first event to the latest last
/// event over all traces.
pub fn log_time_grid(traces: &[RunTrace], n: usize) -> Result<Vec<f64>> {
    let lo = traces
        .iter()
        .filter_map(|t| t.events.first().map(|e| e.cumulative_seconds))
        .fold(f64::INFINITY, f64::min);
    let hi = traces.iter().map(RunTrace::total_seconds).fold(0.0, f64::max);
    if n == 0 || !lo.is_finite() {
        return Err(HarnessError::Invalid("no events to span a time grid".into()));
    }
    if n == 1 || hi <= lo {
        return Ok(vec![hi]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    // pin the ends so the first and last events fall on the grid
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}
