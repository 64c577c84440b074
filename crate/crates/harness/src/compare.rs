//! Many seeded runs per strategy and the on-disk report bundle.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tabbench_analysis::{quantile_nearest_rank, Ecdf};
use tabbench_core::{derive_seed, table_checksum, BenchTable};
use tabbench_opt::{Settings, Strategy};

use crate::{aggregate, final_regret_ecdf, log_time_grid, run_once, AggregateCurve, Benchmark, HarnessError, Result, RunOptions, RunTrace};

#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub strategies: Vec<Strategy>,
    pub n_runs: usize,
    pub run: RunOptions,
    pub master_seed: u64,
    pub settings: Settings,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
    pub grid_points: usize,
    /// Simulated time at which final regrets are read; `None` reads each
    /// run's last event.
    pub cutoff_seconds: Option<f64>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            strategies: Strategy::ALL.to_vec(),
            n_runs: 500,
            run: RunOptions::default(),
            master_seed: 0,
            settings: Settings::default(),
            jobs: None,
            grid_points: 200,
            cutoff_seconds: None,
        }
    }
}

pub fn run_seed(master: u64, strategy: Strategy, run: usize) -> u64 {
    derive_seed(master, strategy.name(), &[run as u64])
}

#[derive(Clone, Debug)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub traces: Vec<RunTrace>,
    pub curve: AggregateCurve,
    pub final_regrets: Ecdf,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub dataset: String,
    pub table_checksum: String,
    pub optimum: f64,
    pub options: CompareOptions,
    pub time_grid: Vec<f64>,
    /// Sorted by strategy name.
    pub results: Vec<StrategyResult>,
}

impl Report {
    pub fn result(&self, strategy: Strategy) -> Option<&StrategyResult> {
        self.results.iter().find(|r| r.strategy == strategy)
    }
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HarnessError::Invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `n_runs` instances of every strategy on `table`. Output is fully
/// determined by the table, the options and the master seed.
pub fn compare(table: &BenchTable, opts: &CompareOptions) -> Result<Report> {
    if opts.n_runs == 0 {
        return Err(HarnessError::Invalid("n_runs must be positive".into()));
    }
    let mut strategies = opts.strategies.clone();
    strategies.sort_by_key(|s| s.name());
    strategies.dedup();
    if strategies.is_empty() {
        return Err(HarnessError::Invalid("no strategies given".into()));
    }
    let bench = Benchmark::new(table);
    let tasks: Vec<(Strategy, usize)> = strategies
        .iter()
        .flat_map(|&s| (0..opts.n_runs).map(move |r| (s, r)))
        .collect();
    let traces: Vec<RunTrace> = in_pool(opts.jobs, || {
        tasks
            .par_iter()
            .map(|&(s, r)| run_once(s, &bench, &opts.settings, &opts.run, run_seed(opts.master_seed, s, r)))
            .collect::<Result<Vec<_>>>()
    })??;
    let time_grid = log_time_grid(&traces, opts.grid_points)?;
    let cutoff = opts.cutoff_seconds.unwrap_or(f64::INFINITY);
    let mut results = Vec::with_capacity(strategies.len());
    for (k, &strategy) in strategies.iter().enumerate() {
        let mine = traces[k * opts.n_runs..(k + 1) * opts.n_runs].to_vec();
        results.push(StrategyResult {
            strategy,
            curve: aggregate(&mine, &time_grid)?,
            final_regrets: final_regret_ecdf(&mine, cutoff)?,
            traces: mine,
        });
    }
    Ok(Report {
        dataset: table.dataset_name().to_string(),
        table_checksum: table_checksum(table),
        optimum: bench.optimum(),
        options: opts.clone(),
        time_grid,
        results,
    })
}

#[derive(Serialize)]
struct TraceRow<'a> {
    strategy: &'a str,
    run: usize,
    event: usize,
    config_index: usize,
    budget: usize,
    valid_mse: f64,
    cum_seconds: f64,
    incumbent_index: Option<usize>,
    regret: f64,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    strategy: &'a str,
    time: f64,
    q25: f64,
    median: f64,
    q75: f64,
}

#[derive(Serialize)]
struct EcdfRow<'a> {
    strategy: &'a str,
    regret: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct Summary {
    runs: usize,
    median_final_regret: f64,
    q25_final_regret: f64,
    q75_final_regret: f64,
    mean_events: f64,
    stopped_early: usize,
}

#[derive(Serialize)]
struct Meta<'a> {
    dataset: &'a str,
    table_checksum: &'a str,
    optimum_test_mse: f64,
    master_seed: u64,
    n_runs: usize,
    strategies: Vec<&'a str>,
    stop: &'a crate::StopRule,
    incumbent: crate::IncumbentMode,
    cutoff_seconds: Option<f64>,
    grid_points: usize,
    settings: &'a Settings,
    run_seeds: BTreeMap<&'a str, Vec<u64>>,
    summary: BTreeMap<&'a str, Summary>,
    checksums: BTreeMap<&'a str, String>,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// CSV contents of the bundle, keyed by file name.
pub fn bundle_files(report: &Report) -> Result<BTreeMap<&'static str, Vec<u8>>> {
    let traces = csv_bytes(report.results.iter().flat_map(|r| {
        r.traces.iter().enumerate().flat_map(move |(run, t)| {
            t.events.iter().enumerate().map(move |(event, e)| TraceRow {
                strategy: r.strategy.name(),
                run,
                event,
                config_index: e.config.0,
                budget: e.budget_epochs,
                valid_mse: e.valid_mse,
                cum_seconds: e.cumulative_seconds,
                incumbent_index: e.incumbent.map(|c| c.0),
                regret: e.test_regret,
            })
        })
    }))?;
    let curves = csv_bytes(report.results.iter().flat_map(|r| {
        let c = &r.curve;
        (0..c.times.len()).map(move |i| CurveRow {
            strategy: r.strategy.name(),
            time: c.times[i],
            q25: c.q25[i],
            median: c.median[i],
            q75: c.q75[i],
        })
    }))?;
    let ecdf = csv_bytes(report.results.iter().flat_map(|r| {
        r.final_regrets.steps().into_iter().map(move |(regret, cdf)| EcdfRow {
            strategy: r.strategy.name(),
            regret,
            cdf,
        })
    }))?;
    Ok(BTreeMap::from([("traces.csv", traces), ("curves.csv", curves), ("ecdf.csv", ecdf)]))
}

/// `meta.json` contents for a report whose CSV files are `files`.
pub fn meta_json(report: &Report, files: &BTreeMap<&'static str, Vec<u8>>) -> Result<String> {
    let o = &report.options;
    let mut run_seeds = BTreeMap::new();
    let mut summary = BTreeMap::new();
    for r in &report.results {
        let name = r.strategy.name();
        run_seeds.insert(name, (0..o.n_runs).map(|i| run_seed(o.master_seed, r.strategy, i)).collect());
        let sorted = r.final_regrets.values();
        summary.insert(
            name,
            Summary {
                runs: r.traces.len(),
                median_final_regret: quantile_nearest_rank(sorted, 0.5)?,
                q25_final_regret: quantile_nearest_rank(sorted, 0.25)?,
                q75_final_regret: quantile_nearest_rank(sorted, 0.75)?,
                mean_events: r.traces.iter().map(|t| t.events.len()).sum::<usize>() as f64 / r.traces.len() as f64,
                stopped_early: r
                    .traces
                    .iter()
                    .filter(|t| matches!(t.stop, crate::StopReason::Error(_)))
                    .count(),
            },
        );
    }
    let meta = Meta {
        dataset: &report.dataset,
        table_checksum: &report.table_checksum,
        optimum_test_mse: report.optimum,
        master_seed: o.master_seed,
        n_runs: o.n_runs,
        strategies: report.results.iter().map(|r| r.strategy.name()).collect(),
        stop: &o.run.stop,
        incumbent: o.run.incumbent,
        cutoff_seconds: o.cutoff_seconds,
        grid_points: o.grid_points,
        settings: &o.settings,
        run_seeds,
        summary,
        checksums: files.iter().map(|(k, v)| (*k, sha256_hex(v))).collect(),
    };
    Ok(serde_json::to_string_pretty(&meta)? + "\n")
}

/// Writes `traces.csv`, `curves.csv`, `ecdf.csv` and `meta.json` into `dir`.
pub fn write_bundle(report: &Report, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = bundle_files(report)?;
    let meta = meta_json(report, &files)?;
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes)?;
    }
    fs::write(dir.join("meta.json"), meta)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{StopRule, tests::tiny_table};

    fn opts(strategies: Vec<Strategy>, n_runs: usize) -> CompareOptions {
        CompareOptions {
            strategies,
            n_runs,
            run: RunOptions {
                stop: StopRule::evals(12),
                ..RunOptions::default()
            },
            master_seed: 42,
            grid_points: 20,
            ..CompareOptions::default()
        }
    }

    #[test]
    fn single_run_quantiles_equal_the_trace() {
        let table = tiny_table();
        let report = compare(&table, &opts(vec![Strategy::Rs], 1)).unwrap();
        let r = &report.results[0];
        for (i, &t) in report.time_grid.iter().enumerate() {
            let v = r.traces[0].regret_at(t);
            assert_eq!((r.curve.q25[i], r.curve.median[i], r.curve.q75[i]), (v, v, v));
        }
    }

    #[test]
    fn results_are_sorted_and_deduplicated() {
        let table = tiny_table();
        let report = compare(&table, &opts(vec![Strategy::Tpe, Strategy::Re, Strategy::Tpe], 2)).unwrap();
        let names: Vec<&str> = report.results.iter().map(|r| r.strategy.name()).collect();
        assert_eq!(names, vec!["re", "tpe"]);
        assert_eq!(report.results[0].traces[1].seed, run_seed(42, Strategy::Re, 1));
    }

    #[test]
    fn bundle_is_reproducible_and_independent_of_jobs() {
        let table = tiny_table();
        let all = opts(Strategy::ALL.to_vec(), 3);
        let a = compare(&table, &all).unwrap();
        let b = compare(&table, &CompareOptions { jobs: Some(2), ..all }).unwrap();
        let fa = bundle_files(&a).unwrap();
        assert_eq!(fa, bundle_files(&b).unwrap());
        assert_eq!(meta_json(&a, &fa).unwrap(), meta_json(&b, &fa).unwrap());
        let header = String::from_utf8(fa["traces.csv"].clone()).unwrap();
        assert!(header.starts_with(
            "strategy,run,event,config_index,budget,valid_mse,cum_seconds,incumbent_index,regret\n"
        ));
    }

    #[test]
    fn zero_runs_rejected() {
        assert!(compare(&tiny_table(), &opts(vec![Strategy::Rs], 0)).is_err());
    }
}
