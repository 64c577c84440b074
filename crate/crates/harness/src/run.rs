//! Single seeded optimizer runs against a table.

use rand::Rng;
use serde::{Deserialize, Serialize};
use tabbench_core::{derive_seed, rng_from_seed, BenchTable, ConfigIndex, Metric};
use tabbench_opt::{build, Observation, Optimizer, OptimizerError, Settings, Strategy};

use crate::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub max_evals: Option<usize>,
    pub max_seconds: Option<f64>,
    /// Count only full-budget evaluations against `max_evals`.
    pub count_full_budget_only: bool,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_evals: Some(500),
            max_seconds: None,
            count_full_budget_only: false,
        }
    }
}

impl StopRule {
    pub fn evals(n: usize) -> Self {
        StopRule {
            max_evals: Some(n),
            ..StopRule::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.max_evals.is_none() && self.max_seconds.is_none() {
            return Err(HarnessError::Invalid("a stop rule needs max_evals or max_seconds".into()));
        }
        if let Some(t) = self.max_seconds {
            if !(t > 0.0) {
                return Err(HarnessError::Invalid(format!("max_seconds must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncumbentMode {
    /// Lowest validation error over every observation, whatever its budget.
    #[default]
    AnyBudget,
    /// Only full-budget observations can become incumbent.
    MaxBudget,
}

impl std::str::FromStr for IncumbentMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "any-budget" => Ok(IncumbentMode::AnyBudget),
            "max-budget" => Ok(IncumbentMode::MaxBudget),
            _ => Err(format!("unknown incumbent mode `{s}` (available: any-budget, max-budget)")),
        }
    }
}

/// Mean test errors of a table, the reference for regret.
#[derive(Clone, Debug)]
pub struct Benchmark<'a> {
    pub table: &'a BenchTable,
    mean_test: Vec<f64>,
    optimum: f64,
    worst: f64,
}

impl<'a> Benchmark<'a> {
    pub fn new(table: &'a BenchTable) -> Self {
        let mean_test = table
            .mean_metric_all(Metric::Test, table.max_epochs())
            .expect("test error needs no budget");
        let optimum = table.global_optimum().1;
        let worst = mean_test.iter().copied().fold(optimum, f64::max);
        Benchmark {
            table,
            mean_test,
            optimum,
            worst,
        }
    }

    pub fn regret(&self, config: ConfigIndex) -> f64 {
        self.mean_test[config.0] - self.optimum
    }

    /// Regret reported before any incumbent exists: that of the worst cell.
    pub fn initial_regret(&self) -> f64 {
        self.worst - self.optimum
    }

    pub fn optimum(&self) -> f64 {
        self.optimum
    }

    pub fn mean_test(&self) -> &[f64] {
        &self.mean_test
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub config: ConfigIndex,
    pub budget_epochs: usize,
    pub valid_mse: f64,
    pub runtime_charged_seconds: f64,
    pub cumulative_seconds: f64,
    pub incumbent: Option<ConfigIndex>,
    /// Infinite until an incumbent exists.
    pub incumbent_valid: f64,
    pub test_regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "message")]
pub enum StopReason {
    MaxEvals,
    MaxSeconds,
    Exhausted(String),
    Error(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub strategy: String,
    pub seed: u64,
    pub initial_regret: f64,
    pub events: Vec<Event>,
    pub stop: StopReason,
}

impl RunTrace {
    /// Regret of the incumbent held at simulated time `t`.
    pub fn regret_at(&self, t: f64) -> f64 {
        let n = self.events.partition_point(|e| e.cumulative_seconds <= t);
        if n == 0 {
            self.initial_regret
        } else {
            self.events[n - 1].test_regret
        }
    }

    pub fn final_regret(&self) -> f64 {
        self.events.last().map_or(self.initial_regret, |e| e.test_regret)
    }

    pub fn total_seconds(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.cumulative_seconds)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub stop: StopRule,
    pub incumbent: IncumbentMode,
}

/// Runs `optimizer` until the stop rule fires, it is exhausted, or it fails.
/// Table draws come from `query_rng`; only stored runtimes advance the clock.
pub fn run_with<R: Rng + ?Sized>(
    optimizer: &mut dyn Optimizer,
    bench: &Benchmark<'_>,
    opts: &RunOptions,
    seed: u64,
    query_rng: &mut R,
) -> Result<RunTrace> {
    opts.stop.check()?;
    let table = bench.table;
    let max_epochs = table.max_epochs();
    let mut trace = RunTrace {
        strategy: optimizer.name().to_string(),
        seed,
        initial_regret: bench.initial_regret(),
        events: Vec::new(),
        stop: StopReason::MaxEvals,
    };
    let mut clock = 0.0;
    let mut counted = 0;
    let mut incumbent: Option<(ConfigIndex, f64)> = None;
    loop {
        if opts.stop.max_evals.is_some_and(|m| counted >= m) {
            trace.stop = StopReason::MaxEvals;
            break;
        }
        if opts.stop.max_seconds.is_some_and(|m| clock >= m) {
            trace.stop = StopReason::MaxSeconds;
            break;
        }
        let suggestion = match optimizer.suggest() {
            Ok(s) => s,
            Err(OptimizerError::Exhausted(msg)) => {
                trace.stop = StopReason::Exhausted(msg);
                break;
            }
            Err(e) => {
                trace.stop = StopReason::Error(e.to_string());
                break;
            }
        };
        let q = match table.query(suggestion.config, suggestion.budget_epochs, query_rng) {
            Ok(q) => q,
            Err(e) => {
                trace.stop = StopReason::Error(e.to_string());
                break;
            }
        };
        clock += q.runtime_charged_seconds;
        let full = suggestion.budget_epochs == max_epochs;
        if full || !opts.stop.count_full_budget_only {
            counted += 1;
        }
        let eligible = full || opts.incumbent == IncumbentMode::AnyBudget;
        if eligible && incumbent.is_none_or(|(_, v)| q.valid_mse < v) {
            incumbent = Some((suggestion.config, q.valid_mse));
        }
        trace.events.push(Event {
            config: suggestion.config,
            budget_epochs: suggestion.budget_epochs,
            valid_mse: q.valid_mse,
            runtime_charged_seconds: q.runtime_charged_seconds,
            cumulative_seconds: clock,
            incumbent: incumbent.map(|i| i.0),
            incumbent_valid: incumbent.map_or(f64::INFINITY, |i| i.1),
            test_regret: incumbent.map_or(bench.initial_regret(), |i| bench.regret(i.0)),
        });
        let obs = Observation {
            config: suggestion.config,
            budget_epochs: suggestion.budget_epochs,
            valid_mse: q.valid_mse,
            runtime_charged_seconds: q.runtime_charged_seconds,
        };
        if let Err(e) = optimizer.observe(&obs) {
            trace.stop = StopReason::Error(e.to_string());
            break;
        }
    }
    Ok(trace)
}

/// Builds `strategy` and runs it. The optimizer and the table draws use
/// separate streams derived from `seed`.
pub fn run_once(
    strategy: Strategy,
    bench: &Benchmark<'_>,
    settings: &Settings,
    opts: &RunOptions,
    seed: u64,
) -> Result<RunTrace> {
    let table = bench.table;
    let mut optimizer = build(
        strategy,
        table.space(),
        table.max_epochs(),
        derive_seed(seed, "optimizer", &[]),
        settings,
    )?;
    let mut query_rng = rng_from_seed(derive_seed(seed, "query", &[]));
    run_with(optimizer.as_mut(), bench, opts, seed, &mut query_rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tests::tiny_table;
    use tabbench_opt::Suggestion;

    /// Replays a fixed list of suggestions, then fails.
    struct Script(Vec<Suggestion>);

    impl Optimizer for Script {
        fn name(&self) -> &'static str {
            "script"
        }

        fn suggest(&mut self) -> tabbench_opt::Result<Suggestion> {
            if self.0.is_empty() {
                return Err(OptimizerError::Protocol("script ended".into()));
            }
            Ok(self.0.remove(0))
        }

        fn observe(&mut self, _: &Observation) -> tabbench_opt::Result<()> {
            Ok(())
        }
    }

    fn s(c: usize, b: usize) -> Suggestion {
        Suggestion {
            config: ConfigIndex(c),
            budget_epochs: b,
        }
    }

    #[test]
    fn optimum_first_gives_zero_regret() {
        let table = tiny_table();
        let bench = Benchmark::new(&table);
        let mut opt = Script(vec![s(5, 10), s(0, 10)]);
        let mut rng = rng_from_seed(1);
        let trace = run_with(&mut opt, &bench, &RunOptions::default(), 0, &mut rng).unwrap();
        assert_eq!(trace.events[0].test_regret, 0.0);
        assert_eq!(trace.events[1].test_regret, 0.0);
        // the script error ends the run and keeps both events
        assert!(matches!(trace.stop, StopReason::Error(_)));
        assert_eq!(trace.events.len(), 2);
    }

    #[test]
    fn incumbent_modes_differ_on_partial_budgets() {
        let table = tiny_table();
        let bench = Benchmark::new(&table);
        let script = || Script(vec![s(5, 2), s(1, 10), s(4, 10)]);
        let mut rng = rng_from_seed(1);
        let any = run_with(&mut script(), &bench, &RunOptions::default(), 0, &mut rng).unwrap();
        assert_eq!(any.events[0].incumbent, Some(ConfigIndex(5)));
        assert_eq!(any.events[2].incumbent, Some(ConfigIndex(5)));
        let opts = RunOptions {
            incumbent: IncumbentMode::MaxBudget,
            ..RunOptions::default()
        };
        let max = run_with(&mut script(), &bench, &opts, 0, &mut rng).unwrap();
        assert_eq!(max.events[0].incumbent, None);
        assert_eq!(max.events[0].test_regret, bench.initial_regret());
        assert_eq!(max.events[0].incumbent_valid, f64::INFINITY);
        assert_eq!(max.events[1].incumbent, Some(ConfigIndex(1)));
        assert_eq!(max.events[2].incumbent, Some(ConfigIndex(4)));
    }

    #[test]
    fn clock_is_left_to_right_sum_of_charges() {
        let table = tiny_table();
        let bench = Benchmark::new(&table);
        let trace = run_once(Strategy::Hb, &bench, &Settings::default(), &RunOptions {
            stop: StopRule::evals(40),
            ..RunOptions::default()
        }, 3)
        .unwrap_or_else(|e| panic!("{e}"));
        let mut sum = 0.0;
        for e in &trace.events {
            sum += e.runtime_charged_seconds;
            assert_eq!(e.cumulative_seconds.to_bits(), sum.to_bits());
        }
    }

    #[test]
    fn stop_rules() {
        let table = tiny_table();
        let bench = Benchmark::new(&table);
        let run = |stop| run_once(Strategy::Rs, &bench, &Settings::default(), &RunOptions { stop, ..RunOptions::default() }, 9).unwrap();
        let t = run(StopRule::evals(7));
        assert_eq!((t.events.len(), &t.stop), (7, &StopReason::MaxEvals));
        let t = run(StopRule {
            max_evals: None,
            max_seconds: Some(3.0),
            count_full_budget_only: false,
        });
        assert_eq!(t.stop, StopReason::MaxSeconds);
        let n = t.events.len();
        assert!(t.events[n - 1].cumulative_seconds >= 3.0 && t.events[n - 2].cumulative_seconds < 3.0);
        assert!(matches!(
            run_once(Strategy::Rs, &bench, &Settings::default(), &RunOptions {
                stop: StopRule { max_evals: None, max_seconds: None, count_full_budget_only: false },
                ..RunOptions::default()
            }, 1),
            Err(HarnessError::Invalid(_))
        ));
    }

    #[test]
    fn full_budget_counting_for_hyperband() {
        let table = tiny_table();
        let bench = Benchmark::new(&table);
        let opts = RunOptions {
            stop: StopRule {
                max_evals: Some(5),
                max_seconds: None,
                count_full_budget_only: true,
            },
            ..RunOptions::default()
        };
        let settings = Settings {
            hb: tabbench_opt::HbSettings {
                min_budget: 1,
                ..Default::default()
            },
            ..Settings::default()
        };
        let t = run_once(Strategy::Hb, &bench, &settings, &opts, 2).unwrap();
        let full = t.events.iter().filter(|e| e.budget_epochs == 10).count();
        assert_eq!(full, 5);
        assert!(t.events.len() > 5);
    }
}
