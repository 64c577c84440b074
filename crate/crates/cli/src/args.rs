//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tabbench_analysis::TopSelection;
use tabbench_core::Metric;
use tabbench_grid::{Delimiter, RuntimeMode};
use tabbench_harness::IncumbentMode;
use tabbench_opt::{Settings, Strategy};

#[derive(Parser, Debug)]
#[command(name = "tabbench", version, about = "Tabular benchmarks for hyperparameter optimization")]
#[command(args_override_self = true)]
pub struct Cli {
    /// TOML file with default flag values; `[section]` tables apply to the
    /// subcommand of that name (`[analyze.fanova]` for nested ones).
    #[arg(long, global = true, value_name = "FILE")]
    pub config_file: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the full grid on a dataset and write a table file.
    GenGrid(GenGridArgs),
    /// Write a synthetic table from a closed-form error surface.
    GenSynth(GenSynthArgs),
    /// Check a table file and print a summary.
    Validate(ValidateArgs),
    /// Draw evaluations of one config as an optimizer would.
    Query(QueryArgs),
    /// Dataset statistics and hyperparameter importance.
    #[command(subcommand)]
    Analyze(Analysis),
    /// One optimizer run.
    Run(RunArgs),
    /// Many seeded runs of several optimizers, written as a report bundle.
    Compare(CompareArgs),
    /// Render plots and a summary from a report bundle.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenGridArgs {
    /// Delimited dataset with a header row.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "auto")]
    pub delimiter: Delimiter,
    /// Space file: a table header (or a table). Defaults to the FC-Net space.
    #[arg(long, value_name = "FILE")]
    pub space: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub seeds: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Train/valid/test ratios.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.6, 0.2, 0.2])]
    pub split: Vec<f64>,
    /// `modeled` derives runtimes from the architecture so reruns are
    /// byte-identical; `measured` records wall-clock time.
    #[arg(long, default_value = "modeled")]
    pub runtime: RuntimeMode,
    /// Directory for per-config results; rerunning resumes from it.
    #[arg(long, value_name = "DIR")]
    pub checkpoint: Option<PathBuf>,
    /// Stop after training this many new configs (requires --checkpoint).
    #[arg(long, requires = "checkpoint")]
    pub max_new_configs: Option<usize>,
    #[arg(long)]
    pub dataset_name: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "TABBENCH_JOBS")]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Additive bowls per parameter with error-proportional noise.
    Separable,
    /// Independent uniform error per cell.
    Random,
}

#[derive(Args, Debug)]
pub struct GenSynthArgs {
    #[arg(long, value_name = "FILE")]
    pub space: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Separable)]
    pub preset: Preset,
    /// Seed-to-seed standard deviation as a fraction of the error.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 4)]
    pub seeds: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value = "synthetic")]
    pub dataset_name: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, value_name = "FILE")]
    pub table: PathBuf,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[arg(long, value_name = "FILE")]
    pub table: PathBuf,
    /// Config index, or `best` for the global optimum.
    #[arg(long)]
    pub config: String,
    /// Epochs; defaults to the table maximum.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct TableOut {
    #[arg(long, value_name = "FILE")]
    pub table: PathBuf,
    /// Directory for `<analysis>_<dataset>.csv` and `.svg`.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub no_plot: bool,
}

#[derive(Subcommand, Debug)]
pub enum Analysis {
    /// ECDFs of mean train/valid/test error, parameter counts or runtimes.
    Ecdf {
        #[command(flatten)]
        io: TableOut,
        #[arg(long, value_delimiter = ',', default_values_t = [Metric::Train, Metric::Valid, Metric::Test].map(MetricArg))]
        metrics: Vec<MetricArg>,
        /// Epoch for curve metrics; defaults to the table maximum.
        #[arg(long)]
        epoch: Option<usize>,
    },
    /// ECDFs of the seed-to-seed standard deviation at several epochs.
    Noise {
        #[command(flatten)]
        io: TableOut,
        /// Defaults to 1, 10, 50 and the table maximum (those that exist).
        #[arg(long, value_delimiter = ',')]
        epochs: Vec<usize>,
        #[arg(long, default_value = "valid")]
        metric: MetricArg,
    },
    /// Spearman correlation of each budget's ranking with the final one.
    RankCorr {
        #[command(flatten)]
        io: TableOut,
        /// Defaults to 10, 20, 50 and the table maximum (those that exist).
        #[arg(long, value_delimiter = ',')]
        budgets: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 0.2, 0.5, 1.0])]
        top: Vec<f64>,
        /// Error used to pick the top configs.
        #[arg(long, default_value = "test")]
        select: TopSelection,
    },
    /// Exact functional ANOVA over the grid.
    Fanova {
        #[command(flatten)]
        io: TableOut,
        #[arg(long, default_value = "test")]
        metric: MetricArg,
        #[arg(long)]
        budget: Option<usize>,
        /// Clamp errors above this quantile before decomposing.
        #[arg(long)]
        percentile: Option<f64>,
        #[arg(long, default_value_t = 2)]
        max_order: usize,
    },
    /// Every one-parameter change of a config.
    Neighbors {
        #[command(flatten)]
        io: TableOut,
        /// Config index, or `best`.
        #[arg(long, default_value = "best")]
        config: String,
    },
    /// Rank correlation of test errors between tables over the same space.
    CrossRank {
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        tables: Vec<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        top: f64,
        #[arg(long)]
        no_plot: bool,
    },
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Ecdf { .. } => "ecdf",
            Analysis::Noise { .. } => "noise",
            Analysis::RankCorr { .. } => "rank-corr",
            Analysis::Fanova { .. } => "fanova",
            Analysis::Neighbors { .. } => "neighbors",
            Analysis::CrossRank { .. } => "cross-rank",
        }
    }
}

/// `Metric` with a clap-friendly `Display`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricArg(pub Metric);

impl std::str::FromStr for MetricArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(MetricArg)
    }
}

impl std::fmt::Display for MetricArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self.0 {
            Metric::Train => "train",
            Metric::Valid => "valid",
            Metric::Test => "test",
            Metric::Runtime => "runtime",
            Metric::NParams => "n_params",
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct StopArgs {
    #[arg(long, default_value_t = 500)]
    pub max_evals: usize,
    /// Also stop once the simulated clock reaches this many seconds.
    #[arg(long)]
    pub max_seconds: Option<f64>,
    /// Ignore the evaluation limit (then --max-seconds is required).
    #[arg(long, requires = "max_seconds")]
    pub no_eval_limit: bool,
    /// Count only full-budget evaluations against --max-evals.
    #[arg(long)]
    pub count_full_budget_only: bool,
    /// Which observations can make a config the incumbent.
    #[arg(long, default_value = "any-budget")]
    pub incumbent: IncumbentMode,
}

/// Meta-parameters of the optimizers; unset flags keep the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct OptimizerArgs {
    #[arg(long)]
    pub hb_eta: Option<f64>,
    #[arg(long)]
    pub hb_min_budget: Option<usize>,
    #[arg(long)]
    pub hb_max_budget: Option<usize>,
    /// Successive-halving iterations before HB/BOHB stop.
    #[arg(long)]
    pub hb_iterations: Option<usize>,
    #[arg(long)]
    pub bohb_gamma: Option<f64>,
    #[arg(long)]
    pub bohb_candidates: Option<usize>,
    #[arg(long)]
    pub bohb_random_fraction: Option<f64>,
    #[arg(long)]
    pub bohb_bandwidth_factor: Option<f64>,
    #[arg(long)]
    pub bohb_min_bandwidth: Option<f64>,
    #[arg(long)]
    pub bohb_min_points: Option<usize>,
    #[arg(long)]
    pub tpe_gamma: Option<f64>,
    #[arg(long)]
    pub tpe_candidates: Option<usize>,
    #[arg(long)]
    pub tpe_min_bandwidth: Option<f64>,
    #[arg(long)]
    pub tpe_startup: Option<usize>,
    #[arg(long)]
    pub tpe_prior_weight: Option<f64>,
    #[arg(long)]
    pub tpe_max_good: Option<usize>,
    #[arg(long)]
    pub rfbo_trees: Option<usize>,
    #[arg(long)]
    pub rfbo_max_evals_per_config: Option<usize>,
    #[arg(long)]
    pub rfbo_random_every: Option<usize>,
    #[arg(long)]
    pub rfbo_local_starts: Option<usize>,
    #[arg(long)]
    pub re_population: Option<usize>,
    #[arg(long)]
    pub re_tournament: Option<usize>,
    #[arg(long)]
    pub rl_learning_rate: Option<f64>,
    #[arg(long)]
    pub rl_momentum: Option<f64>,
}

impl OptimizerArgs {
    pub fn settings(&self) -> Settings {
        let mut s = Settings::default();
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { s.$($field).+ = v; })*
            };
        }
        set! {
            hb_eta => hb.eta,
            hb_min_budget => hb.min_budget,
            hb_iterations => hb.max_sh_iterations,
            bohb_gamma => bohb.gamma,
            bohb_candidates => bohb.n_candidates,
            bohb_random_fraction => bohb.random_fraction,
            bohb_bandwidth_factor => bohb.bandwidth_factor,
            bohb_min_bandwidth => bohb.min_bandwidth,
            tpe_gamma => tpe.gamma,
            tpe_candidates => tpe.n_candidates,
            tpe_min_bandwidth => tpe.min_bandwidth,
            tpe_startup => tpe.n_startup,
            tpe_prior_weight => tpe.prior_weight,
            tpe_max_good => tpe.max_good,
            rfbo_trees => rfbo.n_trees,
            rfbo_max_evals_per_config => rfbo.max_evals_per_config,
            rfbo_random_every => rfbo.random_every,
            rfbo_local_starts => rfbo.n_local_starts,
            re_population => re.population_size,
            re_tournament => re.tournament_size,
            rl_learning_rate => rl.learning_rate,
            rl_momentum => rl.baseline_momentum,
        }
        if self.hb_max_budget.is_some() {
            s.hb.max_budget = self.hb_max_budget;
        }
        if self.bohb_min_points.is_some() {
            s.bohb.min_points = self.bohb_min_points;
        }
        s
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_name = "FILE")]
    pub table: PathBuf,
    #[arg(long)]
    pub strategy: Strategy,
    #[command(flatten)]
    pub stop: StopArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the trace as CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long, value_name = "FILE")]
    pub table: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = Strategy::ALL)]
    pub strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 500)]
    pub n_runs: usize,
    #[command(flatten)]
    pub stop: StopArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Simulated seconds at which final regrets are read; defaults to the
    /// end of each run.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "TABBENCH_JOBS")]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub no_plot: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory written by `compare`.
    #[arg(long, value_name = "DIR")]
    pub bundle: PathBuf,
    /// Defaults to the bundle directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}
