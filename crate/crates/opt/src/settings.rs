//! Meta-parameters of every strategy, with their defaults.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HbSettings {
    pub eta: f64,
    pub min_budget: usize,
    /// `None` uses the table's maximum epoch count.
    pub max_budget: Option<usize>,
    /// Number of successive-halving runs (brackets) before the optimizer
    /// reports exhaustion.
    pub max_sh_iterations: usize,
}

impl Default for HbSettings {
    fn default() -> Self {
        HbSettings {
            eta: 3.0,
            min_budget: 4,
            max_budget: None,
            max_sh_iterations: 125,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BohbSettings {
    /// Fraction of observations that form the good density.
    pub gamma: f64,
    pub n_candidates: usize,
    pub random_fraction: f64,
    pub bandwidth_factor: f64,
    pub min_bandwidth: f64,
    /// Points required on each side of the split; `None` is `d + 2`.
    pub min_points: Option<usize>,
}

impl Default for BohbSettings {
    fn default() -> Self {
        BohbSettings {
            gamma: 0.15,
            n_candidates: 64,
            random_fraction: 1.0 / 3.0,
            bandwidth_factor: 3.0,
            min_bandwidth: 0.3,
            min_points: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TpeSettings {
    pub gamma: f64,
    pub n_candidates: usize,
    pub min_bandwidth: f64,
    /// Uniform random suggestions before the densities are used.
    pub n_startup: usize,
    /// Weight, in observations, of the uniform component mixed into every
    /// marginal.
    pub prior_weight: f64,
    /// Cap on the size of the good side.
    pub max_good: usize,
}

impl Default for TpeSettings {
    fn default() -> Self {
        TpeSettings {
            gamma: 0.25,
            n_candidates: 24,
            min_bandwidth: 0.1,
            n_startup: 20,
            prior_weight: 1.0,
            max_good: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfBoSettings {
    pub n_trees: usize,
    pub max_evals_per_config: usize,
    /// Every `random_every`-th suggestion is uniform random.
    pub random_every: usize,
    pub n_local_starts: usize,
}

impl Default for RfBoSettings {
    fn default() -> Self {
        RfBoSettings {
            n_trees: 10,
            max_evals_per_config: 4,
            random_every: 3,
            n_local_starts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReSettings {
    pub population_size: usize,
    pub tournament_size: usize,
}

impl Default for ReSettings {
    fn default() -> Self {
        ReSettings {
            population_size: 100,
            tournament_size: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlSettings {
    pub learning_rate: f64,
    pub baseline_momentum: f64,
}

impl Default for RlSettings {
    fn default() -> Self {
        RlSettings {
            learning_rate: 0.1,
            baseline_momentum: 0.9,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub hb: HbSettings,
    pub bohb: BohbSettings,
    pub tpe: TpeSettings,
    pub rfbo: RfBoSettings,
    pub re: ReSettings,
    pub rl: RlSettings,
}
