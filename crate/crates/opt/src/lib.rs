//! Hyperparameter optimizers over a discrete grid.
//!
//! Every strategy implements [`Optimizer`]: the caller alternates
//! [`Optimizer::suggest`] and [`Optimizer::observe`] for the returned
//! suggestion. All randomness comes from the seed passed to [`build`], so a
//! strategy replays identically given the same seed and observations.

mod error;
pub mod forest;
pub mod hyperband;
pub mod kde;
pub mod random_search;
pub mod re;
pub mod rfbo;
pub mod rl;
mod settings;
pub mod tpe;

use tabbench_core::{ConfigIndex, ConfigSpace};

pub use error::{OptimizerError, Result};
pub use hyperband::{hb_schedule, Hyperband, Rung, Schedule};
pub use random_search::RandomSearch;
pub use re::RegularizedEvolution;
pub use rfbo::RfBo;
pub use rl::Reinforce;
pub use settings::{BohbSettings, HbSettings, ReSettings, RfBoSettings, RlSettings, Settings, TpeSettings};
pub use tpe::Tpe;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Suggestion {
    pub config: ConfigIndex,
    pub budget_epochs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub config: ConfigIndex,
    pub budget_epochs: usize,
    pub valid_mse: f64,
    pub runtime_charged_seconds: f64,
}

pub trait Optimizer: Send {
    fn name(&self) -> &'static str;

    /// Next point to evaluate. [`OptimizerError::Exhausted`] means the
    /// strategy has nothing left to propose.
    fn suggest(&mut self) -> Result<Suggestion>;

    fn observe(&mut self, obs: &Observation) -> Result<()>;

    /// Whether suggestions may use budgets below the maximum.
    fn is_multi_fidelity(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Rs,
    Tpe,
    Bohb,
    RfBo,
    Re,
    Hb,
    Rl,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Rs,
        Strategy::Tpe,
        Strategy::Bohb,
        Strategy::RfBo,
        Strategy::Re,
        Strategy::Hb,
        Strategy::Rl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Rs => "rs",
            Strategy::Tpe => "tpe",
            Strategy::Bohb => "bohb",
            Strategy::RfBo => "rfbo",
            Strategy::Re => "re",
            Strategy::Hb => "hb",
            Strategy::Rl => "rl",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
                format!("unknown strategy `{s}` (available: {})", names.join(", "))
            })
    }
}

/// Instantiates `strategy` for `space`, with `max_epochs` as the full budget.
pub fn build(
    strategy: Strategy,
    space: &ConfigSpace,
    max_epochs: usize,
    seed: u64,
    settings: &Settings,
) -> Result<Box<dyn Optimizer>> {
    Ok(match strategy {
        Strategy::Rs => Box::new(RandomSearch::new(space, max_epochs, seed)),
        Strategy::Tpe => Box::new(Tpe::new(space, max_epochs, seed, settings.tpe.clone())?),
        Strategy::Bohb => Box::new(Hyperband::bohb(space, max_epochs, seed, settings.hb.clone(), settings.bohb.clone())?),
        Strategy::RfBo => Box::new(RfBo::new(space, max_epochs, seed, settings.rfbo.clone())?),
        Strategy::Re => Box::new(RegularizedEvolution::new(space, max_epochs, seed, settings.re.clone())?),
        Strategy::Hb => Box::new(Hyperband::new(space, max_epochs, seed, settings.hb.clone())?),
        Strategy::Rl => Box::new(Reinforce::new(space, max_epochs, seed, settings.rl.clone())?),
    })
}

/// Uniform draw over the grid.
pub(crate) fn random_config<R: rand::Rng + ?Sized>(space: &ConfigSpace, rng: &mut R) -> ConfigIndex {
    ConfigIndex(rng.random_range(0..space.cardinality()))
}
