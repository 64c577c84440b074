//! Regularized (aging) evolution.

use std::collections::VecDeque;

use rand::Rng;
use tabbench_core::{rng_from_seed, BenchRng, ConfigIndex, ConfigSpace};

use crate::{random_config, Observation, Optimizer, OptimizerError, ReSettings, Result, Suggestion};

pub struct RegularizedEvolution {
    space: ConfigSpace,
    max_epochs: usize,
    settings: ReSettings,
    population: VecDeque<(ConfigIndex, f64)>,
    n_suggestions: usize,
    rng: BenchRng,
}

impl RegularizedEvolution {
    pub fn new(space: &ConfigSpace, max_epochs: usize, seed: u64, settings: ReSettings) -> Result<Self> {
        if settings.population_size == 0 || settings.tournament_size == 0 {
            return Err(OptimizerError::Invalid("population and tournament sizes must be positive".into()));
        }
        Ok(RegularizedEvolution {
            space: space.clone(),
            max_epochs,
            settings,
            population: VecDeque::with_capacity(space.cardinality().min(1024)),
            n_suggestions: 0,
            rng: rng_from_seed(seed),
        })
    }

    pub fn population(&self) -> &VecDeque<(ConfigIndex, f64)> {
        &self.population
    }

    /// Changes one uniformly chosen parameter (among those with more than one
    /// value) to a uniformly chosen different value.
    pub fn mutate<R: Rng + ?Sized>(space: &ConfigSpace, parent: ConfigIndex, rng: &mut R) -> ConfigIndex {
        let mutable: Vec<usize> = (0..space.len()).filter(|&j| space.params()[j].cardinality() > 1).collect();
        if mutable.is_empty() {
            return parent;
        }
        let j = mutable[rng.random_range(0..mutable.len())];
        let current = space.digit(parent, j);
        let mut v = rng.random_range(0..space.params()[j].cardinality() - 1);
        if v >= current {
            v += 1;
        }
        space.with_digit(parent, j, v)
    }
}

impl Optimizer for RegularizedEvolution {
    fn name(&self) -> &'static str {
        "re"
    }

    fn suggest(&mut self) -> Result<Suggestion> {
        self.n_suggestions += 1;
        let config = if self.n_suggestions <= self.settings.population_size || self.population.is_empty() {
            random_config(&self.space, &mut self.rng)
        } else {
            // tournament with replacement; the first of equal errors wins
            let mut parent = self.population[self.rng.random_range(0..self.population.len())];
            for _ in 1..self.settings.tournament_size {
                let m = self.population[self.rng.random_range(0..self.population.len())];
                if m.1 < parent.1 {
                    parent = m;
                }
            }
            Self::mutate(&self.space, parent.0, &mut self.rng)
        };
        Ok(Suggestion {
            config,
            budget_epochs: self.max_epochs,
        })
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        self.population.push_back((obs.config, obs.valid_mse));
        if self.population.len() > self.settings.population_size {
            self.population.pop_front();
        }
        Ok(())
    }
}
