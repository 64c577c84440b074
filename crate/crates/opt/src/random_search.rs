use tabbench_core::{rng_from_seed, BenchRng, ConfigSpace};

use crate::{random_config, Observation, Optimizer, Result, Suggestion};

/// Uniform sampling over the grid at the full budget.
pub struct RandomSearch {
    space: ConfigSpace,
    max_epochs: usize,
    rng: BenchRng,
}

impl RandomSearch {
    pub fn new(space: &ConfigSpace, max_epochs: usize, seed: u64) -> Self {
        RandomSearch {
            space: space.clone(),
            max_epochs,
            rng: rng_from_seed(seed),
        }
    }
}

impl Optimizer for RandomSearch {
    fn name(&self) -> &'static str {
        "rs"
    }

    fn suggest(&mut self) -> Result<Suggestion> {
        Ok(Suggestion {
            config: random_config(&self.space, &mut self.rng),
            budget_epochs: self.max_epochs,
        })
    }

    fn observe(&mut self, _obs: &Observation) -> Result<()> {
        Ok(())
    }
}
