//! Tree-structured Parzen estimator with independent per-parameter kernels.

use tabbench_core::{rng_from_seed, BenchRng, ConfigSpace};

use crate::kde::{Dim, UnivariateKde};
use crate::{random_config, Observation, Optimizer, OptimizerError, Result, Suggestion, TpeSettings};

/// Points needed on each side of the split before the model is used.
const MIN_PER_SIDE: usize = 2;

pub struct Tpe {
    space: ConfigSpace,
    dims: Vec<Dim>,
    max_epochs: usize,
    settings: TpeSettings,
    history: Vec<(Vec<usize>, f64)>,
    rng: BenchRng,
}

impl Tpe {
    pub fn new(space: &ConfigSpace, max_epochs: usize, seed: u64, settings: TpeSettings) -> Result<Self> {
        if !(settings.gamma > 0.0 && settings.gamma < 1.0) || settings.n_candidates == 0 || !(settings.prior_weight >= 0.0) {
            return Err(OptimizerError::Invalid(
                "gamma must lie in (0, 1), candidates be positive and the prior weight nonnegative".into(),
            ));
        }
        Ok(Tpe {
            space: space.clone(),
            dims: Dim::of_space(space),
            max_epochs,
            settings,
            history: Vec::new(),
            rng: rng_from_seed(seed),
        })
    }

    /// Good and bad densities, or `None` during startup or while either side
    /// is too small.
    pub fn densities(&self) -> Option<(UnivariateKde, UnivariateKde)> {
        let n = self.history.len();
        // the good side grows with the square root of the history, as in Hyperopt
        let n_good = ((self.settings.gamma * (n as f64).sqrt()).ceil() as usize).min(self.settings.max_good);
        if n < self.settings.n_startup || n_good < MIN_PER_SIDE || n - n_good < MIN_PER_SIDE {
            return None;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.history[a].1.total_cmp(&self.history[b].1).then(a.cmp(&b)));
        let pick = |ids: &[usize]| ids.iter().map(|&i| self.history[i].0.clone()).collect::<Vec<_>>();
        let floor = self.settings.min_bandwidth;
        let w = self.settings.prior_weight;
        Some((
            UnivariateKde::fit(&self.dims, &pick(&order[..n_good]), floor).with_uniform_prior(w, n_good),
            UnivariateKde::fit(&self.dims, &pick(&order[n_good..]), floor).with_uniform_prior(w, n - n_good),
        ))
    }
}

impl Optimizer for Tpe {
    fn name(&self) -> &'static str {
        "tpe"
    }

    fn suggest(&mut self) -> Result<Suggestion> {
        let config = match self.densities() {
            None => random_config(&self.space, &mut self.rng),
            Some((l, g)) => {
                let mut best: Option<(Vec<usize>, f64)> = None;
                for _ in 0..self.settings.n_candidates {
                    let x = l.sample(&mut self.rng);
                    let score = l.density(&x) / g.density(&x).max(f64::MIN_POSITIVE);
                    if best.as_ref().is_none_or(|b| score > b.1) {
                        best = Some((x, score));
                    }
                }
                self.space.encode(&best.expect("at least one candidate").0)?
            }
        };
        Ok(Suggestion {
            config,
            budget_epochs: self.max_epochs,
        })
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        self.history.push((self.space.decode(obs.config)?, obs.valid_mse));
        Ok(())
    }
}
