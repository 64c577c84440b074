//! Random-forest Bayesian optimization with expected improvement.

use std::collections::HashMap;

use tabbench_core::{rng_from_seed, BenchRng, ConfigIndex, ConfigSpace};

use crate::forest::Forest;
use crate::{random_config, Observation, Optimizer, OptimizerError, Result, RfBoSettings, Suggestion};

/// Expected improvement below `best` for a Gaussian prediction.
pub fn expected_improvement(mean: f64, var: f64, best: f64) -> f64 {
    let sd = var.max(0.0).sqrt();
    if sd == 0.0 {
        return (best - mean).max(0.0);
    }
    let z = (best - mean) / sd;
    let cdf = 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    ((best - mean) * cdf + sd * pdf).max(0.0)
}

/// Hill climbing over one-flip neighborhoods: moves to the best neighbor
/// while that strictly improves `acq`. Returns the visited path, start first.
pub fn local_search(space: &ConfigSpace, start: ConfigIndex, mut acq: impl FnMut(ConfigIndex) -> f64) -> Vec<(ConfigIndex, f64)> {
    let mut path = vec![(start, acq(start))];
    loop {
        let (here, value) = *path.last().expect("nonempty");
        let mut best = (here, value);
        for n in space.neighbors(here).expect("index from the space") {
            let a = acq(n);
            if a > best.1 {
                best = (n, a);
            }
        }
        if best.0 == here {
            return path;
        }
        path.push(best);
    }
}

pub struct RfBo {
    space: ConfigSpace,
    cards: Vec<usize>,
    max_epochs: usize,
    settings: RfBoSettings,
    x: Vec<Vec<usize>>,
    y: Vec<f64>,
    /// Evaluations and summed errors per config.
    evals: HashMap<ConfigIndex, (usize, f64)>,
    n_suggestions: usize,
    rng: BenchRng,
}

impl RfBo {
    pub fn new(space: &ConfigSpace, max_epochs: usize, seed: u64, settings: RfBoSettings) -> Result<Self> {
        if settings.n_trees == 0 || settings.max_evals_per_config == 0 || settings.random_every == 0 {
            return Err(OptimizerError::Invalid(
                "trees, evaluations per config and random interval must be positive".into(),
            ));
        }
        Ok(RfBo {
            space: space.clone(),
            cards: space.cardinalities(),
            max_epochs,
            settings,
            x: Vec::new(),
            y: Vec::new(),
            evals: HashMap::new(),
            n_suggestions: 0,
            rng: rng_from_seed(seed),
        })
    }

    fn exhausted(&self, c: ConfigIndex) -> bool {
        self.evals.get(&c).is_some_and(|e| e.0 >= self.settings.max_evals_per_config)
    }

    fn random_allowed(&mut self) -> Result<ConfigIndex> {
        let full = self.evals.values().filter(|e| e.0 >= self.settings.max_evals_per_config).count();
        if full >= self.space.cardinality() {
            return Err(OptimizerError::Exhausted("every config reached its evaluation limit".into()));
        }
        loop {
            let c = random_config(&self.space, &mut self.rng);
            if !self.exhausted(c) {
                return Ok(c);
            }
        }
    }

    fn model_suggestion(&mut self) -> Result<Option<ConfigIndex>> {
        let max_features = self.space.len().div_ceil(2);
        let forest = Forest::fit(&self.x, &self.y, &self.cards, self.settings.n_trees, max_features, &mut self.rng);
        let best = self
            .evals
            .values()
            .map(|&(n, s)| s / n as f64)
            .fold(f64::INFINITY, f64::min);
        let mut cache: HashMap<ConfigIndex, f64> = HashMap::new();
        let mut buf = vec![0; self.space.len()];
        let mut overall: Option<(ConfigIndex, f64)> = None;
        for _ in 0..self.settings.n_local_starts {
            let start = random_config(&self.space, &mut self.rng);
            let path = local_search(&self.space, start, |c| {
                if self.exhausted(c) {
                    return f64::NEG_INFINITY;
                }
                *cache.entry(c).or_insert_with(|| {
                    self.space.decode_into(c, &mut buf).expect("valid index");
                    let (m, v) = forest.predict(&buf);
                    expected_improvement(m, v, best)
                })
            });
            let end = *path.last().expect("nonempty");
            if overall.is_none_or(|o| end.1 > o.1) {
                overall = Some(end);
            }
        }
        Ok(overall.filter(|o| o.1 > 0.0).map(|o| o.0))
    }
}

impl Optimizer for RfBo {
    fn name(&self) -> &'static str {
        "rfbo"
    }

    fn suggest(&mut self) -> Result<Suggestion> {
        self.n_suggestions += 1;
        let interleaved = self.n_suggestions % self.settings.random_every == 0;
        let config = if self.y.len() < 2 || interleaved {
            self.random_allowed()?
        } else {
            match self.model_suggestion()? {
                Some(c) => c,
                None => self.random_allowed()?,
            }
        };
        Ok(Suggestion {
            config,
            budget_epochs: self.max_epochs,
        })
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        self.x.push(self.space.decode(obs.config)?);
        self.y.push(obs.valid_mse);
        let e = self.evals.entry(obs.config).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += obs.valid_mse;
        Ok(())
    }
}
