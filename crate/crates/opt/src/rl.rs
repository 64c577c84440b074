//! REINFORCE over independent categorical distributions, one per parameter.

use rand::Rng;
use tabbench_core::{rng_from_seed, BenchRng, ConfigSpace};

use crate::{Observation, Optimizer, OptimizerError, Result, RlSettings, Suggestion};

pub struct Reinforce {
    space: ConfigSpace,
    max_epochs: usize,
    settings: RlSettings,
    logits: Vec<Vec<f64>>,
    baseline: Option<f64>,
    rng: BenchRng,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Reinforce {
    pub fn new(space: &ConfigSpace, max_epochs: usize, seed: u64, settings: RlSettings) -> Result<Self> {
        if !(settings.learning_rate > 0.0) || !(0.0..=1.0).contains(&settings.baseline_momentum) {
            return Err(OptimizerError::Invalid(
                "learning rate must be positive and momentum in [0, 1]".into(),
            ));
        }
        Ok(Reinforce {
            space: space.clone(),
            max_epochs,
            settings,
            logits: space.params().iter().map(|p| vec![0.0; p.cardinality()]).collect(),
            baseline: None,
            rng: rng_from_seed(seed),
        })
    }

    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.logits.iter().map(|l| softmax(l)).collect()
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn baseline(&self) -> Option<f64> {
        self.baseline
    }

    pub fn sample_positions(&mut self) -> Vec<usize> {
        self.probabilities()
            .iter()
            .map(|p| {
                let u: f64 = self.rng.random();
                let mut acc = 0.0;
                for (i, w) in p.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return i;
                    }
                }
                p.len() - 1
            })
            .collect()
    }

    /// One policy-gradient step for the sampled `positions` and `reward`.
    /// The moving-average baseline starts at the first reward and is updated
    /// before the advantage is taken.
    pub fn update(&mut self, positions: &[usize], reward: f64) {
        let m = self.settings.baseline_momentum;
        let b = match self.baseline {
            None => reward,
            Some(b) => m * b + (1.0 - m) * reward,
        };
        self.baseline = Some(b);
        let step = self.settings.learning_rate * (reward - b);
        if step == 0.0 {
            return;
        }
        for (logits, &chosen) in self.logits.iter_mut().zip(positions) {
            let p = softmax(logits);
            // gradient of log softmax: onehot(chosen) - p
            for (i, l) in logits.iter_mut().enumerate() {
                let onehot = if i == chosen { 1.0 } else { 0.0 };
                *l += step * (onehot - p[i]);
            }
        }
    }
}

impl Optimizer for Reinforce {
    fn name(&self) -> &'static str {
        "rl"
    }

    fn suggest(&mut self) -> Result<Suggestion> {
        let positions = self.sample_positions();
        Ok(Suggestion {
            config: self.space.encode(&positions)?,
            budget_epochs: self.max_epochs,
        })
    }

    /// Reward is the negated validation error.
    fn observe(&mut self, obs: &Observation) -> Result<()> {
        let positions = self.space.decode(obs.config)?;
        self.update(&positions, -obs.valid_mse);
        Ok(())
    }
}
