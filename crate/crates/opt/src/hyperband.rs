//! Hyperband and its model-based variant.
//!
//! Brackets cycle from the most aggressive (many configs, small budget) to
//! plain full-budget evaluation. Inside a bracket, successive halving keeps
//! the `floor(n / eta)` configs with the lowest observed validation error
//! (ties to the lower index) for the next, larger budget. With a model, new
//! configs in a bracket's first rung come from the good/bad density ratio
//! fitted at the largest budget that has enough observations.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use tabbench_core::{rng_from_seed, BenchRng, ConfigIndex, ConfigSpace};

use crate::kde::{Dim, ProductKde};
use crate::{random_config, BohbSettings, HbSettings, Observation, Optimizer, OptimizerError, Result, Suggestion};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rung {
    pub n_configs: usize,
    pub budget: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    /// Geometrically spaced budgets, ascending.
    pub budgets: Vec<usize>,
    /// Most aggressive bracket first.
    pub brackets: Vec<Vec<Rung>>,
}

impl Schedule {
    /// Sum of `n * budget` over all rungs of one bracket.
    pub fn bracket_epochs(&self, bracket: usize) -> usize {
        self.brackets[bracket].iter().map(|r| r.n_configs * r.budget).sum()
    }
}

/// Budgets `round(b_max * eta^-(s_max - i))` for `i = 0..=s_max` with
/// `s_max = floor(log_eta(b_max / b_min))`; bracket `s` starts
/// `ceil((s_max + 1) / (s + 1)) * eta^s` configs at budget index `s_max - s`.
pub fn hb_schedule(eta: f64, b_min: usize, b_max: usize) -> Result<Schedule> {
    if !(eta > 1.0 && eta.is_finite()) {
        return Err(OptimizerError::Invalid(format!("eta must exceed 1, got {eta}")));
    }
    if b_min == 0 || b_min > b_max {
        return Err(OptimizerError::Invalid(format!(
            "need 0 < min budget <= max budget, got {b_min} and {b_max}"
        )));
    }
    // the epsilon keeps exact powers such as log_3(27) from rounding down
    let s_max = ((b_max as f64 / b_min as f64).ln() / eta.ln() + 1e-9).floor() as usize;
    let budgets: Vec<usize> = (0..=s_max)
        .map(|i| ((b_max as f64 * eta.powi(-((s_max - i) as i32))).round() as usize).max(1))
        .collect();
    let brackets = (0..=s_max)
        .rev()
        .map(|s| {
            let mut n = ((s_max + 1) as f64 / (s + 1) as f64).ceil() as usize * eta.powi(s as i32).round() as usize;
            (s_max - s..=s_max)
                .map(|i| {
                    let rung = Rung {
                        n_configs: n.max(1),
                        budget: budgets[i],
                    };
                    n = (n as f64 / eta).floor() as usize;
                    rung
                })
                .collect()
        })
        .collect();
    Ok(Schedule { budgets, brackets })
}

struct Bracket {
    rungs: Vec<Rung>,
    rung: usize,
    configs: Vec<ConfigIndex>,
    results: Vec<Option<f64>>,
    next: usize,
}

/// Good/bad densities per budget.
struct Model {
    settings: BohbSettings,
    dims: Vec<Dim>,
    history: BTreeMap<usize, Vec<(Vec<usize>, f64)>>,
    // (budget, number of points) the cached densities were fitted on
    cache: Option<((usize, usize), ProductKde, ProductKde)>,
}

impl Model {
    fn min_points(&self) -> usize {
        self.settings.min_points.unwrap_or(self.dims.len() + 2)
    }

    /// Splits observations at a budget into the best `max(min, floor(gamma n))`
    /// and the rest; `None` unless both sides hold `min` points.
    fn split(&self, points: &[(Vec<usize>, f64)]) -> Option<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
        let min = self.min_points();
        let n = points.len();
        let n_good = min.max((self.settings.gamma * n as f64).floor() as usize);
        if n < n_good + min {
            return None;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| points[a].1.total_cmp(&points[b].1).then(a.cmp(&b)));
        let good = order[..n_good].iter().map(|&i| points[i].0.clone()).collect();
        let bad = order[n_good..].iter().map(|&i| points[i].0.clone()).collect();
        Some((good, bad))
    }

    fn fitted(&mut self) -> Option<(&ProductKde, &ProductKde)> {
        let (&budget, points) = self
            .history
            .iter()
            .rev()
            .find(|(_, pts)| self.split(pts).is_some())?;
        let key = (budget, points.len());
        if self.cache.as_ref().map(|c| c.0) != Some(key) {
            let (good, bad) = self.split(points).expect("checked above");
            let floor = self.settings.min_bandwidth;
            let l = ProductKde::fit(&self.dims, good, floor);
            let g = ProductKde::fit(&self.dims, bad, floor);
            self.cache = Some((key, l, g));
        }
        self.cache.as_ref().map(|(_, l, g)| (l, g))
    }

    fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Vec<usize>> {
        let n_candidates = self.settings.n_candidates;
        let factor = self.settings.bandwidth_factor;
        let (l, g) = self.fitted()?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        for _ in 0..n_candidates {
            let x = l.sample(factor, rng);
            let score = l.density(&x) / g.density(&x).max(f64::MIN_POSITIVE);
            if best.as_ref().is_none_or(|b| score > b.1) {
                best = Some((x, score));
            }
        }
        best.map(|b| b.0)
    }
}

/// Hyperband; with a model attached it is BOHB.
pub struct Hyperband {
    space: ConfigSpace,
    schedule: Schedule,
    max_sh_iterations: usize,
    sh_iterations: usize,
    bracket: Option<Bracket>,
    pending: Option<Suggestion>,
    model: Option<Model>,
    random_fraction: f64,
    rng: BenchRng,
}

impl Hyperband {
    pub fn new(space: &ConfigSpace, max_epochs: usize, seed: u64, settings: HbSettings) -> Result<Self> {
        let b_max = settings.max_budget.unwrap_or(max_epochs);
        if b_max > max_epochs {
            return Err(OptimizerError::Invalid(format!(
                "max budget {b_max} exceeds the table's {max_epochs} epochs"
            )));
        }
        Ok(Hyperband {
            space: space.clone(),
            schedule: hb_schedule(settings.eta, settings.min_budget.min(b_max), b_max)?,
            max_sh_iterations: settings.max_sh_iterations,
            sh_iterations: 0,
            bracket: None,
            pending: None,
            model: None,
            random_fraction: 1.0,
            rng: rng_from_seed(seed),
        })
    }

    pub fn bohb(space: &ConfigSpace, max_epochs: usize, seed: u64, hb: HbSettings, settings: BohbSettings) -> Result<Self> {
        if !(0.0..1.0).contains(&settings.gamma) || settings.gamma <= 0.0 {
            return Err(OptimizerError::Invalid("gamma must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&settings.random_fraction) || settings.n_candidates == 0 {
            return Err(OptimizerError::Invalid(
                "random fraction must lie in [0, 1] and candidates be positive".into(),
            ));
        }
        let mut hb = Hyperband::new(space, max_epochs, seed, hb)?;
        hb.random_fraction = settings.random_fraction;
        hb.model = Some(Model {
            dims: Dim::of_space(space),
            settings,
            history: BTreeMap::new(),
            cache: None,
        });
        Ok(hb)
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Successive-halving runs started so far.
    pub fn sh_iterations(&self) -> usize {
        self.sh_iterations
    }

    fn new_config(&mut self, taken: &HashSet<ConfigIndex>) -> ConfigIndex {
        let use_model = self.model.is_some() && self.rng.random::<f64>() >= self.random_fraction;
        if use_model {
            let model = self.model.as_mut().expect("checked");
            if let Some(x) = model.propose(&mut self.rng) {
                let c = self.space.encode(&x).expect("kde samples lie on the grid");
                if !taken.contains(&c) {
                    return c;
                }
            }
        }
        // distinct within the rung while the grid allows it
        loop {
            let c = random_config(&self.space, &mut self.rng);
            if !taken.contains(&c) || taken.len() >= self.space.cardinality() {
                return c;
            }
        }
    }

    fn start_bracket(&mut self) -> Result<()> {
        if self.sh_iterations >= self.max_sh_iterations {
            return Err(OptimizerError::Exhausted(format!(
                "{} successive-halving iterations completed",
                self.max_sh_iterations
            )));
        }
        let which = self.sh_iterations % self.schedule.brackets.len();
        self.sh_iterations += 1;
        let rungs = self.schedule.brackets[which].clone();
        self.bracket = Some(Bracket {
            results: Vec::with_capacity(rungs[0].n_configs),
            configs: Vec::with_capacity(rungs[0].n_configs),
            rungs,
            rung: 0,
            next: 0,
        });
        Ok(())
    }

    /// Moves to the next rung (or ends the bracket) once every config of the
    /// current rung has a result.
    fn advance(&mut self) {
        let Some(b) = self.bracket.as_mut() else { return };
        if b.next < b.rungs[b.rung].n_configs || b.results.iter().any(Option::is_none) {
            return;
        }
        if b.rung + 1 == b.rungs.len() {
            self.bracket = None;
            return;
        }
        let keep = b.rungs[b.rung + 1].n_configs;
        let mut order: Vec<usize> = (0..b.configs.len()).collect();
        order.sort_by(|&x, &y| {
            let (vx, vy) = (b.results[x].expect("complete"), b.results[y].expect("complete"));
            vx.total_cmp(&vy).then(b.configs[x].cmp(&b.configs[y]))
        });
        b.configs = order[..keep.min(order.len())].iter().map(|&i| b.configs[i]).collect();
        b.results = vec![None; b.configs.len()];
        b.rung += 1;
        b.next = 0;
        // a rung can only shrink below its nominal size on tiny grids
        b.rungs[b.rung].n_configs = b.configs.len();
    }
}

impl Optimizer for Hyperband {
    fn name(&self) -> &'static str {
        if self.model.is_some() {
            "bohb"
        } else {
            "hb"
        }
    }

    fn suggest(&mut self) -> Result<Suggestion> {
        if let Some(p) = self.pending {
            return Err(OptimizerError::Protocol(format!(
                "suggestion for config {} is still unobserved",
                p.config.0
            )));
        }
        if self.bracket.is_none() {
            self.start_bracket()?;
        }
        let (rung, next, n_configs, have) = {
            let b = self.bracket.as_ref().expect("started");
            (b.rung, b.next, b.rungs[b.rung].n_configs, b.configs.len())
        };
        debug_assert!(next < n_configs);
        if rung == 0 && next == have {
            let taken: HashSet<ConfigIndex> = self.bracket.as_ref().expect("started").configs.iter().copied().collect();
            let c = self.new_config(&taken);
            let b = self.bracket.as_mut().expect("started");
            b.configs.push(c);
            b.results.push(None);
        }
        let b = self.bracket.as_mut().expect("started");
        let s = Suggestion {
            config: b.configs[b.next],
            budget_epochs: b.rungs[b.rung].budget,
        };
        b.next += 1;
        self.pending = Some(s);
        Ok(s)
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        match self.pending {
            Some(p) if p.config == obs.config && p.budget_epochs == obs.budget_epochs => {}
            _ => {
                return Err(OptimizerError::Protocol(format!(
                    "config {} at {} epochs was not the pending suggestion",
                    obs.config.0, obs.budget_epochs
                )))
            }
        }
        self.pending = None;
        let b = self.bracket.as_mut().expect("pending implies a bracket");
        b.results[b.next - 1] = Some(obs.valid_mse);
        if let Some(model) = self.model.as_mut() {
            let x = self.space.decode(obs.config)?;
            model.history.entry(obs.budget_epochs).or_default().push((x, obs.valid_mse));
        }
        self.advance();
        Ok(())
    }

    fn is_multi_fidelity(&self) -> bool {
        true
    }
}
