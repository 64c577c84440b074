//! Synthetic tables with closed-form structure, used as oracles.
//!
//! For a cell with mean error `v` and noise scale `s`, epoch `e` of `T` gets
//!
//! ```text
//! valid[e] = max(0, v * (1 + (T - e) / T) + s * sqrt(T / e) * z)
//! ```
//!
//! with `z` standard normal per seed and epoch, so the seed-to-seed spread
//! shrinks with the budget while the noiseless ranking is budget independent.
//! The final test error is `v + s * z'` with an independent draw.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::arch::param_count;
use crate::space::{names, ConfigIndex, ConfigSpace, ParamKind};
use crate::table::{BenchTable, EvalEntry, SeedRecord};
use crate::{Error, Result};

/// Feature count assumed when deriving parameter counts for synthetic tables.
pub const SYNTH_FEATURES: usize = 9;
pub const RUNTIME_BASE_SECONDS: f64 = 20.0;
pub const RUNTIME_PER_PARAM_SECONDS: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub n_seeds: usize,
    pub max_epochs: usize,
    pub dataset_name: String,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            n_seeds: 4,
            max_epochs: 100,
            dataset_name: "synthetic".into(),
        }
    }
}

/// Trainable-parameter count implied by a cell. Uses the layer sizes when the
/// space carries `n_units_1`/`n_units_2`; otherwise a generic size measure.
pub fn synthetic_param_count(space: &ConfigSpace, positions: &[usize]) -> u64 {
    let units = |name| {
        space
            .position_of(name)
            .and_then(|i| space.params()[i].values[positions[i]].as_f64())
    };
    match (units(names::N_UNITS_1), units(names::N_UNITS_2)) {
        (Some(h1), Some(h2)) => param_count(SYNTH_FEATURES, h1 as usize, h2 as usize),
        _ => 1 + positions.iter().map(|&p| p as u64).sum::<u64>(),
    }
}

pub fn synthetic_runtime(n_params: u64) -> f64 {
    RUNTIME_BASE_SECONDS + RUNTIME_PER_PARAM_SECONDS * n_params as f64
}

pub fn gen_synthetic<V, N, R>(
    space: &ConfigSpace,
    value_fn: V,
    noise_fn: N,
    opts: &SynthOptions,
    rng: &mut R,
) -> Result<BenchTable>
where
    V: Fn(&[usize]) -> f64,
    N: Fn(&[usize]) -> f64,
    R: Rng + ?Sized,
{
    if opts.n_seeds == 0 || opts.max_epochs == 0 {
        return Err(Error::Integrity("n_seeds and max_epochs must be positive".into()));
    }
    let epochs = opts.max_epochs;
    let t = epochs as f64;
    let mut positions = vec![0; space.len()];
    let mut entries = Vec::with_capacity(space.cardinality());
    for index in 0..space.cardinality() {
        space.decode_into(ConfigIndex(index), &mut positions)?;
        let v = value_fn(&positions);
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::NonFinite { index, value: v });
        }
        let s = noise_fn(&positions);
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::NonFinite { index, value: s });
        }
        let n_params = synthetic_param_count(space, &positions);
        let runtime = synthetic_runtime(n_params);
        let records = (0..opts.n_seeds)
            .map(|seed| {
                let mut valid_curve = Vec::with_capacity(epochs);
                let mut train_curve = Vec::with_capacity(epochs);
                for e in 1..=epochs {
                    let e = e as f64;
                    let mean = v * (1.0 + (t - e) / t);
                    let spread = s * (t / e).sqrt();
                    let zv: f64 = rng.sample(StandardNormal);
                    let zt: f64 = rng.sample(StandardNormal);
                    valid_curve.push((mean + spread * zv).max(0.0));
                    train_curve.push((0.9 * mean + 0.5 * spread * zt).max(0.0));
                }
                let zt: f64 = rng.sample(StandardNormal);
                SeedRecord {
                    seed: seed as u64,
                    train_curve,
                    valid_curve,
                    final_test_mse: (v + s * zt).max(0.0),
                    runtime_seconds: runtime,
                    n_params,
                    diverged: false,
                }
            })
            .collect();
        entries.push(EvalEntry { records });
    }
    BenchTable::new(space.clone(), epochs, opts.dataset_name.clone(), entries)
}

/// Closed-form value/noise functions for common oracle tables.
pub mod presets {
    use super::*;

    /// Additive, separable error surface: each ordinal parameter contributes a
    /// quadratic bowl around one third of its range, each categorical
    /// parameter a penalty for any value but the first. Noise grows with the
    /// error (heteroscedastic).
    #[derive(Clone, Debug)]
    pub struct Separable {
        terms: Vec<Term>,
    }

    #[derive(Clone, Debug)]
    struct Term {
        weight: f64,
        kind: ParamKind,
        optimum: usize,
        span: f64,
    }

    pub const SEPARABLE_BASE: f64 = 0.2;

    impl Separable {
        pub fn new(space: &ConfigSpace) -> Self {
            let terms = space
                .params()
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let c = p.cardinality();
                    Term {
                        weight: 0.5 / (j as f64 + 1.0),
                        kind: p.kind,
                        optimum: c / 3,
                        span: (c.max(2) - 1) as f64,
                    }
                })
                .collect();
            Separable { terms }
        }

        pub fn value(&self, positions: &[usize]) -> f64 {
            SEPARABLE_BASE
                + self
                    .terms
                    .iter()
                    .zip(positions)
                    .map(|(t, &p)| match t.kind {
                        ParamKind::Ordinal => {
                            let d = (p as f64 - t.optimum as f64) / t.span;
                            t.weight * d * d
                        }
                        ParamKind::Categorical => {
                            if p == 0 {
                                0.0
                            } else {
                                t.weight
                            }
                        }
                    })
                    .sum::<f64>()
        }

        pub fn noise(&self, positions: &[usize]) -> f64 {
            0.01 * self.value(positions)
        }
    }

    /// Independent uniform values in `[lo, lo + 1)` per cell, fixed by `rng`.
    pub fn random_field<R: Rng + ?Sized>(cardinality: usize, lo: f64, rng: &mut R) -> Vec<f64> {
        (0..cardinality).map(|_| lo + rng.random::<f64>()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use crate::space::Hyperparameter;
    use crate::table::Metric;

    fn tiny_space() -> ConfigSpace {
        ConfigSpace::new(vec![
            Hyperparameter::ordinal("a", &[0.0, 1.0, 2.0]),
            Hyperparameter::categorical("b", &["x", "y", "z"]),
        ])
        .unwrap()
    }

    #[test]
    fn constant_noiseless_table_queries_one() {
        let mut rng = rng_from_seed(1);
        let t = gen_synthetic(&tiny_space(), |_| 1.0, |_| 0.0, &SynthOptions::default(), &mut rng).unwrap();
        for i in 0..9 {
            let q = t.query(ConfigIndex(i), 100, &mut rng).unwrap();
            assert_eq!(q.valid_mse, 1.0);
        }
    }

    #[test]
    fn noiseless_optimum_matches_value_argmin() {
        let space = tiny_space();
        let f = |p: &[usize]| ((p[0] as f64 - 1.0).powi(2) + (p[1] as f64)) * 0.5 + 0.1;
        let t = gen_synthetic(&space, f, |_| 0.0, &SynthOptions::default(), &mut rng_from_seed(2)).unwrap();
        let mut best = (0, f64::INFINITY);
        for i in 0..space.cardinality() {
            let v = f(&space.decode(ConfigIndex(i)).unwrap());
            if v < best.1 {
                best = (i, v);
            }
        }
        assert_eq!(t.global_optimum(), (ConfigIndex(best.0), best.1));
    }

    #[test]
    fn noise_shrinks_with_epochs() {
        let mut rng = rng_from_seed(4);
        let opts = SynthOptions {
            n_seeds: 4,
            max_epochs: 100,
            dataset_name: "n".into(),
        };
        let t = gen_synthetic(&tiny_space(), |_| 5.0, |_| 0.1, &opts, &mut rng).unwrap();
        let spread = |e: usize| {
            t.entries()
                .iter()
                .map(|en| {
                    let xs: Vec<f64> = en.records.iter().map(|r| r.valid_curve[e - 1]).collect();
                    let m = xs.iter().sum::<f64>() / 4.0;
                    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
        };
        assert!(spread(100) < spread(1));
        let m = t.mean_metric(ConfigIndex(0), Metric::Runtime, 1).unwrap();
        assert_eq!(m, synthetic_runtime(1));
    }

    #[test]
    fn rejects_non_finite_values() {
        let mut rng = rng_from_seed(1);
        let r = gen_synthetic(&tiny_space(), |p| if p[0] == 2 { f64::NAN } else { 1.0 }, |_| 0.0, &SynthOptions::default(), &mut rng);
        assert!(matches!(r, Err(Error::NonFinite { index: 6, .. })));
    }

    #[test]
    fn fcnet_runtime_follows_layer_sizes() {
        let space = ConfigSpace::fcnet();
        let small = synthetic_param_count(&space, &[0; 9]);
        let big = synthetic_param_count(&space, &[0, 0, 0, 0, 0, 5, 5, 0, 0]);
        assert_eq!(small, param_count(9, 16, 16));
        assert_eq!(big, 268_289);
        assert!(synthetic_runtime(big) > synthetic_runtime(small));
    }

    #[test]
    fn separable_preset_has_unique_optimum() {
        let space = ConfigSpace::fcnet();
        let sep = presets::Separable::new(&space);
        let opt: Vec<usize> = space
            .params()
            .iter()
            .map(|p| match p.kind {
                ParamKind::Ordinal => p.cardinality() / 3,
                ParamKind::Categorical => 0,
            })
            .collect();
        assert_eq!(sep.value(&opt), presets::SEPARABLE_BASE);
        for n in space.neighbors(space.encode(&opt).unwrap()).unwrap() {
            assert!(sep.value(&space.decode(n).unwrap()) > presets::SEPARABLE_BASE);
        }
    }
}
