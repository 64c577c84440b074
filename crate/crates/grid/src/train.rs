//! One training run of one configuration.

use std::f64::consts::PI;
use std::time::Instant;

use ndarray::Axis;
use rand::seq::SliceRandom;
use tabbench_core::space::names;
use tabbench_core::{param_count, rng_from_seed, ConfigSpace, SeedRecord};

pub use crate::mlp::Activation;
use crate::mlp::{Adam, DropoutMasks, Mlp};
use crate::{DatasetSplit, GridError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrSchedule {
    Cosine,
    Constant,
}

impl LrSchedule {
    /// Learning rate for zero-based `epoch` out of `total`.
    pub fn rate(self, init_lr: f64, epoch: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Cosine => init_lr * 0.5 * (1.0 + (PI * epoch as f64 / total as f64).cos()),
            LrSchedule::Constant => init_lr,
        }
    }
}

/// How `runtime_seconds` is filled in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RuntimeMode {
    /// Monotonic wall clock around the training loop.
    #[default]
    Measured,
    /// Deterministic cost model proportional to the arithmetic performed;
    /// used when outputs must be byte-reproducible.
    Modeled,
}

impl std::str::FromStr for RuntimeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "measured" => Ok(RuntimeMode::Measured),
            "modeled" => Ok(RuntimeMode::Modeled),
            other => Err(format!("unknown runtime mode `{other}` (measured, modeled)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSpec {
    pub layer1_size: usize,
    pub layer2_size: usize,
    pub act1: Activation,
    pub act2: Activation,
    pub dropout1: f64,
    pub dropout2: f64,
    pub batch_size: usize,
    pub init_lr: f64,
    pub lr_schedule: LrSchedule,
    pub max_epochs: usize,
    pub seed: u64,
}

impl TrainSpec {
    /// Reads a grid cell of a space whose parameter names follow
    /// [`tabbench_core::space::names`].
    pub fn from_config(space: &ConfigSpace, positions: &[usize], max_epochs: usize, seed: u64) -> Result<Self> {
        let value = |name: &str| {
            let i = space
                .position_of(name)
                .ok_or_else(|| GridError::Spec(format!("space has no parameter `{name}`")))?;
            Ok::<_, GridError>(&space.params()[i].values[positions[i]])
        };
        let num = |name: &str| {
            value(name)?
                .as_f64()
                .ok_or_else(|| GridError::Spec(format!("`{name}` must be numeric")))
        };
        let act = |name: &str| match value(name)?.as_str() {
            Some("relu") => Ok(Activation::Relu),
            Some("tanh") => Ok(Activation::Tanh),
            _ => Err(GridError::Spec(format!("`{name}` must be relu or tanh"))),
        };
        let lr_schedule = match value(names::LR_SCHEDULE)?.as_str() {
            Some("cosine") => LrSchedule::Cosine,
            Some("const") | Some("constant") | Some("fix") => LrSchedule::Constant,
            _ => return Err(GridError::Spec("`lr_schedule` must be cosine or const".into())),
        };
        let spec = TrainSpec {
            layer1_size: num(names::N_UNITS_1)? as usize,
            layer2_size: num(names::N_UNITS_2)? as usize,
            act1: act(names::ACTIVATION_1)?,
            act2: act(names::ACTIVATION_2)?,
            dropout1: num(names::DROPOUT_1)?,
            dropout2: num(names::DROPOUT_2)?,
            batch_size: num(names::BATCH_SIZE)? as usize,
            init_lr: num(names::INIT_LR)?,
            lr_schedule,
            max_epochs,
            seed,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(GridError::Spec(m.into()));
        if self.layer1_size == 0 || self.layer2_size == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return bad("layer sizes, batch size and epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout1) || !(0.0..1.0).contains(&self.dropout2) {
            return bad("dropout rates must lie in [0, 1)");
        }
        if !(self.init_lr > 0.0 && self.init_lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

/// Seconds charged per multiply-add under [`RuntimeMode::Modeled`].
const MODELED_SECONDS_PER_FLOP: f64 = 1e-9;
const MODELED_SECONDS_PER_BATCH: f64 = 2e-5;

fn modeled_runtime(split: &DatasetSplit, spec: &TrainSpec, n_params: u64) -> f64 {
    let n_train = split.train_x.nrows();
    let n_batches = n_train.div_ceil(spec.batch_size);
    let eval_rows = n_train + split.valid_x.nrows();
    let per_epoch = MODELED_SECONDS_PER_FLOP * n_params as f64 * (3 * n_train + eval_rows) as f64
        + MODELED_SECONDS_PER_BATCH * n_batches as f64;
    1e-3 + per_epoch * spec.max_epochs as f64
}

/// Trains one network and records its learning curves.
///
/// Deterministic given `spec.seed`. If a batch loss or an evaluation turns
/// non-finite, training stops, the remaining epochs repeat the last finite
/// values, the test error comes from the last finite weights, and the record
/// is flagged as diverged.
pub fn train_one(split: &DatasetSplit, spec: &TrainSpec, runtime_mode: RuntimeMode) -> Result<SeedRecord> {
    spec.check()?;
    let d = split.n_features();
    let mut rng = rng_from_seed(spec.seed);
    let mut net = Mlp::new(d, spec.layer1_size, spec.layer2_size, spec.act1, spec.act2, &mut rng);
    let mut adam = Adam::new(&net.params);
    let n_train = split.train_x.nrows();
    let mut order: Vec<usize> = (0..n_train).collect();

    let mut train_curve = Vec::with_capacity(spec.max_epochs);
    let mut valid_curve = Vec::with_capacity(spec.max_epochs);
    let mut last_good = net.params.clone();
    let finite_or_max = |x: f64| if x.is_finite() { x } else { f64::MAX };
    let mut last_values = (
        finite_or_max(net.mse(split.train_x.view(), split.train_y.view())),
        finite_or_max(net.mse(split.valid_x.view(), split.valid_y.view())),
    );
    let mut diverged = false;

    let start = Instant::now();
    'epochs: for epoch in 0..spec.max_epochs {
        let lr = spec.lr_schedule.rate(spec.init_lr, epoch, spec.max_epochs);
        order.shuffle(&mut rng);
        for batch in order.chunks(spec.batch_size) {
            let x = split.train_x.select(Axis(0), batch);
            let y = split.train_y.select(Axis(0), batch);
            let masks = DropoutMasks::sample(
                batch.len(),
                spec.layer1_size,
                spec.layer2_size,
                spec.dropout1,
                spec.dropout2,
                &mut rng,
            );
            let (loss, grad) = net.loss_and_grad(x.view(), y.view(), &masks);
            if !loss.is_finite() {
                diverged = true;
                break 'epochs;
            }
            adam.update(&mut net.params, &grad, lr);
        }
        let train = net.mse(split.train_x.view(), split.train_y.view());
        let valid = net.mse(split.valid_x.view(), split.valid_y.view());
        if !(train.is_finite() && valid.is_finite() && net.params.all_finite()) {
            diverged = true;
            break;
        }
        train_curve.push(train);
        valid_curve.push(valid);
        last_values = (train, valid);
        last_good.clone_from(&net.params);
    }
    let elapsed = start.elapsed().as_secs_f64();

    if diverged {
        train_curve.resize(spec.max_epochs, last_values.0);
        valid_curve.resize(spec.max_epochs, last_values.1);
        net.params = last_good;
    }
    let mut final_test_mse = net.mse(split.test_x.view(), split.test_y.view());
    if !final_test_mse.is_finite() {
        // finite weights can still overflow on unseen inputs
        final_test_mse = f64::MAX;
        diverged = true;
    }
    let n_params = param_count(d, spec.layer1_size, spec.layer2_size);
    let runtime_seconds = match runtime_mode {
        RuntimeMode::Measured => elapsed.max(1e-9),
        RuntimeMode::Modeled => modeled_runtime(split, spec, n_params),
    };
    Ok(SeedRecord {
        seed: spec.seed,
        train_curve,
        valid_curve,
        final_test_mse,
        runtime_seconds,
        n_params,
        diverged,
    })
}
