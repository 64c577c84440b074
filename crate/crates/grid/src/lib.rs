//! Table generation: dataset preparation, training of the two-layer
//! regression network, and exhaustive grid runs with resumable checkpoints.

pub mod dataset;
mod error;
pub mod mlp;
pub mod runner;
pub mod toy;
pub mod train;

pub use dataset::{prepare_dataset, read_delimited, DatasetSplit, Delimiter, RawData, SplitRatios};
pub use error::{GridError, Result};
pub use runner::{finalize, run_grid, GridOptions, GridOutcome};
pub use tabbench_core::param_count;
pub use train::{train_one, Activation, LrSchedule, RuntimeMode, TrainSpec};
