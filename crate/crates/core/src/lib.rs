//! Discrete configuration spaces and exhaustive benchmark tables.
//!
//! A [`BenchTable`] stores, for every cell of a [`ConfigSpace`], the learning
//! curves and final metrics of a few independently seeded training runs. It is
//! queried like an objective function: each call draws one of the stored runs
//! and charges the stored runtime, prorated to the requested epoch budget.

pub mod arch;
mod error;
pub mod io;
pub mod seed;
pub mod space;
pub mod synth;
pub mod table;

pub use arch::param_count;
pub use error::{Error, Result};
pub use io::{load_space, load_table, read_table, save_table, table_checksum, write_table, TableHeader};
pub use seed::{derive_seed, rng_from_seed, BenchRng};
pub use space::{ConfigIndex, ConfigSpace, Hyperparameter, ParamKind, Value};
pub use synth::{gen_synthetic, SynthOptions};
pub use table::{BenchTable, EvalEntry, Metric, QueryResult, SeedRecord};
