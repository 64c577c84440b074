//! Exhaustive grid runs.
//!
//! Each config is an independent task; seed `s` of config `i` trains with a
//! stream derived from `(master_seed, i, s)`, so results do not depend on
//! scheduling or on how often a run was interrupted. With a checkpoint
//! directory, finished entries are written one file per config by a single
//! writer thread and skipped on the next invocation.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde_json::json;
use tabbench_core::{derive_seed, BenchTable, ConfigIndex, ConfigSpace, EvalEntry};

use crate::train::{train_one, RuntimeMode, TrainSpec};
use crate::{DatasetSplit, GridError, Result};

#[derive(Clone, Debug)]
pub struct GridOptions {
    pub dataset_name: String,
    pub n_seeds: usize,
    pub max_epochs: usize,
    pub master_seed: u64,
    pub runtime: RuntimeMode,
    pub checkpoint_dir: Option<PathBuf>,
    /// Stop after this many newly trained configs (simulates an interruption).
    pub max_new_configs: Option<usize>,
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            dataset_name: "dataset".into(),
            n_seeds: 4,
            max_epochs: 100,
            master_seed: 0,
            runtime: RuntimeMode::Measured,
            checkpoint_dir: None,
            max_new_configs: None,
            jobs: None,
        }
    }
}

#[derive(Debug)]
pub enum GridOutcome {
    Complete(BenchTable),
    Partial { completed: usize, total: usize },
}

pub fn train_seed(index: ConfigIndex, seed_index: usize, master_seed: u64) -> u64 {
    derive_seed(master_seed, "train", &[index.0 as u64, seed_index as u64])
}

fn evaluate_config(space: &ConfigSpace, split: &DatasetSplit, opts: &GridOptions, index: usize) -> Result<EvalEntry> {
    let positions = space.decode(ConfigIndex(index))?;
    let records = (0..opts.n_seeds)
        .map(|s| {
            let seed = train_seed(ConfigIndex(index), s, opts.master_seed);
            let spec = TrainSpec::from_config(space, &positions, opts.max_epochs, seed)?;
            train_one(split, &spec, opts.runtime)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalEntry { records })
}

fn entry_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("entries").join(format!("{index:08}.json"))
}

fn manifest(space: &ConfigSpace, opts: &GridOptions) -> serde_json::Value {
    json!({
        "dataset_name": opts.dataset_name,
        "n_seeds": opts.n_seeds,
        "max_epochs": opts.max_epochs,
        "master_seed": opts.master_seed,
        "runtime": format!("{:?}", opts.runtime),
        "space": space,
    })
}

fn checkpoint_err(path: &Path, message: impl Into<String>) -> GridError {
    GridError::Checkpoint {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn prepare_checkpoint(dir: &Path, space: &ConfigSpace, opts: &GridOptions) -> Result<Vec<bool>> {
    fs::create_dir_all(dir.join("entries"))?;
    let manifest_path = dir.join("manifest.json");
    let wanted = manifest(space, opts);
    if manifest_path.exists() {
        let found: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
            .map_err(|e| checkpoint_err(&manifest_path, e.to_string()))?;
        if found != wanted {
            return Err(checkpoint_err(&manifest_path, "was written for different grid settings"));
        }
    } else {
        fs::write(&manifest_path, serde_json::to_string_pretty(&wanted).expect("json value"))?;
    }
    Ok((0..space.cardinality()).map(|i| entry_path(dir, i).exists()).collect())
}

fn write_entry(dir: &Path, index: usize, entry: &EvalEntry) -> Result<()> {
    let path = entry_path(dir, index);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec(entry).expect("entries serialize"))?;
    fs::rename(&tmp, &path)?;
    Ok(())
}

/// Trains every config of `space` on `split`, resuming from `opts.checkpoint_dir`.
pub fn run_grid(space: &ConfigSpace, split: &DatasetSplit, opts: &GridOptions) -> Result<GridOutcome> {
    if opts.n_seeds == 0 || opts.max_epochs == 0 {
        return Err(GridError::Spec("n_seeds and max_epochs must be positive".into()));
    }
    // fail fast on a space that does not describe the network
    for i in 0..space.cardinality() {
        TrainSpec::from_config(space, &space.decode(ConfigIndex(i))?, opts.max_epochs, 0)?;
    }
    let total = space.cardinality();
    let done = match &opts.checkpoint_dir {
        Some(dir) => prepare_checkpoint(dir, space, opts)?,
        None => vec![false; total],
    };
    let mut pending: Vec<usize> = (0..total).filter(|&i| !done[i]).collect();
    if let Some(limit) = opts.max_new_configs {
        pending.truncate(limit);
    }
    let finished_after = total - done.iter().filter(|d| !**d).count() + pending.len();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = opts.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| GridError::Spec(format!("thread pool: {e}")))?;

    match &opts.checkpoint_dir {
        Some(dir) => {
            pool.install(|| {
                std::thread::scope(|scope| {
                    let (tx, rx) = mpsc::sync_channel::<(usize, EvalEntry)>(64);
                    let writer = scope.spawn(move || -> Result<()> {
                        for (i, entry) in rx {
                            write_entry(dir, i, &entry)?;
                        }
                        Ok(())
                    });
                    let trained = pending.par_iter().try_for_each_with(tx, |tx, &i| {
                        let entry = evaluate_config(space, split, opts, i)?;
                        tx.send((i, entry))
                            .map_err(|_| checkpoint_err(dir, "writer stopped"))
                    });
                    let written = writer.join().expect("writer thread panicked");
                    trained.and(written)
                })
            })?;
            if finished_after < total {
                return Ok(GridOutcome::Partial {
                    completed: finished_after,
                    total,
                });
            }
            Ok(GridOutcome::Complete(finalize(dir)?))
        }
        None => {
            let entries: Vec<EvalEntry> = pool.install(|| {
                pending
                    .par_iter()
                    .map(|&i| evaluate_config(space, split, opts, i))
                    .collect::<Result<Vec<_>>>()
            })?;
            if entries.len() < total {
                return Ok(GridOutcome::Partial {
                    completed: entries.len(),
                    total,
                });
            }
            Ok(GridOutcome::Complete(BenchTable::new(
                space.clone(),
                opts.max_epochs,
                opts.dataset_name.clone(),
                entries,
            )?))
        }
    }
}

/// Merges a complete checkpoint directory into a table.
pub fn finalize(dir: &Path) -> Result<BenchTable> {
    let manifest_path = dir.join("manifest.json");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| checkpoint_err(&manifest_path, e.to_string()))?;
    let space: ConfigSpace = serde_json::from_value(m["space"].clone())
        .map_err(|e| checkpoint_err(&manifest_path, e.to_string()))?;
    let max_epochs = m["max_epochs"]
        .as_u64()
        .ok_or_else(|| checkpoint_err(&manifest_path, "missing max_epochs"))? as usize;
    let name = m["dataset_name"].as_str().unwrap_or("dataset").to_owned();
    let mut entries = Vec::with_capacity(space.cardinality());
    let mut missing = 0;
    for i in 0..space.cardinality() {
        let path = entry_path(dir, i);
        match fs::read(&path) {
            Ok(bytes) => entries.push(
                serde_json::from_slice(&bytes).map_err(|e| checkpoint_err(&path, e.to_string()))?,
            ),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if missing > 0 {
        return Err(checkpoint_err(dir, format!("{missing} of {} entries missing", space.cardinality())));
    }
    Ok(BenchTable::new(space, max_epochs, name, entries)?)
}
