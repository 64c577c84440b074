//! gen-grid, gen-synth, validate, query.

use std::fs::File;
use std::io::BufReader;

use anyhow::{anyhow, bail, Context, Result};
use tabbench_core::synth::presets::{random_field, Separable};
use tabbench_core::{
    derive_seed, gen_synthetic, load_space, load_table, rng_from_seed, save_table, table_checksum, BenchTable,
    ConfigIndex, ConfigSpace, SynthOptions,
};
use tabbench_grid::{prepare_dataset, read_delimited, run_grid, GridOptions, GridOutcome, SplitRatios};

use crate::args::{GenGridArgs, GenSynthArgs, Preset, QueryArgs, ValidateArgs};

pub fn space_from(path: Option<&std::path::Path>) -> Result<ConfigSpace> {
    match path {
        Some(p) => load_space(p).with_context(|| format!("reading space {}", p.display())),
        None => Ok(ConfigSpace::fcnet()),
    }
}

pub fn open_table(path: &std::path::Path) -> Result<BenchTable> {
    load_table(path).with_context(|| format!("reading table {}", path.display()))
}

/// `best` or a config index.
pub fn parse_config(table: &BenchTable, s: &str) -> Result<ConfigIndex> {
    if s == "best" {
        return Ok(table.global_optimum().0);
    }
    let i: usize = s.parse().map_err(|_| anyhow!("config must be an index or `best`, got `{s}`"))?;
    table.space().check_index(ConfigIndex(i))?;
    Ok(ConfigIndex(i))
}

pub fn gen_grid(a: &GenGridArgs) -> Result<()> {
    let file = File::open(&a.data).with_context(|| format!("opening {}", a.data.display()))?;
    let raw = read_delimited(BufReader::new(file), a.delimiter).with_context(|| format!("reading {}", a.data.display()))?;
    let target = raw.column(&a.target).ok_or_else(|| {
        anyhow!(
            "{}: no column named `{}` (columns: {})",
            a.data.display(),
            a.target,
            raw.header.join(", ")
        )
    })?;
    let space = space_from(a.space.as_deref())?;
    let ratios = SplitRatios {
        train: a.split[0],
        valid: a.split[1],
        test: a.split[2],
    };
    let mut rng = rng_from_seed(derive_seed(a.seed, "split", &[]));
    let split = prepare_dataset(&raw, target, ratios, &mut rng)?;
    let dataset_name = a.dataset_name.clone().unwrap_or_else(|| {
        a.data
            .file_stem()
            .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
    });
    let opts = GridOptions {
        dataset_name,
        n_seeds: a.seeds,
        max_epochs: a.epochs,
        master_seed: a.seed,
        runtime: a.runtime,
        checkpoint_dir: a.checkpoint.clone(),
        max_new_configs: a.max_new_configs,
        jobs: a.jobs,
    };
    match run_grid(&space, &split, &opts)? {
        GridOutcome::Complete(table) => {
            save_table(&table, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
            println!(
                "wrote {} ({} configs x {} seeds x {} epochs)",
                a.out.display(),
                table.space().cardinality(),
                table.n_seeds(),
                table.max_epochs()
            );
        }
        GridOutcome::Partial { completed, total } => {
            println!("checkpoint holds {completed} of {total} configs; rerun to continue");
        }
    }
    Ok(())
}

pub fn gen_synth(a: &GenSynthArgs) -> Result<()> {
    let space = space_from(a.space.as_deref())?;
    let opts = SynthOptions {
        n_seeds: a.seeds,
        max_epochs: a.epochs,
        dataset_name: a.dataset_name.clone(),
    };
    if !(a.noise >= 0.0 && a.noise.is_finite()) {
        bail!("--noise must be a nonnegative number, got {}", a.noise);
    }
    let mut rng = rng_from_seed(derive_seed(a.seed, "synth", &[]));
    let table = match a.preset {
        Preset::Separable => {
            let sep = Separable::new(&space);
            gen_synthetic(&space, |p| sep.value(p), |p| a.noise * sep.value(p), &opts, &mut rng)?
        }
        Preset::Random => {
            let field = random_field(space.cardinality(), 0.1, &mut rng);
            let at = |p: &[usize]| field[space.encode(p).expect("positions from the space").0];
            gen_synthetic(&space, at, |p| a.noise * at(p), &opts, &mut rng)?
        }
    };
    save_table(&table, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} ({} configs)", a.out.display(), space.cardinality());
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    let table = open_table(&a.table)?;
    table.validate()?;
    let (best, y) = table.global_optimum();
    let diverged = table
        .entries()
        .iter()
        .flat_map(|e| &e.records)
        .filter(|r| r.diverged)
        .count();
    println!("dataset      {}", table.dataset_name());
    println!("configs      {}", table.space().cardinality());
    println!("parameters   {}", table.space().len());
    println!("seeds        {}", table.n_seeds());
    println!("epochs       {}", table.max_epochs());
    println!("diverged     {diverged}");
    println!("optimum      {} ({}) mean test {y}", best, table.space().describe(best)?);
    println!("checksum     {}", table_checksum(&table));
    println!("ok");
    Ok(())
}

pub fn query(a: &QueryArgs) -> Result<()> {
    let table = open_table(&a.table)?;
    let config = parse_config(&table, &a.config)?;
    let budget = a.budget.unwrap_or(table.max_epochs());
    if a.n == 0 {
        bail!("--n must be positive");
    }
    let mut rng = rng_from_seed(derive_seed(a.seed, "query", &[]));
    for _ in 0..a.n {
        let q = table.query(config, budget, &mut rng)?;
        println!(
            "{}",
            serde_json::json!({
                "config": config.0,
                "budget_epochs": q.budget_epochs,
                "valid_mse": q.valid_mse,
                "runtime_charged_seconds": q.runtime_charged_seconds,
                "seed_drawn": q.seed_drawn,
            })
        );
    }
    Ok(())
}
