//! run, compare, report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tabbench_harness::{compare, run_once, write_bundle, Benchmark, CompareOptions, Report, RunOptions, RunTrace, StopRule};

use crate::args::{CompareArgs, ReportArgs, RunArgs, StopArgs};
use crate::generate::open_table;
use crate::svg::{Plot, Series};

fn run_options(s: &StopArgs) -> Result<RunOptions> {
    if s.no_eval_limit && s.max_seconds.is_none() {
        bail!("--no-eval-limit needs --max-seconds");
    }
    if let Some(t) = s.max_seconds {
        if !(t > 0.0) {
            bail!("--max-seconds must be positive, got {t}");
        }
    }
    Ok(RunOptions {
        stop: StopRule {
            max_evals: (!s.no_eval_limit).then_some(s.max_evals),
            max_seconds: s.max_seconds,
            count_full_budget_only: s.count_full_budget_only,
        },
        incumbent: s.incumbent,
    })
}

fn write_trace(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["event", "config_index", "budget", "valid_mse", "cum_seconds", "incumbent_index", "regret"])?;
    for (i, e) in trace.events.iter().enumerate() {
        w.write_record([
            i.to_string(),
            e.config.0.to_string(),
            e.budget_epochs.to_string(),
            e.valid_mse.to_string(),
            e.cumulative_seconds.to_string(),
            e.incumbent.map(|c| c.0.to_string()).unwrap_or_default(),
            e.test_regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(a: &RunArgs) -> Result<()> {
    let table = open_table(&a.table)?;
    let bench = Benchmark::new(&table);
    let trace = run_once(a.strategy, &bench, &a.optimizer.settings(), &run_options(&a.stop)?, a.seed)?;
    if let Some(out) = &a.out {
        write_trace(&trace, out)?;
        println!("wrote {}", out.display());
    }
    let incumbent = trace.events.last().and_then(|e| e.incumbent);
    println!("strategy {}", trace.strategy);
    println!("evaluations {}", trace.events.len());
    println!("simulated seconds {}", trace.total_seconds());
    match incumbent {
        Some(c) => println!("incumbent {} ({})", c, table.space().describe(c)?),
        None => println!("incumbent none"),
    }
    println!("final regret {}", trace.final_regret());
    println!("stop {:?}", trace.stop);
    Ok(())
}

fn curve_plot(title: &str, rows: &[(String, f64, f64, f64, f64)]) -> String {
    let mut by: BTreeMap<&str, Vec<&(String, f64, f64, f64, f64)>> = BTreeMap::new();
    for r in rows {
        by.entry(&r.0).or_default().push(r);
    }
    Plot {
        title: title.into(),
        x_label: "simulated seconds".into(),
        y_label: "test regret".into(),
        log_x: true,
        log_y: true,
        series: by
            .into_iter()
            .map(|(name, rs)| Series {
                name: name.to_string(),
                points: rs.iter().map(|r| (r.1, r.3)).collect(),
                step: true,
                band: Some(rs.iter().map(|r| (r.2, r.4)).collect()),
            })
            .collect(),
    }
    .to_svg()
}

fn ecdf_plot(title: &str, rows: &[(String, f64, f64)]) -> String {
    let mut by: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by.entry(&r.0).or_default().push((r.1, r.2));
    }
    let positive = rows.iter().all(|r| r.1 > 0.0);
    Plot {
        title: title.into(),
        x_label: "final test regret".into(),
        y_label: "fraction of runs".into(),
        log_x: positive,
        log_y: false,
        series: by
            .into_iter()
            .map(|(name, points)| Series {
                name: name.to_string(),
                points,
                step: true,
                band: None,
            })
            .collect(),
    }
    .to_svg()
}

fn report_rows(report: &Report) -> (Vec<(String, f64, f64, f64, f64)>, Vec<(String, f64, f64)>) {
    let mut curves = Vec::new();
    let mut ecdf = Vec::new();
    for r in &report.results {
        let c = &r.curve;
        for i in 0..c.times.len() {
            curves.push((r.strategy.name().to_string(), c.times[i], c.q25[i], c.median[i], c.q75[i]));
        }
        for (v, f) in r.final_regrets.steps() {
            ecdf.push((r.strategy.name().to_string(), v, f));
        }
    }
    (curves, ecdf)
}

pub fn compare_cmd(a: &CompareArgs) -> Result<()> {
    let table = open_table(&a.table)?;
    let opts = CompareOptions {
        strategies: a.strategies.clone(),
        n_runs: a.n_runs,
        run: run_options(&a.stop)?,
        master_seed: a.seed,
        settings: a.optimizer.settings(),
        jobs: a.jobs,
        grid_points: a.grid_points,
        cutoff_seconds: a.cutoff,
    };
    let report = compare(&table, &opts)?;
    write_bundle(&report, &a.out_dir).with_context(|| format!("writing bundle to {}", a.out_dir.display()))?;
    if !a.no_plot {
        let (curves, ecdf) = report_rows(&report);
        fs::write(a.out_dir.join("curves.svg"), curve_plot(&format!("Regret over time, {}", report.dataset), &curves))?;
        fs::write(a.out_dir.join("ecdf.svg"), ecdf_plot(&format!("Final regret, {}", report.dataset), &ecdf))?;
    }
    for r in &report.results {
        let v = r.final_regrets.values();
        println!(
            "{:<5} median final regret {:.6e} over {} runs",
            r.strategy.name(),
            tabbench_analysis::quantile_nearest_rank(v, 0.5)?,
            r.traces.len()
        );
    }
    println!("wrote {}", a.out_dir.display());
    Ok(())
}

#[derive(Deserialize)]
struct CurveRow {
    strategy: String,
    time: f64,
    q25: f64,
    median: f64,
    q75: f64,
}

#[derive(Deserialize)]
struct EcdfRow {
    strategy: String,
    regret: f64,
    cdf: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// Re-renders the plots of a bundle and writes a plain-text summary.
pub fn report(a: &ReportArgs) -> Result<()> {
    let out = a.out_dir.clone().unwrap_or_else(|| a.bundle.clone());
    fs::create_dir_all(&out)?;
    let meta_path = a.bundle.join("meta.json");
    let meta: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?,
    )
    .with_context(|| format!("parsing {}", meta_path.display()))?;
    let dataset = meta["dataset"].as_str().unwrap_or("unknown");
    let curves: Vec<(String, f64, f64, f64, f64)> = read_rows::<CurveRow>(&a.bundle.join("curves.csv"))?
        .into_iter()
        .map(|r| (r.strategy, r.time, r.q25, r.median, r.q75))
        .collect();
    let ecdf: Vec<(String, f64, f64)> = read_rows::<EcdfRow>(&a.bundle.join("ecdf.csv"))?
        .into_iter()
        .map(|r| (r.strategy, r.regret, r.cdf))
        .collect();
    fs::write(out.join("curves.svg"), curve_plot(&format!("Regret over time, {dataset}"), &curves))?;
    fs::write(out.join("ecdf.svg"), ecdf_plot(&format!("Final regret, {dataset}"), &ecdf))?;

    let mut text = format!(
        "dataset {dataset}\ntable checksum {}\noptimum test mse {}\nruns per strategy {}\n\n",
        meta["table_checksum"].as_str().unwrap_or("?"),
        meta["optimum_test_mse"],
        meta["n_runs"]
    );
    text.push_str("strategy  median      q25         q75         mean events\n");
    if let Some(summary) = meta["summary"].as_object() {
        for (name, s) in summary {
            let f = |k: &str| s[k].as_f64().unwrap_or(f64::NAN);
            text.push_str(&format!(
                "{name:<9} {:<11.4e} {:<11.4e} {:<11.4e} {:.1}\n",
                f("median_final_regret"),
                f("q25_final_regret"),
                f("q75_final_regret"),
                f("mean_events")
            ));
        }
    }
    fs::write(out.join("summary.txt"), &text)?;
    print!("{text}");
    println!("wrote {}", out.display());
    Ok(())
}
