//! `analyze` subcommands: one CSV (and optionally one SVG) per call.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tabbench_analysis::{
    cross_dataset_rank_corr, fanova_table, ks_one_sided, local_neighborhood, noise_all, rank_corr_budgets, Ecdf,
};
use tabbench_core::BenchTable;

use crate::args::{Analysis, MetricArg, TableOut};
use crate::generate::{open_table, parse_config};
use crate::svg::{bar_chart, heatmap, Plot, Series};

fn file_stem(analysis: &str, dataset: &str) -> String {
    let clean: String = dataset
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("{analysis}_{clean}")
}

struct Output {
    csv: PathBuf,
    svg: Option<PathBuf>,
}

fn outputs(dir: &Path, analysis: &str, dataset: &str, plot: bool) -> Result<Output> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = file_stem(analysis, dataset);
    Ok(Output {
        csv: dir.join(format!("{stem}.csv")),
        svg: plot.then(|| dir.join(format!("{stem}.svg"))),
    })
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// `defaults` clipped to the table, plus its maximum.
fn epochs_or(given: &[usize], defaults: &[usize], table: &BenchTable) -> Result<Vec<usize>> {
    let max = table.max_epochs();
    let mut out: Vec<usize> = if given.is_empty() {
        defaults.iter().copied().filter(|&e| e < max).chain([max]).collect()
    } else {
        given.to_vec()
    };
    out.sort_unstable();
    out.dedup();
    for &e in &out {
        table.check_budget(e)?;
    }
    Ok(out)
}

fn step_series(name: String, ecdf: &Ecdf) -> Series {
    Series {
        name,
        points: ecdf.steps(),
        step: true,
        band: None,
    }
}

fn finish(out: &Output, svg: impl FnOnce() -> String) -> Result<()> {
    println!("wrote {}", out.csv.display());
    if let Some(path) = &out.svg {
        fs::write(path, svg()).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn run(a: &Analysis) -> Result<()> {
    let name = a.name();
    match a {
        Analysis::Ecdf { io, metrics, epoch } => ecdf(io, name, metrics, *epoch),
        Analysis::Noise { io, epochs, metric } => noise(io, name, epochs, *metric),
        Analysis::RankCorr { io, budgets, top, select } => {
            let table = open_table(&io.table)?;
            let budgets = epochs_or(budgets, &[10, 20, 50], &table)?;
            let m = rank_corr_budgets(&table, &budgets, top, *select)?;
            let mut header = vec!["budget".to_string()];
            header.extend(top.iter().map(|f| format!("top_{f}")));
            let rows: Vec<Vec<String>> = m
                .budgets
                .iter()
                .zip(&m.rho)
                .map(|(b, r)| std::iter::once(b.to_string()).chain(r.iter().map(f64::to_string)).collect())
                .collect();
            let out = outputs(&io.out_dir, name, table.dataset_name(), !io.no_plot)?;
            write_csv(&out.csv, &header, &rows)?;
            finish(&out, || {
                Plot {
                    title: format!("Rank correlation to {} epochs, {}", table.max_epochs(), table.dataset_name()),
                    x_label: "budget (epochs)".into(),
                    y_label: "Spearman rho".into(),
                    log_x: false,
                    log_y: false,
                    series: top
                        .iter()
                        .enumerate()
                        .map(|(j, f)| Series {
                            name: format!("top {}%", f * 100.0),
                            points: m.budgets.iter().zip(&m.rho).map(|(&b, r)| (b as f64, r[j])).collect(),
                            step: false,
                            band: None,
                        })
                        .collect(),
                }
                .to_svg()
            })
        }
        Analysis::Fanova { io, metric, budget, percentile, max_order } => {
            let table = open_table(&io.table)?;
            if let Some(p) = percentile {
                if !(*p > 0.0 && *p <= 1.0) {
                    bail!("--percentile must lie in (0, 1], got {p}");
                }
            }
            let budget = budget.unwrap_or(table.max_epochs());
            let d = fanova_table(&table, metric.0, budget, *max_order, *percentile)?;
            let names: Vec<&str> = table.space().params().iter().map(|p| p.name.as_str()).collect();
            let mut comps: Vec<(&Vec<usize>, _)> = d.components.iter().collect();
            comps.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(b.0)));
            let rows: Vec<Vec<String>> = comps
                .iter()
                .map(|(subset, c)| {
                    vec![
                        subset.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                        subset.iter().map(|&j| names[j]).collect::<Vec<_>>().join(" x "),
                        c.variance.to_string(),
                        c.fraction.to_string(),
                    ]
                })
                .collect();
            let out = outputs(&io.out_dir, name, table.dataset_name(), !io.no_plot)?;
            write_csv(&out.csv, &strings(&["subset", "params", "variance", "fraction"]), &rows)?;
            println!("total variance {}{}", d.total_variance, if d.degenerate { " (degenerate: all fractions 0)" } else { "" });
            let mut ranked: Vec<(String, f64)> = comps
                .iter()
                .filter(|(s, _)| s.len() <= 2)
                .map(|(s, c)| (s.iter().map(|&j| names[j]).collect::<Vec<_>>().join(" x "), c.fraction))
                .collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
            ranked.truncate(15);
            finish(&out, || {
                let (labels, values): (Vec<String>, Vec<f64>) = ranked.into_iter().unzip();
                bar_chart(&format!("Variance fractions, {}", table.dataset_name()), &labels, &values)
            })
        }
        Analysis::Neighbors { io, config } => {
            let table = open_table(&io.table)?;
            let c = parse_config(&table, config)?;
            let rows: Vec<Vec<String>> = local_neighborhood(&table, c)?
                .into_iter()
                .map(|r| {
                    vec![
                        r.param_name,
                        r.from.to_string(),
                        r.to.to_string(),
                        r.config.0.to_string(),
                        r.mean_test.to_string(),
                        r.relative_change.to_string(),
                    ]
                })
                .collect();
            let out = outputs(&io.out_dir, name, table.dataset_name(), !io.no_plot)?;
            write_csv(
                &out.csv,
                &strings(&["param", "from", "to", "config_index", "mean_test", "relative_change"]),
                &rows,
            )?;
            println!("config {c}: {}", table.space().describe(c)?);
            finish(&out, || {
                let labels: Vec<String> = rows.iter().map(|r| format!("{} {}->{}", r[0], r[1], r[2])).collect();
                let values: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap_or(0.0)).collect();
                bar_chart(&format!("Relative change around config {c}"), &labels, &values)
            })
        }
        Analysis::CrossRank { tables, out_dir, top, no_plot } => {
            let loaded = tables.iter().map(|p| open_table(p)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&BenchTable> = loaded.iter().collect();
            let m = cross_dataset_rank_corr(&refs, *top)?;
            let names: Vec<String> = loaded.iter().map(|t| t.dataset_name().to_string()).collect();
            let mut header = vec!["dataset".to_string()];
            header.extend(names.iter().cloned());
            let rows: Vec<Vec<String>> = names
                .iter()
                .zip(&m)
                .map(|(n, r)| std::iter::once(n.clone()).chain(r.iter().map(f64::to_string)).collect())
                .collect();
            let out = outputs(out_dir, name, &names.join("+"), !no_plot)?;
            write_csv(&out.csv, &header, &rows)?;
            finish(&out, || heatmap(&format!("Rank correlation, top {}%", top * 100.0), &names, &m))
        }
    }
}

fn ecdf(io: &TableOut, name: &str, metrics: &[MetricArg], epoch: Option<usize>) -> Result<()> {
    let table = open_table(&io.table)?;
    let epoch = epoch.unwrap_or(table.max_epochs());
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for m in metrics {
        let values = table.mean_metric_all(m.0, epoch)?;
        let e = Ecdf::new(&values)?;
        rows.extend(e.steps().into_iter().map(|(v, f)| vec![m.to_string(), v.to_string(), f.to_string()]));
        series.push(step_series(m.to_string(), &e));
    }
    let out = outputs(&io.out_dir, name, table.dataset_name(), !io.no_plot)?;
    write_csv(&out.csv, &strings(&["metric", "value", "cdf"]), &rows)?;
    let positive = rows.iter().all(|r| r[1].parse::<f64>().is_ok_and(|v| v > 0.0));
    finish(&out, || {
        Plot {
            title: format!("ECDF, {}", table.dataset_name()),
            x_label: "value".into(),
            y_label: "fraction of configs".into(),
            log_x: positive,
            log_y: false,
            series,
        }
        .to_svg()
    })
}

fn noise(io: &TableOut, name: &str, epochs: &[usize], metric: MetricArg) -> Result<()> {
    let table = open_table(&io.table)?;
    let epochs = epochs_or(epochs, &[1, 10, 50], &table)?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut per_epoch = Vec::new();
    for &e in &epochs {
        let values = noise_all(&table, e, metric.0)?;
        let ecdf = Ecdf::new(&values)?;
        rows.extend(ecdf.steps().into_iter().map(|(v, f)| vec![e.to_string(), v.to_string(), f.to_string()]));
        series.push(step_series(format!("{e} epochs"), &ecdf));
        per_epoch.push(values);
    }
    let out = outputs(&io.out_dir, name, table.dataset_name(), !io.no_plot)?;
    write_csv(&out.csv, &strings(&["epoch", "noise", "cdf"]), &rows)?;
    if let (Some(first), Some(last)) = (per_epoch.first(), per_epoch.last()) {
        if epochs.len() > 1 {
            let ks = ks_one_sided(last, first)?;
            println!(
                "one-sided KS, noise at {} epochs left of {} epochs: D = {}, p = {}",
                epochs[epochs.len() - 1],
                epochs[0],
                ks.statistic,
                ks.p_value
            );
        }
    }
    finish(&out, || {
        Plot {
            title: format!("Noise across seeds, {}", table.dataset_name()),
            x_label: format!("std of {metric} error"),
            y_label: "fraction of configs".into(),
            log_x: true,
            log_y: false,
            series,
        }
        .to_svg()
    })
}
