//! Acceptance suite. Every criterion prints one PASS/FAIL/SKIP line; the
//! process exits nonzero if any criterion fails.
//!
//! Criterion 11 needs a real protein table: set `TABBENCH_PROTEIN_TABLE` to a
//! table file in this crate's format.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use tabbench_analysis::{
    fanova_exact, ks_one_sided, local_neighborhood, mann_whitney_less, noise_all, rank_corr_budgets, spearman, Ecdf,
    TopSelection,
};
use tabbench_core::space::names::*;
use tabbench_core::synth::presets::{random_field, Separable};
use tabbench_core::{
    derive_seed, gen_synthetic, load_table, rng_from_seed, BenchTable, ConfigIndex, ConfigSpace, EvalEntry,
    Hyperparameter, Metric, SeedRecord, SynthOptions,
};
use tabbench_grid::mlp::{DropoutMasks, Mlp};
use tabbench_grid::toy::friedman_dataset;
use tabbench_grid::{prepare_dataset, run_grid, Activation, GridOptions, GridOutcome, RuntimeMode, SplitRatios};
use tabbench_harness::{
    aggregate, compare, log_time_grid, run_once, run_seed, Benchmark, CompareOptions, RunOptions, RunTrace, StopRule,
};
use tabbench_opt::{hb_schedule, RlSettings, Settings, Strategy};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------- 1

/// Nested-mean oracle: marginal means per subset, then Möbius inversion.
fn fanova_oracle(values: &[f64], cards: &[usize]) -> (f64, HashMap<usize, f64>) {
    let d = cards.len();
    let n = values.len();
    let cells: Vec<Vec<usize>> = (0..n)
        .map(|mut i| {
            // first parameter most significant
            let mut digits = vec![0; d];
            for j in (0..d).rev() {
                digits[j] = i % cards[j];
                i /= cards[j];
            }
            digits
        })
        .collect();
    let key = |mask: usize, x: &[usize]| -> Vec<usize> { (0..d).filter(|j| mask >> j & 1 == 1).map(|j| x[j]).collect() };
    let mut marginal: Vec<HashMap<Vec<usize>, f64>> = Vec::new();
    for mask in 0..1usize << d {
        let mut sums: HashMap<Vec<usize>, (f64, usize)> = HashMap::new();
        for (x, &y) in cells.iter().zip(values) {
            let e = sums.entry(key(mask, x)).or_insert((0.0, 0));
            e.0 += y;
            e.1 += 1;
        }
        marginal.push(sums.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect());
    }
    let mean = marginal[0][&Vec::new()];
    let total = values.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
    let mut variances = HashMap::new();
    for u in 1..1usize << d {
        let mut v = 0.0;
        for x in &cells {
            let mut f = 0.0;
            // all subsets w of u
            let mut w = u;
            loop {
                let sign = if (u & !w).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                f += sign * marginal[w][&key(w, x)];
                if w == 0 {
                    break;
                }
                w = (w - 1) & u;
            }
            v += f * f;
        }
        variances.insert(u, v / n as f64);
    }
    (total, variances)
}

fn mask_of(subset: &[usize]) -> usize {
    subset.iter().map(|j| 1 << j).sum()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(derive_seed(1, "acceptance", &[1]));
    let mut worst: f64 = 0.0;
    for g in 0..100 {
        let d = rng.random_range(1..=5);
        let cards: Vec<usize> = (0..d).map(|_| rng.random_range(1..=4)).collect();
        let n: usize = cards.iter().product();
        let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
        let dec = fanova_exact(&values, &cards, d, None).map_err(|e| e.to_string())?;
        let (total, oracle) = fanova_oracle(&values, &cards);
        ensure!(
            (dec.total_variance - total).abs() <= 1e-9 * total.max(1e-300),
            "grid {g}: total {} vs {total}",
            dec.total_variance
        );
        let mut sum = 0.0;
        for (subset, c) in &dec.components {
            let want = oracle[&mask_of(subset)];
            let diff = (c.variance - want).abs();
            let rel = if diff == 0.0 { 0.0 } else { diff / want.abs().max(1e-12 * total) };
            worst = worst.max(rel);
            ensure!(rel <= 1e-9, "grid {g} subset {subset:?}: {} vs oracle {want}", c.variance);
            sum += c.variance;
        }
        ensure!(dec.components.len() == (1 << d) - 1, "grid {g}: {} components", dec.components.len());
        ensure!((sum - total).abs() <= 1e-9 * total.max(1e-300), "grid {g}: components sum to {sum}, total {total}");
    }

    // f = x1 on a 2 x 2 grid
    let single = fanova_exact(&[0.0, 0.0, 1.0, 1.0], &[2, 2], 2, None).map_err(|e| e.to_string())?;
    ensure!(single.fraction(&[0]) == 1.0, "f = x1: fraction {}", single.fraction(&[0]));
    ensure!(single.fraction(&[1]) == 0.0 && single.fraction(&[0, 1]) == 0.0, "f = x1: spurious components");
    // f = x1 * x2
    let product = fanova_exact(&[0.0, 0.0, 0.0, 1.0], &[2, 2], 2, None).map_err(|e| e.to_string())?;
    ensure!(product.total_variance == 0.1875, "f = x1 x2: total {}", product.total_variance);
    for s in [&[0][..], &[1], &[0, 1]] {
        ensure!(product.fraction(s) == 1.0 / 3.0, "f = x1 x2: fraction of {s:?} is {}", product.fraction(s));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!("100 grids, worst relative error {worst:.1e}, hand cases exact, {secs:.2} s"))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let space = ConfigSpace::fcnet();
    let product: usize = space.cardinalities().iter().product();
    ensure!(product == 62_208 && space.cardinality() == 62_208, "cardinality {product}");
    let mut buf = vec![0; space.len()];
    for i in 0..space.cardinality() {
        space.decode_into(ConfigIndex(i), &mut buf).map_err(|e| e.to_string())?;
        let back = space.encode(&buf).map_err(|e| e.to_string())?;
        ensure!(back == ConfigIndex(i), "index {i} came back as {}", back.0);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 1.0, "took {secs:.2} s");
    Ok(format!("62208 indices roundtrip in {secs:.3} s"))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let space = ConfigSpace::fcnet();
    let n = space.cardinality();
    let mut rng = rng_from_seed(derive_seed(3, "acceptance", &[]));
    let field = random_field(n, 0.1, &mut rng);
    let opts = SynthOptions {
        n_seeds: 1,
        max_epochs: 1,
        dataset_name: "noiseless".into(),
    };
    let at = |p: &[usize]| field[space.encode(p).unwrap().0];
    let table = gen_synthetic(&space, at, |_| 0.0, &opts, &mut rng).map_err(|e| e.to_string())?;
    let test = table.mean_metric_all(Metric::Test, 1).map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| test[a].total_cmp(&test[b]));
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let bench = Benchmark::new(&table);
    let run_opts = RunOptions {
        stop: StopRule::evals(500),
        ..RunOptions::default()
    };
    let runs = 500;
    let mut ranks = Vec::with_capacity(runs);
    for r in 0..runs {
        let trace = run_once(Strategy::Rs, &bench, &Settings::default(), &run_opts, run_seed(3, Strategy::Rs, r))
            .map_err(|e| e.to_string())?;
        ensure!(trace.events.len() == 500, "run {r}: {} events", trace.events.len());
        ranks.push(rank[trace.events.last().unwrap().incumbent.unwrap().0]);
    }
    let mut parts = Vec::new();
    for k in [6usize, 62, 622] {
        let hit = ranks.iter().filter(|&&r| r < k).count() as f64 / runs as f64;
        let p = 1.0 - (1.0 - k as f64 / n as f64).powi(500);
        let se = (p * (1.0 - p) / runs as f64).sqrt();
        let z = (hit - p) / se;
        ensure!(z.abs() <= 3.0, "k = {k}: observed {hit:.3}, expected {p:.3} ({z:.2} SE)");
        parts.push(format!("k={k}: {hit:.3} vs {p:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("{}, {secs:.1} s", parts.join(", ")))
}

// ---------------------------------------------------------------- 4 and 6

fn separable_table() -> &'static BenchTable {
    static TABLE: OnceLock<BenchTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let space = ConfigSpace::fcnet();
        let sep = Separable::new(&space);
        let opts = SynthOptions {
            n_seeds: 4,
            max_epochs: 100,
            dataset_name: "separable".into(),
        };
        let mut rng = rng_from_seed(derive_seed(6, "acceptance", &[]));
        gen_synthetic(&space, |p| sep.value(p), |p| sep.noise(p), &opts, &mut rng).expect("valid synthetic table")
    })
}

fn check_trace(table: &BenchTable, t: &RunTrace) -> Result<(), String> {
    let mut clock = 0.0f64;
    for (i, e) in t.events.iter().enumerate() {
        clock += e.runtime_charged_seconds;
        ensure!(
            e.cumulative_seconds.to_bits() == clock.to_bits(),
            "{} seed {} event {i}: clock {} vs sum {clock}",
            t.strategy,
            t.seed,
            e.cumulative_seconds
        );
        let records = &table.entry(e.config).map_err(|e| e.to_string())?.records;
        let b = e.budget_epochs as f64;
        ensure!(
            records.iter().any(|r| r.runtime_seconds * b / 100.0 == e.runtime_charged_seconds),
            "{} seed {} event {i}: charge {} is not runtime x {b}/100 for any seed",
            t.strategy,
            t.seed,
            e.runtime_charged_seconds
        );
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let table = separable_table();
    let mut rng = rng_from_seed(derive_seed(4, "acceptance", &[]));
    for _ in 0..10_000 {
        let c = ConfigIndex(rng.random_range(0..table.space().cardinality()));
        let b = rng.random_range(1..=100);
        let q = table.query(c, b, &mut rng).map_err(|e| e.to_string())?;
        let r = &table.entry(c).unwrap().records[q.seed_drawn as usize];
        ensure!(
            q.runtime_charged_seconds == r.runtime_seconds * b as f64 / 100.0,
            "query {c} at {b}: {} vs {}",
            q.runtime_charged_seconds,
            r.runtime_seconds * b as f64 / 100.0
        );
    }
    let opts = CompareOptions {
        strategies: Strategy::ALL.to_vec(),
        n_runs: 10,
        run: RunOptions {
            stop: StopRule::evals(500),
            ..RunOptions::default()
        },
        master_seed: 4,
        ..CompareOptions::default()
    };
    let report = compare(table, &opts).map_err(|e| e.to_string())?;
    let mut events = 0;
    let mut partial = 0;
    for r in &report.results {
        for t in &r.traces {
            check_trace(table, t)?;
            events += t.events.len();
            partial += t.events.iter().filter(|e| e.budget_epochs < 100).count();
        }
    }
    ensure!(partial > 0, "no partial-budget evaluations were exercised");
    Ok(format!("10000 queries and {events} trace events ({partial} partial-budget) exact"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let table = separable_table();
    let strategies = [Strategy::Rs, Strategy::Tpe, Strategy::Bohb, Strategy::RfBo, Strategy::Re];
    let opts = CompareOptions {
        strategies: strategies.to_vec(),
        n_runs: 100,
        run: RunOptions {
            stop: StopRule::evals(500),
            ..RunOptions::default()
        },
        master_seed: 6,
        ..CompareOptions::default()
    };
    let report = compare(table, &opts).map_err(|e| e.to_string())?;
    for r in &report.results {
        for t in &r.traces {
            check_trace(table, t)?;
        }
    }
    let finals = |s: Strategy| -> Vec<f64> { report.result(s).unwrap().traces.iter().map(RunTrace::final_regret).collect() };
    let median = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        0.5 * (v[49] + v[50])
    };
    let rs = finals(Strategy::Rs);
    let mut parts = vec![format!("rs median {:.4}", median(&rs))];
    let mut failures = Vec::new();
    for s in &strategies[1..] {
        let x = finals(*s);
        let test = mann_whitney_less(&x, &rs).map_err(|e| e.to_string())?;
        parts.push(format!("{s} median {:.4} p={:.1e}", median(&x), test.p_value));
        if !(test.p_value < 0.01) {
            failures.push(s.name());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{}, {secs:.0} s", parts.join(", "));
    ensure!(failures.is_empty(), "not better than rs: {failures:?}; {detail}");
    ensure!(secs < 600.0, "took {secs:.0} s; {detail}");
    Ok(detail)
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let s = hb_schedule(3.0, 4, 100).map_err(|e| e.to_string())?;
    ensure!(s.budgets == [11, 33, 100], "budgets {:?}", s.budgets);
    for (i, bracket) in s.brackets.iter().enumerate() {
        for w in bracket.windows(2) {
            ensure!(
                w[1].n_configs == (w[0].n_configs as f64 / 3.0).floor() as usize,
                "bracket {i}: {} configs after {}",
                w[1].n_configs,
                w[0].n_configs
            );
        }
    }
    let closed: usize = s
        .brackets
        .iter()
        .flat_map(|b| b.iter().map(|r| r.n_configs * r.budget))
        .sum();
    let evals: usize = s.brackets.iter().flat_map(|b| b.iter().map(|r| r.n_configs)).sum();

    // every run costs 100 s for 100 epochs, so b epochs cost exactly b seconds
    let space = ConfigSpace::new(vec![
        Hyperparameter::ordinal("a", &[0.0, 1.0, 2.0, 3.0]),
        Hyperparameter::ordinal("b", &[0.0, 1.0, 2.0, 3.0]),
    ])
    .unwrap();
    let mut rng = rng_from_seed(derive_seed(5, "acceptance", &[]));
    let entries = (0..16)
        .map(|_| EvalEntry {
            records: vec![SeedRecord {
                seed: 0,
                train_curve: (0..100).map(|_| rng.random::<f64>()).collect(),
                valid_curve: (0..100).map(|_| rng.random::<f64>()).collect(),
                final_test_mse: rng.random::<f64>(),
                runtime_seconds: 100.0,
                n_params: 1,
                diverged: false,
            }],
        })
        .collect();
    let table = BenchTable::new(space, 100, "flat-cost", entries).map_err(|e| e.to_string())?;
    let opts = RunOptions {
        stop: StopRule::evals(evals),
        ..RunOptions::default()
    };
    let trace = run_once(Strategy::Hb, &Benchmark::new(&table), &Settings::default(), &opts, 5).map_err(|e| e.to_string())?;
    ensure!(trace.events.len() == evals, "{} events for one cycle of {evals}", trace.events.len());
    let budgets: Vec<usize> = trace.events.iter().map(|e| e.budget_epochs).collect();
    let expected: Vec<usize> = s
        .brackets
        .iter()
        .flat_map(|b| b.iter().flat_map(|r| std::iter::repeat_n(r.budget, r.n_configs)))
        .collect();
    ensure!(budgets == expected, "evaluation budgets {budgets:?}");
    ensure!(
        trace.total_seconds() == closed as f64,
        "one cycle cost {} s, closed form {closed}",
        trace.total_seconds()
    );
    Ok(format!("budgets {:?}, {evals} evaluations, cycle cost {closed} epochs", s.budgets))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let space = ConfigSpace::new(vec![Hyperparameter::ordinal("arm", &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0])]).unwrap();
    let best = 4;
    let settings = RlSettings {
        learning_rate: 0.1,
        baseline_momentum: 0.9,
    };
    let mut probs = Vec::new();
    for seed in 0..20 {
        let mut rl = tabbench_opt::Reinforce::new(&space, 1, derive_seed(7, "acceptance", &[seed]), settings.clone())
            .map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let pos = rl.sample_positions();
            let reward = if pos[0] == best { 1.0 } else { 0.0 };
            rl.update(&pos, reward);
        }
        probs.push(rl.probabilities()[0][best]);
    }
    let good = probs.iter().filter(|&&p| p > 0.9).count();
    let low = probs.iter().copied().fold(1.0, f64::min);
    ensure!(good >= 18, "{good}/20 seeds above 0.9 (lowest {low:.3})");
    Ok(format!("{good}/20 seeds with P(best) > 0.9, lowest {low:.3}"))
}

// ---------------------------------------------------------------- 8

fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Nearest rank: the smallest `r` with `r >= p * n`, as a 1-based rank.
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let r = (1..=n).find(|&r| r as f64 >= p * n as f64 - 1e-9).unwrap_or(n);
    sorted[r - 1]
}

fn criterion_8() -> Outcome {
    let mut rng = rng_from_seed(derive_seed(8, "acceptance", &[]));
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < 1000 {
        let n = rng.random_range(3..80);
        let levels = rng.random_range(2..8);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect();
        let want = spearman_oracle(&x, &y);
        if !want.is_finite() {
            // a constant vector; the correlation is undefined
            continue;
        }
        let got = spearman(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs());
        ensure!((got - want).abs() <= 1e-12, "n = {n}: {got} vs {want}");
        tested += 1;
    }

    for _ in 0..200 {
        let n = rng.random_range(1..50);
        let s: Vec<f64> = (0..n).map(|_| (rng.random_range(0..20) as f64) * 0.1).collect();
        let e = Ecdf::new(&s).map_err(|e| e.to_string())?;
        let mut probes: Vec<f64> = s.clone();
        probes.extend((0..20).map(|_| rng.random::<f64>() * 2.5 - 0.2));
        for x in probes {
            let want = s.iter().filter(|&&v| v <= x).count() as f64 / n as f64;
            ensure!(e.eval(x) == want, "ECDF at {x}: {} vs {want}", e.eval(x));
        }
    }

    let table = tiny_bench();
    let bench = Benchmark::new(&table);
    let opts = RunOptions {
        stop: StopRule::evals(30),
        ..RunOptions::default()
    };
    let mut traces = Vec::new();
    for r in 0..20 {
        traces.push(run_once(Strategy::Rs, &bench, &Settings::default(), &opts, r).map_err(|e| e.to_string())?);
    }
    let grid = log_time_grid(&traces, 40).map_err(|e| e.to_string())?;
    let curve = aggregate(&traces, &grid).map_err(|e| e.to_string())?;
    for (i, &t) in grid.iter().enumerate() {
        let mut at: Vec<f64> = traces
            .iter()
            .map(|tr| {
                let mut v = tr.initial_regret;
                for e in &tr.events {
                    if e.cumulative_seconds <= t {
                        v = e.test_regret;
                    }
                }
                v
            })
            .collect();
        at.sort_by(f64::total_cmp);
        for (p, got) in [(0.25, curve.q25[i]), (0.5, curve.median[i]), (0.75, curve.q75[i])] {
            let want = nearest_rank(&at, p);
            ensure!(got == want, "quantile {p} at t = {t}: {got} vs {want}");
        }
    }
    Ok(format!("1000 spearman vectors (max error {worst:.1e}), ECDF and {} curve points exact", grid.len()))
}

fn tiny_bench() -> BenchTable {
    let space = ConfigSpace::new(vec![
        Hyperparameter::ordinal("a", &[0.0, 1.0, 2.0, 3.0, 4.0]),
        Hyperparameter::categorical("b", &["x", "y", "z"]),
    ])
    .unwrap();
    let sep = Separable::new(&space);
    let opts = SynthOptions {
        n_seeds: 3,
        max_epochs: 10,
        dataset_name: "tiny".into(),
    };
    gen_synthetic(&space, |p| sep.value(p), |p| sep.noise(p), &opts, &mut rng_from_seed(88)).unwrap()
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let space = ConfigSpace::new(vec![
        Hyperparameter::ordinal(INIT_LR, &[0.0005, 0.001, 0.005, 0.01, 0.05, 0.1]),
        Hyperparameter::ordinal(BATCH_SIZE, &[8.0, 32.0]),
        Hyperparameter::categorical(LR_SCHEDULE, &["cosine", "const"]),
        Hyperparameter::categorical(ACTIVATION_1, &["relu", "tanh"]),
        Hyperparameter::categorical(ACTIVATION_2, &["relu"]),
        Hyperparameter::ordinal(N_UNITS_1, &[16.0, 64.0, 256.0]),
        Hyperparameter::ordinal(N_UNITS_2, &[32.0]),
        Hyperparameter::ordinal(DROPOUT_1, &[0.0, 0.3, 0.6]),
        Hyperparameter::ordinal(DROPOUT_2, &[0.0]),
    ])
    .unwrap();
    ensure!(space.cardinality() == 432, "space has {} cells", space.cardinality());
    let raw = friedman_dataset(1000, 1.0, 9);
    let split = prepare_dataset(&raw, raw.header.len() - 1, SplitRatios::default(), &mut rng_from_seed(9))
        .map_err(|e| e.to_string())?;
    let opts = GridOptions {
        dataset_name: "friedman".into(),
        n_seeds: 2,
        max_epochs: 20,
        master_seed: 9,
        runtime: RuntimeMode::Modeled,
        ..GridOptions::default()
    };
    let table = match run_grid(&space, &split, &opts).map_err(|e| e.to_string())? {
        GridOutcome::Complete(t) => t,
        GridOutcome::Partial { .. } => return Err("grid did not complete".into()),
    };
    let first = noise_all(&table, 1, Metric::Valid).map_err(|e| e.to_string())?;
    let last = noise_all(&table, 20, Metric::Valid).map_err(|e| e.to_string())?;
    let ks = ks_one_sided(&last, &first).map_err(|e| e.to_string())?;
    let budgets = [1, 2, 5, 10, 15, 20];
    let m = rank_corr_budgets(&table, &budgets, &[1.0], TopSelection::Test).map_err(|e| e.to_string())?;
    let rho: Vec<f64> = m.rho.iter().map(|r| r[0]).collect();
    let inversions = rho.windows(2).filter(|w| w[1] < w[0]).count();
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "noise KS D={:.3} p={:.1e}; rho at {budgets:?} = {}; {secs:.0} s",
        ks.statistic,
        ks.p_value,
        rho.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
    );
    ensure!(ks.p_value < 0.05, "noise did not shrink: {detail}");
    ensure!(inversions <= 1, "{inversions} inversions: {detail}");
    Ok(detail)
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let mut rng = rng_from_seed(derive_seed(10, "acceptance", &[]));
    let mut worst: f64 = 0.0;
    for trial in 0..40 {
        let (n_in, h1, h2, rows) = (rng.random_range(1..6), rng.random_range(1..7), rng.random_range(1..7), rng.random_range(2..9));
        let acts = [Activation::Relu, Activation::Tanh];
        let (a1, a2) = (acts[trial % 2], acts[(trial / 2) % 2]);
        let mut net = Mlp::new(n_in, h1, h2, a1, a2, &mut rng);
        // biases start at zero, which puts dead units exactly on the ReLU kink
        for t in net.params.tensors_mut() {
            t.iter_mut().for_each(|v| *v = rng.random::<f64>() - 0.5);
        }
        let x = Array2::from_shape_fn((rows, n_in), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y = Array1::from_shape_fn(rows, |_| rng.random::<f64>() * 2.0 - 1.0);
        let masks = DropoutMasks::sample(rows, h1, h2, 0.3, 0.3, &mut rng);
        let (_, grad) = net.loss_and_grad(x.view(), y.view(), &masks);
        let analytic: Vec<f64> = grad.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        let eps = 1e-6;
        for k in 0..6 {
            for i in 0..net.params.tensors()[k].len() {
                let mut plus = net.clone();
                plus.params.tensors_mut()[k][i] += eps;
                let mut minus = net.clone();
                minus.params.tensors_mut()[k][i] -= eps;
                numeric.push((plus.loss(x.view(), y.view(), &masks) - minus.loss(x.view(), y.view(), &masks)) / (2.0 * eps));
            }
        }
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let scale = norm(&analytic).max(norm(&numeric));
        let rel = if scale == 0.0 { 0.0 } else { norm(&diff) / scale };
        worst = worst.max(rel);
        ensure!(rel < 1e-4, "trial {trial} ({a1:?}/{a2:?}): relative error {rel:.2e}");
    }
    Ok(format!("40 networks, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------- 11

/// Best protein config and its one-flip neighbors as published (display
/// name, from, to, test error, relative change).
const PROTEIN_OPTIMUM: [(&str, &str); 9] = [
    (INIT_LR, "0.0005"),
    (BATCH_SIZE, "8"),
    (LR_SCHEDULE, "cosine"),
    (ACTIVATION_1, "relu"),
    (ACTIVATION_2, "relu"),
    (N_UNITS_1, "512"),
    (N_UNITS_2, "512"),
    (DROPOUT_1, "0"),
    (DROPOUT_2, "0.3"),
];
const PROTEIN_INCUMBENT_TEST: f64 = 0.2153;
const PROTEIN_NEIGHBORS: [(&str, &str, &str, f64, f64); 10] = [
    (BATCH_SIZE, "8", "16", 0.2163, 0.0042),
    (INIT_LR, "0.0005", "0.001", 0.2169, 0.0072),
    (N_UNITS_2, "512", "256", 0.2203, 0.0231),
    (N_UNITS_1, "512", "256", 0.2216, 0.0288),
    (DROPOUT_2, "0.3", "0.6", 0.2257, 0.0478),
    (LR_SCHEDULE, "cosine", "const", 0.2269, 0.0534),
    (DROPOUT_2, "0.3", "0", 0.2280, 0.0587),
    (DROPOUT_1, "0", "0.3", 0.2307, 0.0711),
    (ACTIVATION_2, "relu", "tanh", 0.2875, 0.3351),
    (ACTIVATION_1, "relu", "tanh", 0.3012, 0.3987),
];

fn criterion_11() -> Option<Outcome> {
    let path = std::env::var_os("TABBENCH_PROTEIN_TABLE")?;
    Some((|| {
        let table = load_table(&path).map_err(|e| e.to_string())?;
        let (best, test) = table.global_optimum();
        let described = table.space().describe(best).map_err(|e| e.to_string())?;
        let want: Vec<String> = PROTEIN_OPTIMUM.iter().map(|(k, v)| format!("{k}={v}")).collect();
        ensure!(described == want.join(","), "optimum {described}");
        ensure!(format!("{test:.4}") == format!("{PROTEIN_INCUMBENT_TEST:.4}"), "optimum test error {test}");
        let rows = local_neighborhood(&table, best).map_err(|e| e.to_string())?;
        for (name, from, to, err, rel) in PROTEIN_NEIGHBORS {
            let row = rows
                .iter()
                .find(|r| r.param_name == name && r.from.to_string() == from && r.to.to_string() == to)
                .ok_or_else(|| format!("no neighbor {name} {from} -> {to}"))?;
            ensure!(format!("{:.4}", row.mean_test) == format!("{err:.4}"), "{name} -> {to}: test {}", row.mean_test);
            ensure!((row.relative_change - rel).abs() <= 5e-3, "{name} -> {to}: relative change {}", row.relative_change);
        }
        Ok(format!("optimum and {} neighbors match", PROTEIN_NEIGHBORS.len()))
    })())
}

// ----------------------------------------------------------------

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Option<Outcome>>)> = vec![
        ("fANOVA oracle equivalence", Box::new(|| Some(criterion_1()))),
        ("mixed-radix bijection", Box::new(|| Some(criterion_2()))),
        ("random search order statistics", Box::new(|| Some(criterion_3()))),
        ("simulated clock exactness", Box::new(|| Some(criterion_4()))),
        ("hyperband arithmetic", Box::new(|| Some(criterion_5()))),
        ("model-based beats random", Box::new(|| Some(criterion_6()))),
        ("REINFORCE convergence", Box::new(|| Some(criterion_7()))),
        ("statistics oracles", Box::new(|| Some(criterion_8()))),
        ("mini-grid noise and rank correlation", Box::new(|| Some(criterion_9()))),
        ("MLP gradient check", Box::new(|| Some(criterion_10()))),
        ("protein table neighborhood", Box::new(criterion_11)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f.parse() == Ok(n) || name.contains(f.as_str())) {
            continue;
        }
        let line = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Some(Ok(detail))) => format!("PASS  {detail}"),
            Ok(Some(Err(why))) => {
                failed += 1;
                format!("FAIL  {why}")
            }
            Ok(None) => "SKIP  TABBENCH_PROTEIN_TABLE not set".to_string(),
            Err(_) => {
                failed += 1;
                "FAIL  panicked".to_string()
            }
        };
        println!("criterion {n:>2} {name}: {line}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
