//! Rank statistics, nearest-rank quantiles and two one-sided two-sample tests.

use statrs::function::erf::erfc;

use crate::{AnalysisError, Result};

fn check_finite(name: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(bad) => Err(AnalysisError::Invalid(format!("{name}: non-finite value {bad}"))),
        None => Ok(()),
    }
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::Invalid(format!("lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(AnalysisError::Invalid("correlation needs at least 2 pairs".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::Undefined("correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of the fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_finite("spearman", xs)?;
    check_finite("spearman", ys)?;
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

/// Nearest-rank quantile of an ascending slice: the smallest value whose
/// rank is at least `p * n`.
pub fn quantile_nearest_rank(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(AnalysisError::Empty("quantile of no values".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::Invalid(format!("quantile level {p} outside [0, 1]")));
    }
    let n = sorted.len();
    // the tolerance keeps e.g. 0.7 * 10 from rounding up to rank 8
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sided two-sample Kolmogorov–Smirnov test of the alternative that
/// `left` is stochastically smaller than `right`, i.e. its ECDF lies above.
/// The statistic is `sup_x F_left(x) - F_right(x)`; the p-value uses the
/// asymptotic bound `exp(-2 D^2 nm / (n + m))`.
pub fn ks_one_sided(left: &[f64], right: &[f64]) -> Result<TestResult> {
    if left.is_empty() || right.is_empty() {
        return Err(AnalysisError::Empty("KS test needs two nonempty samples".into()));
    }
    check_finite("ks", left)?;
    check_finite("ks", right)?;
    let mut a = left.to_vec();
    let mut b = right.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    for &x in a.iter().chain(&b) {
        let fa = a.partition_point(|&v| v <= x) as f64 / n;
        let fb = b.partition_point(|&v| v <= x) as f64 / m;
        d = d.max(fa - fb);
    }
    let p_value = (-2.0 * d * d * n * m / (n + m)).exp().min(1.0);
    Ok(TestResult { statistic: d, p_value })
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// One-sided Mann–Whitney U test of the alternative that `a` tends to be
/// smaller than `b`. Normal approximation with tie and continuity
/// correction; the statistic is U of `a`.
pub fn mann_whitney_less(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::Empty("Mann-Whitney test needs two nonempty samples".into()));
    }
    check_finite("mann-whitney", a)?;
    check_finite("mann-whitney", b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = fractional_ranks(&pooled);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let u = ranks[..a.len()].iter().sum::<f64>() - na * (na + 1.0) / 2.0;

    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = i + sorted[i..].partition_point(|&v| v == sorted[i]);
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let mean = na * nb / 2.0;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        normal_cdf((u - mean + 0.5) / var.sqrt()).min(1.0)
    };
    Ok(TestResult { statistic: u, p_value })
}
