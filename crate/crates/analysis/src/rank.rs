//! Rank correlation across budgets of one table and across tables.

use tabbench_core::{BenchTable, Metric};

use crate::stats::spearman;
use crate::{AnalysisError, Result};

/// Which per-config score defines the "top" configurations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TopSelection {
    /// Mean final test error.
    #[default]
    Test,
    /// Mean validation error at the maximum budget.
    Valid,
}

impl std::str::FromStr for TopSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "test" => Ok(TopSelection::Test),
            "valid" => Ok(TopSelection::Valid),
            other => Err(format!("unknown selection `{other}` (test, valid)")),
        }
    }
}

fn scores(table: &BenchTable, selection: TopSelection) -> Result<Vec<f64>> {
    let metric = match selection {
        TopSelection::Test => Metric::Test,
        TopSelection::Valid => Metric::Valid,
    };
    Ok(table.mean_metric_all(metric, table.max_epochs())?)
}

fn best_k(scores: &[f64], frac: f64) -> Result<Vec<usize>> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(AnalysisError::Invalid(format!("top fraction {frac} outside (0, 1]")));
    }
    let k = ((frac * scores.len() as f64) - 1e-9).ceil() as usize;
    if k < 2 {
        return Err(AnalysisError::Invalid(format!(
            "top fraction {frac} of {} configs selects fewer than 2",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order.truncate(k);
    Ok(order)
}

/// The `ceil(frac * N)` best configs by `selection`, best first; ties go to
/// the lower index.
pub fn top_configs(table: &BenchTable, frac: f64, selection: TopSelection) -> Result<Vec<usize>> {
    best_k(&scores(table, selection)?, frac)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankCorrMatrix {
    pub budgets: Vec<usize>,
    pub top_fracs: Vec<f64>,
    /// `rho[i][j]`: budget `budgets[i]`, fraction `top_fracs[j]`.
    pub rho: Vec<Vec<f64>>,
}

/// Spearman correlation between the mean validation error at each budget and
/// at the maximum budget, over the top fraction of configs.
pub fn rank_corr_budgets(
    table: &BenchTable,
    budgets: &[usize],
    top_fracs: &[f64],
    selection: TopSelection,
) -> Result<RankCorrMatrix> {
    let max = table.max_epochs();
    let final_valid = table.mean_metric_all(Metric::Valid, max)?;
    let score = scores(table, selection)?;
    let subsets = top_fracs.iter().map(|&f| best_k(&score, f)).collect::<Result<Vec<_>>>()?;
    let mut rho = Vec::with_capacity(budgets.len());
    for &b in budgets {
        let at_b = table.mean_metric_all(Metric::Valid, b)?;
        let row = subsets
            .iter()
            .map(|subset| {
                let xs: Vec<f64> = subset.iter().map(|&i| at_b[i]).collect();
                let ys: Vec<f64> = subset.iter().map(|&i| final_valid[i]).collect();
                spearman(&xs, &ys)
            })
            .collect::<Result<Vec<_>>>()?;
        rho.push(row);
    }
    Ok(RankCorrMatrix {
        budgets: budgets.to_vec(),
        top_fracs: top_fracs.to_vec(),
        rho,
    })
}

/// Symmetric matrix of rank correlations of mean test error between tables.
///
/// For a pair `(A, B)`, `rho_AB` is computed over the top fraction of A's
/// configs (ranked on A) and `rho_BA` over B's; the entry is their mean.
pub fn cross_dataset_rank_corr(tables: &[&BenchTable], top_frac: f64) -> Result<Vec<Vec<f64>>> {
    let Some(first) = tables.first() else {
        return Err(AnalysisError::Empty("no tables".into()));
    };
    if let Some(t) = tables.iter().find(|t| t.space() != first.space()) {
        return Err(AnalysisError::Invalid(format!(
            "table `{}` has a different configuration space than `{}`",
            t.dataset_name(),
            first.dataset_name()
        )));
    }
    let tests = tables
        .iter()
        .map(|t| t.mean_metric_all(Metric::Test, t.max_epochs()))
        .collect::<Result<Vec<_>, _>>()?;
    let tops = tests.iter().map(|s| best_k(s, top_frac)).collect::<Result<Vec<_>>>()?;
    let directed = |a: usize, b: usize| {
        let xs: Vec<f64> = tops[a].iter().map(|&i| tests[a][i]).collect();
        let ys: Vec<f64> = tops[a].iter().map(|&i| tests[b][i]).collect();
        spearman(&xs, &ys)
    };
    let n = tables.len();
    let mut m = vec![vec![1.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let r = 0.5 * (directed(a, b)? + directed(b, a)?);
            m[a][b] = r;
            m[b][a] = r;
        }
    }
    Ok(m)
}
