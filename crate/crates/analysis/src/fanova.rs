//! Exact functional ANOVA on a complete factorial grid.
//!
//! Every cell carries equal weight. For a subset `U` of parameters the
//! marginal `m_U(v)` is the mean over all cells that agree with `v` on `U`;
//! the component is `f_U = m_U - sum of f_W over proper subsets W of U`
//! (with `f_{} = ` the grand mean), and its variance is the mean of `f_U^2`
//! over the cells of `U`. Variances use the population convention.

use std::collections::{BTreeMap, HashMap};

use tabbench_core::{BenchTable, Metric};

use crate::stats::quantile_nearest_rank;
use crate::{AnalysisError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub variance: f64,
    /// `variance / total_variance`; 0 for a degenerate decomposition.
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub grand_mean: f64,
    /// Population variance of the (clamped) values: all orders included.
    pub total_variance: f64,
    pub n_params: usize,
    pub max_order: usize,
    /// Keyed by ascending parameter indices.
    pub components: BTreeMap<Vec<usize>, Component>,
    /// Set when the values are constant; every fraction is then 0.
    pub degenerate: bool,
}

impl Decomposition {
    pub fn component(&self, subset: &[usize]) -> Option<&Component> {
        self.components.get(subset)
    }

    pub fn fraction(&self, subset: &[usize]) -> f64 {
        self.component(subset).map_or(0.0, |c| c.fraction)
    }

    /// Sum of component variances up to `max_order`.
    pub fn explained_variance(&self) -> f64 {
        self.components.values().map(|c| c.variance).sum()
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Local mixed-radix index of the digits of `subset`, first entry most significant.
fn sub_index(digits: &[usize], subset: &[usize], cards: &[usize]) -> usize {
    subset.iter().fold(0, |acc, &j| acc * cards[j] + digits[j])
}

/// Decomposes `values` laid out in mixed-radix order over `cardinalities`
/// (first parameter most significant), for all subsets up to `max_order`.
///
/// With `clamp = Some(p)`, every value above the nearest-rank `p`-quantile
/// is replaced by that quantile first, which keeps the grid complete.
pub fn fanova_exact(
    values: &[f64],
    cardinalities: &[usize],
    max_order: usize,
    clamp: Option<f64>,
) -> Result<Decomposition> {
    let d = cardinalities.len();
    if cardinalities.contains(&0) {
        return Err(AnalysisError::Invalid("zero cardinality".into()));
    }
    let n_cells: usize = cardinalities.iter().product();
    if values.len() != n_cells {
        return Err(AnalysisError::Invalid(format!(
            "{} values for a grid of {n_cells} cells",
            values.len()
        )));
    }
    if max_order > d {
        return Err(AnalysisError::Invalid(format!("max_order {max_order} exceeds {d} parameters")));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(AnalysisError::Invalid(format!("non-finite value {bad}")));
    }

    let y: Vec<f64> = match clamp {
        None => values.to_vec(),
        Some(p) => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(AnalysisError::Invalid(format!("percentile {p} outside (0, 1]")));
            }
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let q = quantile_nearest_rank(&sorted, p)?;
            values.iter().map(|&v| v.min(q)).collect()
        }
    };

    let n = n_cells as f64;
    let grand_mean = y.iter().sum::<f64>() / n;
    let total_variance = y.iter().map(|v| (v - grand_mean) * (v - grand_mean)).sum::<f64>() / n;
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // relative to the magnitude, so constant grids with rounding residue count as flat
    let degenerate = total_variance <= (1e-12 * scale).powi(2);

    let mut digits = vec![vec![0usize; d]; n_cells];
    for (i, row) in digits.iter_mut().enumerate() {
        let mut rest = i;
        for j in (0..d).rev() {
            row[j] = rest % cardinalities[j];
            rest /= cardinalities[j];
        }
    }

    let mut effects: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    let mut components = BTreeMap::new();
    for order in 1..=max_order {
        for subset in combinations(d, order) {
            let sub_cards: Vec<usize> = subset.iter().map(|&j| cardinalities[j]).collect();
            let sub_cells: usize = sub_cards.iter().product();
            let mut sums = vec![0.0; sub_cells];
            for (row, v) in digits.iter().zip(&y) {
                sums[sub_index(row, &subset, cardinalities)] += v;
            }
            let per_cell = (n_cells / sub_cells) as f64;

            let mut local = vec![0usize; d];
            let mut f = Vec::with_capacity(sub_cells);
            for (u, s) in sums.iter().enumerate() {
                let mut rest = u;
                for (k, &j) in subset.iter().enumerate().rev() {
                    local[j] = rest % sub_cards[k];
                    rest /= sub_cards[k];
                }
                let mut value = s / per_cell - grand_mean;
                // proper nonempty subsets, as bit masks over positions in `subset`
                for mask in 1..(1usize << order) - 1 {
                    let w: Vec<usize> = (0..order).filter(|b| mask >> b & 1 == 1).map(|b| subset[b]).collect();
                    value -= effects[&w][sub_index(&local, &w, cardinalities)];
                }
                f.push(value);
            }
            let variance = f.iter().map(|v| v * v).sum::<f64>() / sub_cells as f64;
            let fraction = if degenerate { 0.0 } else { variance / total_variance };
            components.insert(subset.clone(), Component { variance, fraction });
            if order < max_order {
                effects.insert(subset, f);
            }
        }
    }

    Ok(Decomposition {
        grand_mean,
        total_variance,
        n_params: d,
        max_order,
        components,
        degenerate,
    })
}

/// [`fanova_exact`] over the per-config mean of `metric` at `budget_epochs`.
pub fn fanova_table(
    table: &BenchTable,
    metric: Metric,
    budget_epochs: usize,
    max_order: usize,
    clamp: Option<f64>,
) -> Result<Decomposition> {
    let values = table.mean_metric_all(metric, budget_epochs)?;
    fanova_exact(&values, &table.space().cardinalities(), max_order, clamp)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceReport {
    /// `(param, fraction)`, largest first.
    pub unary: Vec<(usize, f64)>,
    /// The `top_k` largest pairwise fractions, largest first.
    pub pairwise: Vec<((usize, usize), f64)>,
}

/// Ranks unary and pairwise fractions. Ties keep parameter order.
pub fn importance_report(decomp: &Decomposition, top_k: usize) -> ImportanceReport {
    let mut unary: Vec<(usize, f64)> = (0..decomp.n_params).map(|j| (j, decomp.fraction(&[j]))).collect();
    unary.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut pairwise: Vec<((usize, usize), f64)> = decomp
        .components
        .iter()
        .filter(|(k, _)| k.len() == 2)
        .map(|(k, c)| ((k[0], k[1]), c.fraction))
        .collect();
    pairwise.sort_by(|a, b| b.1.total_cmp(&a.1));
    pairwise.truncate(top_k);
    ImportanceReport { unary, pairwise }
}
