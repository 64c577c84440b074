//! Kernel densities over grid positions.
//!
//! Categorical dimensions use the Aitchison–Aitken kernel, ordinal ones the
//! Wang–van Ryzin kernel renormalized over the finite set of positions, so
//! every density sums to one over the grid. Bandwidths are chosen by
//! leave-one-out likelihood (coordinate search over a fixed grid of values)
//! and never fall below a floor.

use rand::Rng;
use tabbench_core::space::ParamKind;
use tabbench_core::ConfigSpace;

/// Candidate bandwidths tried per dimension during cross-validation.
const BANDWIDTH_GRID: usize = 8;
const CV_SWEEPS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dim {
    pub kind: ParamKind,
    pub cardinality: usize,
}

impl Dim {
    pub fn of_space(space: &ConfigSpace) -> Vec<Dim> {
        space
            .params()
            .iter()
            .map(|p| Dim {
                kind: p.kind,
                cardinality: p.cardinality(),
            })
            .collect()
    }

    /// Largest meaningful bandwidth: uniform for categorical dimensions.
    pub fn max_bandwidth(self) -> f64 {
        match self.kind {
            ParamKind::Categorical if self.cardinality > 1 => (self.cardinality - 1) as f64 / self.cardinality as f64,
            ParamKind::Categorical => 1.0,
            ParamKind::Ordinal => 1.0,
        }
    }

    /// Kernel weights over all positions for a kernel centred at `center`.
    pub fn kernel_row(self, lambda: f64, center: usize) -> Vec<f64> {
        let c = self.cardinality;
        if c == 1 {
            return vec![1.0];
        }
        match self.kind {
            ParamKind::Categorical => (0..c)
                .map(|x| if x == center { 1.0 - lambda } else { lambda / (c - 1) as f64 })
                .collect(),
            ParamKind::Ordinal => {
                // (1 - lambda) is common to every weight and cancels in the
                // normalization, which keeps lambda = 1 well defined
                let raw: Vec<f64> = (0..c)
                    .map(|x| {
                        if x == center {
                            1.0
                        } else {
                            0.5 * lambda.powi(x.abs_diff(center) as i32)
                        }
                    })
                    .collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / total).collect()
            }
        }
    }

    /// `table[center][x]`.
    fn kernel_table(self, lambda: f64) -> Vec<Vec<f64>> {
        (0..self.cardinality).map(|c| self.kernel_row(lambda, c)).collect()
    }

    fn bandwidth_grid(self, floor: f64) -> Vec<f64> {
        let hi = self.max_bandwidth();
        if floor >= hi {
            return vec![hi];
        }
        (0..BANDWIDTH_GRID)
            .map(|k| floor + (hi - floor) * k as f64 / (BANDWIDTH_GRID - 1) as f64)
            .collect()
    }
}

fn sample_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * row.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, w) in row.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// Multivariate product-kernel density.
#[derive(Clone, Debug)]
pub struct ProductKde {
    dims: Vec<Dim>,
    data: Vec<Vec<usize>>,
    bandwidths: Vec<f64>,
    tables: Vec<Vec<Vec<f64>>>,
}

impl ProductKde {
    pub fn with_bandwidths(dims: &[Dim], data: Vec<Vec<usize>>, bandwidths: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "density needs data");
        assert_eq!(bandwidths.len(), dims.len());
        let tables = dims.iter().zip(&bandwidths).map(|(d, &l)| d.kernel_table(l)).collect();
        ProductKde {
            dims: dims.to_vec(),
            data,
            bandwidths,
            tables,
        }
    }

    /// Fits bandwidths by maximizing the leave-one-out log likelihood,
    /// one dimension at a time, never below `min_bandwidth`.
    pub fn fit(dims: &[Dim], data: Vec<Vec<usize>>, min_bandwidth: f64) -> Self {
        let grids: Vec<Vec<f64>> = dims.iter().map(|d| d.bandwidth_grid(min_bandwidth)).collect();
        let mut choice: Vec<usize> = grids.iter().map(|g| g.len() / 2).collect();
        let n = data.len();
        if n >= 2 {
            let tables: Vec<Vec<Vec<Vec<f64>>>> = dims
                .iter()
                .zip(&grids)
                .map(|(d, g)| g.iter().map(|&l| d.kernel_table(l)).collect())
                .collect();
            // pairwise kernel products under the current bandwidths
            let mut k = vec![1.0; n * n];
            for (d, t) in tables.iter().enumerate() {
                let tab = &t[choice[d]];
                for i in 0..n {
                    for j in 0..n {
                        k[i * n + j] *= tab[data[j][d]][data[i][d]];
                    }
                }
            }
            let loo = |k: &[f64], d: usize, cur: &Vec<Vec<f64>>, cand: &Vec<Vec<f64>>| {
                let mut total = 0.0;
                for i in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        if j != i {
                            let (a, b) = (data[j][d], data[i][d]);
                            s += k[i * n + j] * cand[a][b] / cur[a][b];
                        }
                    }
                    total += s.ln();
                }
                total
            };
            for _ in 0..CV_SWEEPS {
                for d in 0..dims.len() {
                    if grids[d].len() < 2 || dims[d].cardinality < 2 {
                        continue;
                    }
                    let cur = &tables[d][choice[d]];
                    let mut best = (choice[d], f64::NEG_INFINITY);
                    for (c, cand) in tables[d].iter().enumerate() {
                        let score = loo(&k, d, cur, cand);
                        if score > best.1 {
                            best = (c, score);
                        }
                    }
                    if best.0 != choice[d] {
                        let new = &tables[d][best.0];
                        for i in 0..n {
                            for j in 0..n {
                                let (a, b) = (data[j][d], data[i][d]);
                                k[i * n + j] *= new[a][b] / cur[a][b];
                            }
                        }
                        choice[d] = best.0;
                    }
                }
            }
        }
        let bandwidths = grids.iter().zip(&choice).map(|(g, &c)| g[c]).collect();
        ProductKde::with_bandwidths(dims, data, bandwidths)
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn n_points(&self) -> usize {
        self.data.len()
    }

    pub fn density(&self, x: &[usize]) -> f64 {
        let total: f64 = self
            .data
            .iter()
            .map(|p| {
                self.tables
                    .iter()
                    .enumerate()
                    .map(|(d, t)| t[p[d]][x[d]])
                    .product::<f64>()
            })
            .sum();
        total / self.data.len() as f64
    }

    fn inflated(&self, factor: f64) -> Vec<f64> {
        self.dims
            .iter()
            .zip(&self.bandwidths)
            .map(|(d, &l)| (l * factor).min(d.max_bandwidth()))
            .collect()
    }

    /// Draws a data point uniformly, then each coordinate from its kernel with
    /// the bandwidth multiplied by `factor` (capped at the maximum).
    pub fn sample<R: Rng + ?Sized>(&self, factor: f64, rng: &mut R) -> Vec<usize> {
        let bws = self.inflated(factor);
        let p = &self.data[rng.random_range(0..self.data.len())];
        self.dims
            .iter()
            .enumerate()
            .map(|(d, dim)| sample_row(&dim.kernel_row(bws[d], p[d]), rng))
            .collect()
    }

    /// Probability that [`sample`](Self::sample) returns `x`.
    pub fn sample_probability(&self, x: &[usize], factor: f64) -> f64 {
        let bws = self.inflated(factor);
        let total: f64 = self
            .data
            .iter()
            .map(|p| {
                self.dims
                    .iter()
                    .enumerate()
                    .map(|(d, dim)| dim.kernel_row(bws[d], p[d])[x[d]])
                    .product::<f64>()
            })
            .sum();
        total / self.data.len() as f64
    }
}

/// Product of independent one-dimensional densities, each fitted separately.
#[derive(Clone, Debug)]
pub struct UnivariateKde {
    dims: Vec<Dim>,
    /// Per dimension: the mixture weight of each position (empirical counts
    /// smoothed by the kernel), i.e. the marginal density.
    marginals: Vec<Vec<f64>>,
    bandwidths: Vec<f64>,
}

impl UnivariateKde {
    pub fn fit(dims: &[Dim], data: &[Vec<usize>], min_bandwidth: f64) -> Self {
        assert!(!data.is_empty(), "density needs data");
        let n = data.len();
        let mut marginals = Vec::with_capacity(dims.len());
        let mut bandwidths = Vec::with_capacity(dims.len());
        for (d, dim) in dims.iter().enumerate() {
            let c = dim.cardinality;
            let mut counts = vec![0.0; c];
            for p in data {
                counts[p[d]] += 1.0;
            }
            let grid = dim.bandwidth_grid(min_bandwidth);
            let mut best = (grid[grid.len() / 2], f64::NEG_INFINITY);
            if n >= 2 && c >= 2 {
                for &l in &grid {
                    let table = dim.kernel_table(l);
                    // leave-one-out via counts: remove the point's own kernel
                    let score: f64 = (0..c)
                        .filter(|&x| counts[x] > 0.0)
                        .map(|x| {
                            let s: f64 = (0..c).map(|v| counts[v] * table[v][x]).sum::<f64>() - table[x][x];
                            counts[x] * s.max(f64::MIN_POSITIVE).ln()
                        })
                        .sum();
                    if score > best.1 {
                        best = (l, score);
                    }
                }
            }
            let table = dim.kernel_table(best.0);
            let marginal: Vec<f64> = (0..c)
                .map(|x| (0..c).map(|v| counts[v] * table[v][x]).sum::<f64>() / n as f64)
                .collect();
            marginals.push(marginal);
            bandwidths.push(best.0);
        }
        UnivariateKde {
            dims: dims.to_vec(),
            marginals,
            bandwidths,
        }
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// Mixes a uniform component into every marginal, weighted as `weight`
    /// observations against the `n_points` the density was fitted on.
    pub fn with_uniform_prior(mut self, weight: f64, n_points: usize) -> Self {
        let n = n_points as f64;
        for m in &mut self.marginals {
            let u = 1.0 / m.len() as f64;
            for p in m.iter_mut() {
                *p = (n * *p + weight * u) / (n + weight);
            }
        }
        self
    }

    pub fn density(&self, x: &[usize]) -> f64 {
        self.marginals.iter().zip(x).map(|(m, &v)| m[v]).product()
    }

    /// Each coordinate independently from its marginal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.marginals.iter().map(|m| sample_row(m, rng)).collect()
    }

    pub fn dims(&self) -> &[Dim] {
        &self.dims
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tabbench_core::rng_from_seed;
    use tabbench_core::space::Hyperparameter;
    use tabbench_core::ConfigIndex;

    fn small_space() -> ConfigSpace {
        ConfigSpace::new(vec![
            Hyperparameter::ordinal("a", &[1.0, 2.0, 3.0, 4.0]),
            Hyperparameter::categorical("b", &["x", "y", "z"]),
            Hyperparameter::ordinal("c", &[0.0, 1.0]),
            Hyperparameter::categorical("d", &["only"]),
        ])
        .unwrap()
    }

    fn random_data(space: &ConfigSpace, n: usize, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| space.decode(ConfigIndex(rng.random_range(0..space.cardinality()))).unwrap())
            .collect()
    }

    #[test]
    fn kernel_rows_are_distributions() {
        for kind in [ParamKind::Ordinal, ParamKind::Categorical] {
            for c in 1..7 {
                let dim = Dim { kind, cardinality: c };
                for l in [0.0, 0.3, 0.7, dim.max_bandwidth()].into_iter().filter(|&l| l <= dim.max_bandwidth()) {
                    for center in 0..c {
                        let row = dim.kernel_row(l, center);
                        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                        assert!(row.iter().all(|&w| w >= 0.0));
                        // the centre is never less likely than any other value
                        assert!(row.iter().all(|&w| w <= row[center] + 1e-15));
                    }
                }
            }
        }
    }

    #[test]
    fn densities_sum_to_one_over_grid() {
        let space = small_space();
        let dims = Dim::of_space(&space);
        let data = random_data(&space, 15, 1);
        let multi = ProductKde::fit(&dims, data.clone(), 0.3);
        let uni = UnivariateKde::fit(&dims, &data, 0.1);
        let (mut sm, mut su) = (0.0, 0.0);
        for i in 0..space.cardinality() {
            let x = space.decode(ConfigIndex(i)).unwrap();
            sm += multi.density(&x);
            su += uni.density(&x);
        }
        assert!((sm - 1.0).abs() < 1e-9);
        assert!((su - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bandwidth_floor_holds_on_adversarial_data() {
        let space = small_space();
        let dims = Dim::of_space(&space);
        // identical points push the likelihood towards zero bandwidth
        let same = vec![vec![2, 1, 0, 0]; 30];
        let kde = ProductKde::fit(&dims, same.clone(), 0.3);
        assert!(kde.bandwidths().iter().all(|&b| b >= 0.3));
        assert_eq!(kde.bandwidths()[0], 0.3);
        let best = space.encode(&[2, 1, 0, 0]).unwrap();
        let top = (0..space.cardinality())
            .max_by(|&a, &b| {
                let da = kde.density(&space.decode(ConfigIndex(a)).unwrap());
                let db = kde.density(&space.decode(ConfigIndex(b)).unwrap());
                da.total_cmp(&db)
            })
            .unwrap();
        assert_eq!(ConfigIndex(top), best);
        let uni = UnivariateKde::fit(&dims, &same, 0.1);
        assert!(uni.bandwidths().iter().all(|&b| b >= 0.1));
    }

    #[test]
    fn spread_data_prefers_wider_kernels() {
        let space = small_space();
        let dims = Dim::of_space(&space);
        let all: Vec<Vec<usize>> = (0..space.cardinality()).map(|i| space.decode(ConfigIndex(i)).unwrap()).collect();
        let kde = ProductKde::fit(&dims, all, 0.3);
        assert!((kde.bandwidths()[1] - dims[1].max_bandwidth()).abs() < 1e-12);
    }

    #[test]
    fn sample_frequencies_match_sample_probability() {
        let space = small_space();
        let dims = Dim::of_space(&space);
        let kde = ProductKde::fit(&dims, random_data(&space, 6, 2), 0.3);
        let mut rng = rng_from_seed(3);
        let draws = 40_000;
        let mut counts = vec![0usize; space.cardinality()];
        for _ in 0..draws {
            let x = kde.sample(3.0, &mut rng);
            counts[space.encode(&x).unwrap().0] += 1;
        }
        let mut total_p = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            let p = kde.sample_probability(&space.decode(ConfigIndex(i)).unwrap(), 3.0);
            total_p += p;
            let sd = (draws as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((c as f64 - draws as f64 * p).abs() < 5.0 * sd);
        }
        assert!((total_p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn univariate_matches_product_in_one_dimension() {
        let dims = [Dim { kind: ParamKind::Ordinal, cardinality: 5 }];
        let data: Vec<Vec<usize>> = [0, 1, 1, 3, 4, 4, 4].iter().map(|&v| vec![v]).collect();
        let multi = ProductKde::with_bandwidths(&dims, data.clone(), vec![0.4]);
        let uni = UnivariateKde::fit(&dims, &data, 0.4);
        let multi_fit = ProductKde::fit(&dims, data, 0.4);
        assert_eq!(multi_fit.bandwidths(), uni.bandwidths());
        let refit = ProductKde::with_bandwidths(&dims, multi.data.clone(), uni.bandwidths().to_vec());
        for x in 0..5 {
            assert!((refit.density(&[x]) - uni.density(&[x])).abs() < 1e-12);
        }
    }
}
