//! Regression forest over integer-encoded grid positions.
//!
//! Each tree is grown on a bootstrap sample down to pure or single-row
//! leaves. At every node a random subset of features is searched for the
//! threshold split with the largest reduction in squared error; if none of
//! them separates the rows, the remaining features are tried as well.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Debug)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: usize,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn fit<R: Rng + ?Sized>(
        x: &[Vec<usize>],
        y: &[f64],
        rows: Vec<usize>,
        cards: &[usize],
        max_features: usize,
        rng: &mut R,
    ) -> Tree {
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut stack = vec![(0usize, rows)];
        let mut features: Vec<usize> = (0..cards.len()).collect();
        while let Some((slot, rows)) = stack.pop() {
            let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
            let pure = rows.iter().all(|&r| y[r] == y[rows[0]]);
            let split = if rows.len() < 2 || pure {
                None
            } else {
                features.shuffle(rng);
                best_split(x, y, &rows, cards, &features, max_features)
            };
            match split {
                None => nodes[slot] = Node::Leaf(mean),
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| x[i][feature] <= threshold);
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
        Tree { nodes }
    }

    pub fn predict(&self, x: &[usize]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Searches `features` in order; stops after `max_features` once a valid
/// split has been seen.
fn best_split(
    x: &[Vec<usize>],
    y: &[f64],
    rows: &[usize],
    cards: &[usize],
    features: &[usize],
    max_features: usize,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (k, &f) in features.iter().enumerate() {
        if k >= max_features && best.is_some() {
            break;
        }
        let c = cards[f];
        let mut count = vec![0usize; c];
        let mut sum = vec![0.0; c];
        for &r in rows {
            count[x[r][f]] += 1;
            sum[x[r][f]] += y[r];
        }
        let (n, total) = (rows.len(), sum.iter().sum::<f64>());
        let (mut nl, mut sl) = (0usize, 0.0);
        for t in 0..c.saturating_sub(1) {
            nl += count[t];
            sl += sum[t];
            if nl == 0 || nl == n || count[t] == 0 {
                continue;
            }
            let sr = total - sl;
            // maximizing this is minimizing the children's squared error
            let score = sl * sl / nl as f64 + sr * sr / (n - nl) as f64;
            if best.is_none_or(|b| score > b.2) {
                best = Some((f, t, score));
            }
        }
    }
    best.map(|b| (b.0, b.1))
}

#[derive(Clone, Debug)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    /// Bootstrap forest of `n_trees` trees with `max_features` candidate
    /// features per split.
    pub fn fit<R: Rng + ?Sized>(
        x: &[Vec<usize>],
        y: &[f64],
        cards: &[usize],
        n_trees: usize,
        max_features: usize,
        rng: &mut R,
    ) -> Forest {
        assert!(!x.is_empty() && x.len() == y.len());
        let trees = (0..n_trees)
            .map(|_| {
                let rows: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
                Tree::fit(x, y, rows, cards, max_features.max(1), rng)
            })
            .collect();
        Forest { trees }
    }

    /// Mean and population variance of the per-tree predictions.
    pub fn predict(&self, x: &[usize]) -> (f64, f64) {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let var = preds.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
        (mean, var)
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tabbench_core::rng_from_seed;

    #[test]
    fn single_tree_interpolates_training_data() {
        let mut rng = rng_from_seed(1);
        let cards = [4, 3, 2];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for a in 0..4 {
            for b in 0..3 {
                for c in 0..2 {
                    x.push(vec![a, b, c]);
                    y.push((a * 6 + b * 2 + c) as f64 * 0.1);
                }
            }
        }
        let rows: Vec<usize> = (0..x.len()).collect();
        let tree = Tree::fit(&x, &y, rows, &cards, 2, &mut rng);
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(tree.predict(xi), *yi);
        }
    }

    #[test]
    fn constant_targets_give_zero_variance() {
        let mut rng = rng_from_seed(2);
        let x: Vec<Vec<usize>> = (0..20).map(|i| vec![i % 5, i % 3]).collect();
        let y = vec![0.7; 20];
        let f = Forest::fit(&x, &y, &[5, 3], 10, 1, &mut rng);
        let (m, v) = f.predict(&[2, 2]);
        assert!((m - 0.7).abs() < 1e-12 && v < 1e-24);
        assert!(f.trees().iter().all(|t| t.n_nodes() == 1));
    }

    #[test]
    fn learns_a_step() {
        let mut rng = rng_from_seed(3);
        let x: Vec<Vec<usize>> = (0..60).map(|i| vec![i % 6, (i / 6) % 4]).collect();
        let y: Vec<f64> = x.iter().map(|p| if p[0] >= 3 { 1.0 } else { 0.0 }).collect();
        let f = Forest::fit(&x, &y, &[6, 4], 10, 1, &mut rng);
        assert!(f.predict(&[5, 0]).0 > 0.9);
        assert!(f.predict(&[0, 3]).0 < 0.1);
    }
}
