//! Size arithmetic for the two-hidden-layer regression network.

/// Number of trainable weights and biases of
/// `n_features -> layer1 -> layer2 -> 1`.
pub fn param_count(n_features: usize, layer1: usize, layer2: usize) -> u64 {
    let (d, h1, h2) = (n_features as u64, layer1 as u64, layer2 as u64);
    (d + 1) * h1 + (h1 + 1) * h2 + (h2 + 1)
}
