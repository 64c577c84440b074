//! Statistics over benchmark tables: ECDFs, seed noise, rank correlation
//! across budgets and datasets, exact functional ANOVA, and the one-flip
//! neighborhood of a configuration.

pub mod ecdf;
mod error;
pub mod fanova;
pub mod neighbors;
pub mod noise;
pub mod rank;
pub mod stats;

pub use ecdf::Ecdf;
pub use error::{AnalysisError, Result};
pub use fanova::{fanova_exact, fanova_table, importance_report, Component, Decomposition, ImportanceReport};
pub use neighbors::{local_neighborhood, NeighborRow};
pub use noise::{noise_all, noise_std};
pub use rank::{cross_dataset_rank_corr, rank_corr_budgets, top_configs, RankCorrMatrix, TopSelection};
pub use stats::{fractional_ranks, ks_one_sided, mann_whitney_less, pearson, quantile_nearest_rank, spearman, TestResult};
