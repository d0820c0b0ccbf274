//! Rank correlation, k-means model selection and ordinal level partitioning.

mod cluster;
mod correlation;
mod partition;

pub use cluster::{elbow_select, kmeans, kmeans_single, silhouette_score, Clustering, ElbowResult, SilhouetteReport};
pub use correlation::{
    correlate, correlation_matrix, rank_average, spearman, spearman_p_value, spearman_rho, CorrelationMatrix,
    CorrelationResult, PValue, PValueMethod,
};
pub use partition::{level_partition, LevelPartition};
