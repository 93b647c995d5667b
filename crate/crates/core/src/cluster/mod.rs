//! Nested k-means hierarchy, per-level PCA layout and cluster labels.

mod hierarchy;
mod kmeans;
mod label;
mod pca;

use thiserror::Error;

pub use hierarchy::{
    apply_labels, build_hierarchy, format_path, mean_sentiment, parse_path, ClusterNode,
    ClusterTree, HierarchyParams,
};
pub use kmeans::{kmeans, nearest, squared_distance, KMeansParams, KMeansResult};
pub use label::{
    assign_sibling_labels, attribute_contributions, label_cluster, rank_contributions, rank_topics,
    valence, LabelScheme, SiblingCandidates, FALLBACK_LABEL,
};
pub use pca::{pca_project, PcaProjection};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("insufficient points: {points} points for k={k}")]
    InsufficientPoints { points: usize, k: usize },
    #[error("{0}")]
    InvalidParameter(String),
}

/// Mean per-review sentiment over a node's members.
pub fn cluster_avg_sentiment(node: &ClusterNode, sentiments: &[f64]) -> f64 {
    mean_sentiment(sentiments, &node.members)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(members: Vec<u32>) -> ClusterNode {
        ClusterNode {
            path: vec![],
            size: members.len(),
            members,
            centroid: vec![],
            children: vec![],
            coord2d: [0.0; 2],
            avg_sentiment: 0.0,
            label: String::new(),
        }
    }

    #[test]
    fn avg_sentiment() {
        let s = [1.0, -1.0, 0.4, 0.4];
        assert_eq!(cluster_avg_sentiment(&node(vec![0, 1]), &s), 0.0);
        assert_eq!(cluster_avg_sentiment(&node(vec![2]), &s), 0.4);
        assert!((cluster_avg_sentiment(&node(vec![2, 3]), &s) - 0.4).abs() < 1e-15);
    }
}
