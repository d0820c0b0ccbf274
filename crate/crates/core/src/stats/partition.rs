use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::kmeans;
use crate::{Error, Result};

/// Ordered labels over contiguous bins.
///
/// Bin `i` covers `(edges[i-1], edges[i]]`; the first bin is unbounded below
/// and the last unbounded above, so every value gets a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPartition {
    pub labels: Vec<String>,
    pub edges: Vec<f64>,
}

impl LevelPartition {
    pub fn from_edges(labels: &[&str], edges: &[f64]) -> Result<Self> {
        if labels.len() != edges.len() + 1 {
            return Err(Error::Config(format!(
                "{} labels need {} edges",
                labels.len(),
                labels.len().saturating_sub(1)
            )));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("bin edges must be finite and strictly increasing".to_string()));
        }
        Ok(LevelPartition { labels: labels.iter().map(|s| s.to_string()).collect(), edges: edges.to_vec() })
    }

    pub fn level(&self, value: f64) -> usize {
        self.edges.iter().take_while(|&&e| value > e).count()
    }

    pub fn classify(&self, value: f64) -> &str {
        &self.labels[self.level(value)]
    }
}

/// Partition values into `k` ordinal levels by 1-D k-means.
///
/// Clusters are ordered by centroid and the edge between neighbours sits
/// midway between the largest value of the lower cluster and the smallest of
/// the upper one.
pub fn level_partition(values: &[f64], k: usize, labels: &[&str], seed: u64) -> Result<LevelPartition> {
    if labels.len() != k {
        return Err(Error::Config(format!("{k} levels need {k} labels, got {}", labels.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value".to_string()));
    }
    let distinct: BTreeSet<u64> = values.iter().map(|v| (v + 0.0).to_bits()).collect();
    if distinct.len() < k {
        return Err(Error::Data(format!("{} distinct values cannot form {k} levels", distinct.len())));
    }
    if k == 1 {
        return LevelPartition::from_edges(labels, &[]);
    }
    let points: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    let clustering = kmeans(&points, k, seed)?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| clustering.centroids[a][0].total_cmp(&clustering.centroids[b][0]));
    let extent = |c: usize| {
        let members = values.iter().zip(&clustering.assignment).filter(|(_, &a)| a == c).map(|(v, _)| *v);
        members.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let edges: Vec<f64> = order.windows(2).map(|w| (extent(w[0]).1 + extent(w[1]).0) / 2.0).collect();
    LevelPartition::from_edges(labels, &edges)
}
