use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::seed;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid.
    pub distortion: f64,
    /// Distortion after each assignment step.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Data("no points to cluster".to_string()));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::Data("points must share a non-zero dimension".to_string()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite coordinate".to_string()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::Config(format!("k must lie in [1, {}], got {k}", points.len())));
    }
    Ok(())
}

fn plus_plus_seeds<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.gen_range(0..points.len())
        };
        centroids.push(points[pick].clone());
        for (slot, p) in d2.iter_mut().zip(points) {
            *slot = slot.min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// One k-means++ seeded Lloyd run.
///
/// A cluster that empties is re-seeded at the point farthest from its
/// current centroid.
pub fn kmeans_single(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    check_points(points, k)?;
    let mut rng = seed::rng(seed);
    let mut centroids = plus_plus_seeds(points, k, &mut rng);
    let dim = points[0].len();
    let mut assignment = vec![usize::MAX; points.len()];
    let mut history = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut distortion = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centroids);
            distortion += d;
            if assignment[i] != j {
                assignment[i] = j;
                changed = true;
            }
        }
        history.push(distortion);
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assignment) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..points.len()).filter(|&i| counts[assignment[i]] > 1).max_by(|&a, &b| {
                    let da = sq_dist(&points[a], &centroids[assignment[a]]);
                    let db = sq_dist(&points[b], &centroids[assignment[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                });
                if let Some(i) = far {
                    counts[assignment[i]] -= 1;
                    counts[j] = 1;
                    assignment[i] = j;
                    centroids[j] = points[i].clone();
                }
            }
        }
    }

    let distortion = points.iter().zip(&assignment).map(|(p, &j)| sq_dist(p, &centroids[j])).sum();
    Ok(Clustering { k, assignment, centroids, distortion, history })
}

/// Best of [`RESTARTS`] seeded runs by distortion (earliest restart on ties).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    check_points(points, k)?;
    let runs = (0..RESTARTS as u64)
        .into_par_iter()
        .map(|r| kmeans_single(points, k, seed::derive(seed, k as u64, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.distortion < runs[best].distortion {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElbowResult {
    pub ks: Vec<usize>,
    pub distortions: Vec<f64>,
    pub chosen: usize,
}

/// Distortion curve over `k_range` and the k farthest from the chord joining
/// the curve's endpoints, with both axes scaled to [0, 1].
pub fn elbow_select(points: &[Vec<f64>], k_range: &[usize], seed: u64) -> Result<ElbowResult> {
    if k_range.len() < 3 {
        return Err(Error::Config(format!("elbow selection needs at least 3 values of k, got {}", k_range.len())));
    }
    if k_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("k range must be strictly increasing".to_string()));
    }
    let distortions =
        k_range.iter().map(|&k| kmeans(points, k, seed).map(|c| c.distortion)).collect::<Result<Vec<_>>>()?;

    let (k0, k1) = (k_range[0] as f64, k_range[k_range.len() - 1] as f64);
    let dmax = distortions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dmin = distortions.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = if dmax > dmin { dmax - dmin } else { 1.0 };
    let xy: Vec<(f64, f64)> =
        k_range.iter().zip(&distortions).map(|(&k, &d)| ((k as f64 - k0) / (k1 - k0), (d - dmin) / span)).collect();
    let (a, b) = (xy[0], xy[xy.len() - 1]);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let norm = (dx * dx + dy * dy).sqrt();
    let mut chosen = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &(x, y)) in xy.iter().enumerate() {
        let dist = ((dy * (x - a.0)) - (dx * (y - a.1))).abs() / norm;
        if dist > best + 1e-12 {
            best = dist;
            chosen = i;
        }
    }
    Ok(ElbowResult { ks: k_range.to_vec(), distortions, chosen: k_range[chosen] })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilhouetteReport {
    pub values: Vec<f64>,
    pub mean: f64,
}

/// Euclidean silhouette; points in singleton clusters score 0.
pub fn silhouette_score(points: &[Vec<f64>], assignment: &[usize]) -> Result<SilhouetteReport> {
    if points.len() != assignment.len() {
        return Err(Error::Data("assignment length differs from point count".to_string()));
    }
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignment {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Data("silhouette needs at least 2 non-empty clusters".to_string()));
    }
    if sizes.contains(&0) {
        return Err(Error::Data("cluster indices must be contiguous and non-empty".to_string()));
    }
    let values: Vec<f64> = (0..points.len())
        .map(|i| {
            let own = assignment[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[assignment[j]] += sq_dist(&points[i], p).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k).filter(|&c| c != own).map(|c| sums[c] / sizes[c] as f64).fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(SilhouetteReport { values, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn well_separated_pairs() {
        let c = kmeans(&pts(&[0.0, 0.1, 10.0, 10.1]), 2, 1).unwrap();
        assert_eq!(c.assignment[0], c.assignment[1]);
        assert_eq!(c.assignment[2], c.assignment[3]);
        assert_ne!(c.assignment[0], c.assignment[2]);
    }

    #[test]
    fn k_equal_to_n_has_zero_distortion() {
        let c = kmeans(&pts(&[1.0, 5.0, 2.0, 9.0]), 4, 3).unwrap();
        assert_eq!(c.distortion, 0.0);
    }

    #[test]
    fn duplicate_points_with_large_k() {
        let c = kmeans_single(&pts(&[1.0, 1.0, 1.0, 2.0]), 3, 0).unwrap();
        assert_eq!(c.distortion, 0.0);
        assert_eq!(c.assignment.len(), 4);
    }

    #[test]
    fn bad_inputs() {
        assert!(kmeans(&[], 1, 0).is_err());
        assert!(kmeans(&pts(&[1.0]), 2, 0).is_err());
        assert!(kmeans(&[vec![1.0], vec![1.0, 2.0]], 1, 0).is_err());
        assert!(elbow_select(&pts(&[1.0, 2.0, 3.0]), &[2, 3], 0).is_err());
        assert!(silhouette_score(&pts(&[1.0, 2.0]), &[0, 0]).is_err());
    }

    #[test]
    fn two_tight_blobs_score_near_one() {
        let p = pts(&[0.0, 0.01, 0.02, 100.0, 100.01, 100.02]);
        let s = silhouette_score(&p, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!(s.mean >= 0.95);
    }

    #[test]
    fn identical_points_score_zero() {
        // a(i) = b(i) = 0 for every point.
        let p = pts(&[3.0; 4]);
        let s = silhouette_score(&p, &[0, 0, 1, 1]).unwrap();
        assert!(s.mean <= 0.0);
    }

    #[test]
    fn singleton_scores_zero() {
        let s = silhouette_score(&pts(&[0.0, 1.0, 1.1]), &[0, 1, 1]).unwrap();
        assert_eq!(s.values[0], 0.0);
    }

    proptest! {
        #[test]
        fn lloyd_history_never_increases(v in prop::collection::vec(-50.0f64..50.0, 3..40), k in 1usize..4, seed in 0u64..50) {
            let p = pts(&v);
            let c = kmeans_single(&p, k, seed).unwrap();
            for w in c.history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            prop_assert_eq!(&c, &kmeans_single(&p, k, seed).unwrap());
            for (pt, &j) in p.iter().zip(&c.assignment) {
                let (best, d) = nearest(pt, &c.centroids);
                prop_assert!(sq_dist(pt, &c.centroids[j]) <= d + 1e-9 || best == j);
            }
        }

        #[test]
        fn silhouette_values_bounded(v in prop::collection::vec(-10.0f64..10.0, 4..30), seed in 0u64..20) {
            let p = pts(&v);
            let c = kmeans(&p, 2, seed).unwrap();
            if let Ok(s) = silhouette_score(&p, &c.assignment) {
                prop_assert!(s.values.iter().all(|x| (-1.0..=1.0).contains(x)));
            }
        }
    }
}
