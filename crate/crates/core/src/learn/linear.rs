use serde::{Deserialize, Serialize};

/// Per-column z-score fitted on training rows; constant columns get unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let m = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..m).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..m)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

pub const LOGISTIC_MAX_ITER: usize = 2000;
pub const LOGISTIC_TOLERANCE: f64 = 1e-6;

/// Multinomial logistic regression with an L2 (ridge) penalty on the
/// non-intercept weights.
///
/// Minimises `mean cross-entropy + ridge / 2 * |W|^2` by gradient descent
/// with Armijo backtracking until the largest gradient component falls below
/// [`LOGISTIC_TOLERANCE`] or [`LOGISTIC_MAX_ITER`] steps have run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub scaler: Standardizer,
    /// One row per class: intercept followed by feature weights.
    pub weights: Vec<Vec<f64>>,
}

fn softmax(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn scores(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    w.iter().map(|row| row[0] + row[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).collect()
}

fn loss_and_grad(w: &[Vec<f64>], xs: &[Vec<f64>], ys: &[usize], ridge: f64) -> (f64, Vec<Vec<f64>>) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![vec![0.0; w[0].len()]; w.len()];
    for (x, &y) in xs.iter().zip(ys) {
        let mut p = scores(w, x);
        softmax(&mut p);
        loss -= p[y].max(1e-300).ln();
        for (c, g) in grad.iter_mut().enumerate() {
            let err = p[c] - if c == y { 1.0 } else { 0.0 };
            g[0] += err;
            for (gj, xj) in g[1..].iter_mut().zip(x) {
                *gj += err * xj;
            }
        }
    }
    loss /= n;
    for (g, row) in grad.iter_mut().zip(w) {
        for v in g.iter_mut() {
            *v /= n;
        }
        for (gj, wj) in g[1..].iter_mut().zip(&row[1..]) {
            *gj += ridge * wj;
        }
        loss += 0.5 * ridge * row[1..].iter().map(|v| v * v).sum::<f64>();
    }
    (loss, grad)
}

impl Logistic {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, ridge: f64) -> Self {
        let scaler = Standardizer::fit(rows);
        let xs: Vec<Vec<f64>> = rows.iter().map(|r| scaler.apply(r)).collect();
        let m = scaler.mean.len();
        let mut w = vec![vec![0.0; m + 1]; n_classes];
        let (mut loss, mut grad) = loss_and_grad(&w, &xs, labels, ridge);
        let mut step: f64 = 1.0;
        for _ in 0..LOGISTIC_MAX_ITER {
            let gmax = grad.iter().flatten().fold(0.0f64, |a, g| a.max(g.abs()));
            if gmax < LOGISTIC_TOLERANCE {
                break;
            }
            let gsq: f64 = grad.iter().flatten().map(|g| g * g).sum();
            step = (step * 2.0).min(1e3);
            loop {
                let cand: Vec<Vec<f64>> =
                    w.iter().zip(&grad).map(|(r, g)| r.iter().zip(g).map(|(a, b)| a - step * b).collect()).collect();
                let (cl, cg) = loss_and_grad(&cand, &xs, labels, ridge);
                if cl <= loss - 0.5 * step * gsq || step < 1e-12 {
                    w = cand;
                    loss = cl;
                    grad = cg;
                    break;
                }
                step /= 2.0;
            }
            if step < 1e-12 {
                break;
            }
        }
        Logistic { scaler, weights: w }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut p = scores(&self.weights, &self.scaler.apply(x));
        softmax(&mut p);
        p
    }
}

/// Exact k-nearest-neighbour vote over standardised training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    pub scaler: Standardizer,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Knn {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, k: usize) -> Self {
        let scaler = Standardizer::fit(rows);
        Knn {
            k: k.min(rows.len()),
            n_classes,
            rows: rows.iter().map(|r| scaler.apply(r)).collect(),
            labels: labels.to_vec(),
            scaler,
        }
    }

    /// Class shares among the `k` closest rows; distance ties go to the
    /// earlier training row.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let q = self.scaler.apply(x);
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut p = vec![0.0; self.n_classes];
        for &(_, i) in &d[..self.k] {
            p[self.labels[i]] += 1.0 / self.k as f64;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_centres_and_scales() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 5.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn separable_logistic_fits_training_data() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let m = Logistic::fit(&rows, &labels, 2, 1e-8);
        for (r, &l) in rows.iter().zip(&labels) {
            let p = m.predict(r);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(usize::from(p[1] > p[0]), l);
        }
    }

    #[test]
    fn ridge_shrinks_weights() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let loose = Logistic::fit(&rows, &labels, 2, 1e-4);
        let tight = Logistic::fit(&rows, &labels, 2, 1.0);
        assert!(tight.weights[1][1].abs() < loose.weights[1][1].abs());
    }

    #[test]
    fn one_nn_memorises() {
        let rows = vec![vec![0.0], vec![1.0], vec![5.0]];
        let knn = Knn::fit(&rows, &[0, 1, 0], 2, 1);
        assert_eq!(knn.predict(&[1.1]), vec![0.0, 1.0]);
        let knn3 = Knn::fit(&rows, &[0, 1, 0], 2, 3);
        assert!((knn3.predict(&[1.1])[0] - 2.0 / 3.0).abs() < 1e-12);
    }
}
