use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TreeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        distribution: Vec<f64>,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classification tree grown on Gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

pub(crate) struct Grower<'a> {
    pub rows: &'a [Vec<f64>],
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub params: TreeParams,
    /// Candidate features per split; `None` tries all.
    pub features_per_split: Option<usize>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

impl Grower<'_> {
    /// Grow over `indices`; repeated indices act as bootstrap weights.
    pub fn grow(&self, indices: Vec<usize>, rng: &mut ChaCha8Rng) -> DecisionTree {
        let mut tree = DecisionTree { nodes: Vec::new() };
        self.build(&mut tree, indices, 0, rng);
        tree
    }

    fn counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    fn build(&self, tree: &mut DecisionTree, indices: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = tree.nodes.len();
        let counts = self.counts(&indices);
        let n = indices.len();
        tree.nodes.push(Node::Leaf { distribution: counts.iter().map(|&c| c as f64 / n as f64).collect() });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || n < 2 * self.params.min_leaf {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&indices, &counts, rng) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            indices.into_iter().partition(|&i| self.rows[i][feature] <= threshold);
        let l = self.build(tree, left, depth + 1, rng);
        let r = self.build(tree, right, depth + 1, rng);
        tree.nodes[id] = Node::Split { feature, threshold, left: l, right: r };
        id
    }

    fn candidates(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let m = self.rows.first().map_or(0, Vec::len);
        match self.features_per_split {
            Some(k) if k < m => {
                let mut picked = index::sample(rng, m, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..m).collect(),
        }
    }

    fn best_split(&self, indices: &[usize], counts: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let n = indices.len();
        let parent = gini(counts, n);
        let min_leaf = self.params.min_leaf;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = indices.to_vec();
        for f in self.candidates(rng) {
            sorted.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            for pos in 0..n - 1 {
                left[self.labels[sorted[pos]]] += 1;
                let (a, b) = (self.rows[sorted[pos]][f], self.rows[sorted[pos + 1]][f]);
                let nl = pos + 1;
                if a == b || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let impurity = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                if best.is_none_or(|(b_imp, _, _)| impurity < b_imp - 1e-12) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some((impurity, f, threshold));
                }
            }
        }
        best.filter(|(imp, _, _)| parent - imp > 1e-12).map(|(_, f, t)| (f, t))
    }
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { distribution } => return distribution,
                Node::Split { feature, threshold, left, right } => {
                    id = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, id: usize) -> usize {
            match &t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}
