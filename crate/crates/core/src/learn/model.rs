use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{Knn, Logistic};
use super::tree::{DecisionTree, Grower};
use super::{ClassifierSpec, Dataset, TreeParams};
use crate::seed;
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "refmine-model/v1";

const STREAM_MEMBER: u64 = 0x7472_6565;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    /// Tree ensembles; a single tree is an ensemble of one.
    Trees {
        trees: Vec<DecisionTree>,
    },
    Logistic(Logistic),
    Knn(Knn),
}

/// Self-describing fitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub spec: ClassifierSpec,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub params: ModelParams,
}

/// Default candidate count for forests: `floor(log2 m) + 1`.
fn default_k(m: usize) -> usize {
    (usize::BITS - m.leading_zeros()) as usize
}

fn grow_ensemble(
    data: &Dataset,
    count: usize,
    bootstrap: bool,
    features_per_split: Option<usize>,
    params: TreeParams,
    master: u64,
) -> Vec<DecisionTree> {
    let grower =
        Grower { rows: &data.rows, labels: &data.labels, n_classes: data.n_classes(), params, features_per_split };
    let n = data.len();
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::child_rng(master, STREAM_MEMBER, i);
            let indices = if bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            grower.grow(indices, &mut rng)
        })
        .collect()
}

/// Fit `spec` on `data`. Identical `(spec, data, seed)` give identical models.
pub fn train(spec: &ClassifierSpec, data: &Dataset, seed: u64) -> Result<TrainedModel> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::Data("no training rows".to_string()));
    }
    if data.labels.iter().collect::<BTreeSet<_>>().len() < 2 {
        return Err(Error::Data("training data holds a single class".to_string()));
    }
    let m = data.n_features();
    let params = match spec {
        ClassifierSpec::Tree { tree } => ModelParams::Trees { trees: grow_ensemble(data, 1, false, None, *tree, seed) },
        ClassifierSpec::Forest { trees, features_per_split, bootstrap, tree } => {
            let k = features_per_split.unwrap_or_else(|| default_k(m)).min(m);
            ModelParams::Trees { trees: grow_ensemble(data, *trees, *bootstrap, Some(k), *tree, seed) }
        }
        ClassifierSpec::Bagging { trees, tree } => {
            ModelParams::Trees { trees: grow_ensemble(data, *trees, true, None, *tree, seed) }
        }
        ClassifierSpec::Logistic { ridge } => {
            ModelParams::Logistic(Logistic::fit(&data.rows, &data.labels, data.n_classes(), *ridge))
        }
        ClassifierSpec::Knn { k } => ModelParams::Knn(Knn::fit(&data.rows, &data.labels, data.n_classes(), *k)),
    };
    Ok(TrainedModel {
        format: MODEL_FORMAT.to_string(),
        spec: spec.clone(),
        feature_names: data.feature_names.clone(),
        class_names: data.class_names.clone(),
        seed,
        params,
    })
}

impl TrainedModel {
    /// Class distribution for one row in training column order.
    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        match &self.params {
            ModelParams::Trees { trees } => {
                let mut p = vec![0.0; self.class_names.len()];
                for t in trees {
                    for (a, b) in p.iter_mut().zip(t.predict(x)) {
                        *a += b;
                    }
                }
                p.iter_mut().for_each(|v| *v /= trees.len() as f64);
                p
            }
            ModelParams::Logistic(m) => m.predict(x),
            ModelParams::Knn(m) => m.predict(x),
        }
    }

    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if let Some(r) = rows.iter().find(|r| r.len() != self.feature_names.len()) {
            return Err(Error::Schema(format!(
                "row has {} values, model expects {}",
                r.len(),
                self.feature_names.len()
            )));
        }
        Ok(rows.iter().map(|r| self.predict_row(r)).collect())
    }

    /// Predict a dataset, matching columns by name.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        if data.feature_names == self.feature_names {
            return self.predict_proba(&data.rows);
        }
        self.predict_proba(&data.project_names(&self.feature_names)?.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Schema(format!("unsupported model format {:?}", model.format)));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 11) as f64, (i % 2) as f64]).collect();
        let labels: Vec<&str> = (0..30).map(|i| if i < 15 { "AR" } else { "MR" }).collect();
        Dataset::new(vec!["a".into(), "b".into(), "c".into()], rows, &labels).unwrap()
    }

    #[test]
    fn default_k_is_log2_plus_one() {
        assert_eq!(default_k(1), 1);
        assert_eq!(default_k(18), 5);
        assert_eq!(default_k(16), 5);
        assert_eq!(default_k(15), 4);
    }

    #[test]
    fn single_class_rejected() {
        let d = data();
        let one = d.subset(&[0, 1, 2]);
        assert!(train(&ClassifierSpec::default_for(super::super::Family::Tree), &one, 0).is_err());
    }

    #[test]
    fn forest_of_one_equals_tree() {
        let d = data();
        let tree = train(&ClassifierSpec::Tree { tree: TreeParams::default() }, &d, 9).unwrap();
        let forest = train(
            &ClassifierSpec::Forest {
                trees: 1,
                features_per_split: Some(3),
                bootstrap: false,
                tree: TreeParams::default(),
            },
            &d,
            9,
        )
        .unwrap();
        let probe: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.7, (i % 13) as f64, (i % 3) as f64]).collect();
        assert_eq!(tree.predict_proba(&probe).unwrap(), forest.predict_proba(&probe).unwrap());
    }

    #[test]
    fn forest_is_mean_of_members() {
        let d = data();
        let spec = ClassifierSpec::Forest {
            trees: 4,
            features_per_split: Some(1),
            bootstrap: true,
            tree: TreeParams::default(),
        };
        let m = train(&spec, &d, 3).unwrap();
        let ModelParams::Trees { trees } = &m.params else { panic!() };
        assert_eq!(trees.len(), 4);
        for row in &d.rows {
            let p = m.predict_row(row);
            for c in 0..2 {
                let mean = trees.iter().map(|t| t.predict(row)[c]).sum::<f64>() / 4.0;
                assert!((p[c] - mean).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let d = data();
        for f in ["tree", "forest", "bagging", "logistic", "knn"] {
            let spec = ClassifierSpec::default_for(f.parse().unwrap());
            let a = train(&spec, &d, 5).unwrap();
            let b = train(&spec, &d, 5).unwrap();
            assert_eq!(a, b);
            let json = a.to_json().unwrap();
            assert_eq!(TrainedModel::from_json(&json).unwrap(), a);
            for p in a.predict_proba(&d.rows).unwrap() {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn predict_by_name_reorders_columns() {
        let d = data();
        let m = train(&ClassifierSpec::default_for(super::super::Family::Tree), &d, 1).unwrap();
        let reordered = d.project_names(&["c", "a", "b"]).unwrap();
        assert_eq!(m.predict_dataset(&reordered).unwrap(), m.predict_proba(&d.rows).unwrap());
        assert!(m.predict_proba(&[vec![1.0]]).is_err());
    }
}
