use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Numeric feature matrix with categorical labels.
///
/// `labels[i]` indexes `class_names`, which are sorted so that argmax ties
/// resolve to the lexicographically first class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new<S: AsRef<str>>(feature_names: Vec<String>, rows: Vec<Vec<f64>>, labels: &[S]) -> Result<Self> {
        let class_names: Vec<String> =
            labels.iter().map(|l| l.as_ref().to_string()).collect::<BTreeSet<_>>().into_iter().collect();
        let labels = labels
            .iter()
            .map(|l| class_names.binary_search_by(|c| c.as_str().cmp(l.as_ref())).expect("label present"))
            .collect();
        Self::with_classes(feature_names, rows, labels, class_names)
    }

    /// Build with an explicit class list; classes may have zero rows, but at
    /// least two must be present.
    pub fn with_classes(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let data = Dataset { feature_names, rows, labels, class_names };
        data.validate()?;
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        if self.rows.len() != self.labels.len() {
            return Err(Error::Schema(format!("{} rows but {} labels", self.rows.len(), self.labels.len())));
        }
        if self.feature_names.is_empty() {
            return Err(Error::Schema("dataset has no features".to_string()));
        }
        let names: BTreeSet<&String> = self.feature_names.iter().collect();
        if names.len() != self.feature_names.len() {
            return Err(Error::Schema("duplicate feature name".to_string()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.feature_names.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} values, expected {}",
                    r.len(),
                    self.feature_names.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {i} has a missing or non-finite value")));
            }
        }
        if !self.class_names.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Schema("class names must be sorted and unique".to_string()));
        }
        if self.labels.iter().any(|&l| l >= self.class_names.len()) {
            return Err(Error::Schema("label index out of range".to_string()));
        }
        let present: BTreeSet<usize> = self.labels.iter().copied().collect();
        if present.len() < 2 {
            return Err(Error::Data("dataset needs at least 2 classes".to_string()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Subset of rows, keeping the class list. Not validated: a subset may
    /// hold a single class.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Keep only the given columns, in the given order.
    pub fn project(&self, columns: &[usize]) -> Dataset {
        Dataset {
            feature_names: columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            rows: self.rows.iter().map(|r| columns.iter().map(|&c| r[c]).collect()).collect(),
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn project_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset> {
        let columns = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n.as_ref())
                    .ok_or_else(|| Error::Schema(format!("unknown feature {}", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.project(&columns))
    }

    /// Same rows with labels reassigned.
    pub fn with_labels(&self, labels: Vec<usize>) -> Dataset {
        Dataset { labels, ..self.clone() }
    }
}
