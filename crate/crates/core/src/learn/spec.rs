use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Tree,
    Forest,
    Bagging,
    Logistic,
    Knn,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(Family::Tree),
            "forest" => Ok(Family::Forest),
            "bagging" => Ok(Family::Bagging),
            "logistic" => Ok(Family::Logistic),
            "knn" => Ok(Family::Knn),
            other => Err(Error::Config(format!("unknown classifier family {other:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Tree => "tree",
            Family::Forest => "forest",
            Family::Bagging => "bagging",
            Family::Logistic => "logistic",
            Family::Knn => "knn",
        })
    }
}

/// Growth limits shared by every tree-based family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum depth; `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Tree {
        #[serde(flatten)]
        tree: TreeParams,
    },
    Forest {
        /// Number of trees (`I`).
        trees: usize,
        /// Candidate features per split (`K`); `None` uses `floor(log2 m) + 1`.
        /// Values above the feature count are clipped.
        features_per_split: Option<usize>,
        bootstrap: bool,
        #[serde(flatten)]
        tree: TreeParams,
    },
    Bagging {
        trees: usize,
        #[serde(flatten)]
        tree: TreeParams,
    },
    Logistic {
        ridge: f64,
    },
    Knn {
        k: usize,
    },
}

pub const MAX_TREES: usize = 1000;

impl ClassifierSpec {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Tree => ClassifierSpec::Tree { tree: TreeParams::default() },
            Family::Forest => ClassifierSpec::Forest {
                trees: 100,
                features_per_split: None,
                bootstrap: true,
                tree: TreeParams::default(),
            },
            Family::Bagging => ClassifierSpec::Bagging { trees: 10, tree: TreeParams::default() },
            Family::Logistic => ClassifierSpec::Logistic { ridge: 1e-8 },
            Family::Knn => ClassifierSpec::Knn { k: 1 },
        }
    }

    /// Forest configured with the `-I 29 -K 13 -depth 3` setting.
    pub fn listing_forest() -> Self {
        ClassifierSpec::Forest {
            trees: 29,
            features_per_split: Some(13),
            bootstrap: true,
            tree: TreeParams { max_depth: Some(3), min_leaf: 1 },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ClassifierSpec::Tree { .. } => Family::Tree,
            ClassifierSpec::Forest { .. } => Family::Forest,
            ClassifierSpec::Bagging { .. } => Family::Bagging,
            ClassifierSpec::Logistic { .. } => Family::Logistic,
            ClassifierSpec::Knn { .. } => Family::Knn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_tree = |t: &TreeParams| {
            if t.min_leaf == 0 {
                return Err(Error::Config("min_leaf must be at least 1".to_string()));
            }
            if t.max_depth == Some(0) {
                return Err(Error::Config("max_depth must be at least 1".to_string()));
            }
            Ok(())
        };
        let check_trees = |n: usize| {
            if n == 0 || n > MAX_TREES {
                return Err(Error::Config(format!("tree count must lie in [1, {MAX_TREES}], got {n}")));
            }
            Ok(())
        };
        match self {
            ClassifierSpec::Tree { tree } => check_tree(tree),
            ClassifierSpec::Forest { trees, features_per_split, tree, .. } => {
                check_trees(*trees)?;
                if *features_per_split == Some(0) {
                    return Err(Error::Config("features per split must be at least 1".to_string()));
                }
                check_tree(tree)
            }
            ClassifierSpec::Bagging { trees, tree } => {
                check_trees(*trees)?;
                check_tree(tree)
            }
            ClassifierSpec::Logistic { ridge } => {
                if !ridge.is_finite() || *ridge < 0.0 {
                    return Err(Error::Config(format!("ridge must be finite and non-negative, got {ridge}")));
                }
                Ok(())
            }
            ClassifierSpec::Knn { k } => {
                if *k == 0 {
                    return Err(Error::Config("k must be at least 1".to_string()));
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_tagged_and_flat() {
        let s = ClassifierSpec::listing_forest();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"family":"forest","trees":29,"features_per_split":13,"bootstrap":true,"max_depth":3,"min_leaf":1}"#
        );
        assert_eq!(serde_json::from_str::<ClassifierSpec>(&json).unwrap(), s);
    }

    #[test]
    fn validation_ranges() {
        assert!(ClassifierSpec::Knn { k: 0 }.validate().is_err());
        assert!(ClassifierSpec::Logistic { ridge: -1.0 }.validate().is_err());
        assert!(ClassifierSpec::Bagging { trees: 0, tree: TreeParams::default() }.validate().is_err());
        for f in [Family::Tree, Family::Forest, Family::Bagging, Family::Logistic, Family::Knn] {
            let s = ClassifierSpec::default_for(f);
            s.validate().unwrap();
            assert_eq!(s.family(), f);
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
    }
}
