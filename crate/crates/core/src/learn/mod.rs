//! Classifier training, cross-validation, feature selection and importance.

mod cv;
mod dataset;
mod eval;
mod linear;
mod model;
mod select;
mod spec;
mod tree;

pub use cv::{cross_validate, fold_split, stratified_kfold, CvOutcome};
pub use dataset::Dataset;
pub use eval::{argmax, evaluate, prc_auc, roc_auc, ClassMetrics, EvalReport, REPORT_COLUMNS};
pub use linear::{Knn, Logistic, Standardizer};
pub use model::{train, ModelParams, TrainedModel, MODEL_FORMAT};
pub use select::{
    cv_permutation_importance, greedy_feature_select, grid, grid_search, permutation_importance, Direction,
    FeatureImportance, GridResult, Selection, MIN_IMPROVEMENT,
};
pub use spec::{ClassifierSpec, Family, TreeParams, MAX_TREES};
pub use tree::{DecisionTree, Node};
