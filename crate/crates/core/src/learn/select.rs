use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    cross_validate, evaluate, fold_split, stratified_kfold, train, ClassifierSpec, Dataset, Family, TrainedModel,
    TreeParams,
};
use crate::seed;
use crate::{Error, Result};

/// Minimum score gain for a forward step.
pub const MIN_IMPROVEMENT: f64 = 1e-4;

const STREAM_SHUFFLE: u64 = 0x7368_7566;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::Config(format!("unknown search direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub selected: Vec<String>,
    pub score: f64,
    /// Accepted subsets with their scores, in search order.
    pub steps: Vec<(Vec<String>, f64)>,
}

fn subset_score(spec: &ClassifierSpec, data: &Dataset, cols: &[usize], folds: usize, seed: u64) -> Result<f64> {
    let mut cols = cols.to_vec();
    cols.sort_unstable();
    Ok(cross_validate(spec, &data.project(&cols), folds, seed)?.report.weighted.roc_area)
}

fn names(data: &Dataset, cols: &[usize]) -> Vec<String> {
    let mut cols = cols.to_vec();
    cols.sort_unstable();
    cols.iter().map(|&c| data.feature_names[c].clone()).collect()
}

/// Greedy stepwise search scored by pooled-CV weighted ROC area.
///
/// Forward search always takes the best single feature, then keeps adding
/// while a step gains more than [`MIN_IMPROVEMENT`]. Backward search drops
/// the feature whose removal scores best as long as the score does not fall,
/// and never empties the set. Ties go to the earlier column.
pub fn greedy_feature_select(
    spec: &ClassifierSpec,
    data: &Dataset,
    direction: Direction,
    folds: usize,
    seed: u64,
) -> Result<Selection> {
    if data.n_features() < 2 {
        return Err(Error::Config("feature selection needs at least 2 features".to_string()));
    }
    let m = data.n_features();
    let mut steps = Vec::new();
    let best_of = |candidates: Vec<Vec<usize>>| -> Result<Option<(Vec<usize>, f64)>> {
        let scores = candidates
            .par_iter()
            .map(|cols| subset_score(spec, data, cols, folds, seed))
            .collect::<Result<Vec<_>>>()?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        for (cols, s) in candidates.into_iter().zip(scores) {
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((cols, s));
            }
        }
        Ok(best)
    };

    let (mut current, mut score) = match direction {
        Direction::Forward => {
            let (cols, s) = best_of((0..m).map(|c| vec![c]).collect())?.expect("at least one feature");
            (cols, s)
        }
        Direction::Backward => {
            let all: Vec<usize> = (0..m).collect();
            let s = subset_score(spec, data, &all, folds, seed)?;
            (all, s)
        }
    };
    steps.push((names(data, &current), score));

    loop {
        let candidates: Vec<Vec<usize>> = match direction {
            Direction::Forward => (0..m)
                .filter(|c| !current.contains(c))
                .map(|c| {
                    let mut next = current.clone();
                    next.push(c);
                    next
                })
                .collect(),
            Direction::Backward if current.len() > 1 => {
                (0..current.len()).map(|i| [&current[..i], &current[i + 1..]].concat()).collect()
            }
            Direction::Backward => Vec::new(),
        };
        let Some((cols, s)) = best_of(candidates)? else { break };
        let accept = match direction {
            Direction::Forward => s > score + MIN_IMPROVEMENT,
            Direction::Backward => s >= score,
        };
        if !accept {
            break;
        }
        current = cols;
        score = s;
        steps.push((names(data, &current), score));
    }
    Ok(Selection { selected: names(data, &current), score, steps })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureImportance {
    pub names: Vec<String>,
    /// Normalised importance in `[0, 1]`, maximum 1 unless all are zero.
    pub values: Vec<f64>,
    /// Mean weighted-ROC drop before clipping and normalisation.
    pub raw: Vec<f64>,
}

impl FeatureImportance {
    fn from_raw(names: Vec<String>, raw: Vec<f64>) -> Self {
        let max = raw.iter().cloned().fold(0.0f64, f64::max);
        let values = raw.iter().map(|&d| if max > 0.0 { d.max(0.0) / max } else { 0.0 }).collect();
        FeatureImportance { names, values, raw }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Feature names by descending importance, ties in column order.
    pub fn ranking(&self) -> Vec<&str> {
        let mut order: Vec<usize> = (0..self.names.len()).collect();
        order.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        order.into_iter().map(|i| self.names[i].as_str()).collect()
    }
}

fn mean_drops(model: &TrainedModel, data: &Dataset, repeats: usize, seed: u64) -> Result<Vec<f64>> {
    let data = if data.feature_names == model.feature_names {
        data.clone()
    } else {
        data.project_names(&model.feature_names)?
    };
    let base = evaluate(&model.predict_proba(&data.rows)?, &data.labels, &data.class_names)?.weighted.roc_area;
    (0..data.n_features())
        .into_par_iter()
        .map(|j| {
            let mut total = 0.0;
            for r in 0..repeats {
                let mut column: Vec<f64> = data.rows.iter().map(|row| row[j]).collect();
                column.shuffle(&mut seed::child_rng(seed, STREAM_SHUFFLE, (j * repeats + r) as u64));
                let mut rows = data.rows.clone();
                for (row, v) in rows.iter_mut().zip(column) {
                    row[j] = v;
                }
                let roc = evaluate(&model.predict_proba(&rows)?, &data.labels, &data.class_names)?.weighted.roc_area;
                total += base - roc;
            }
            Ok(total / repeats as f64)
        })
        .collect()
}

/// Mean weighted-ROC drop over `repeats` shuffles of each column, clipped at
/// zero and scaled so the largest is 1.
pub fn permutation_importance(
    model: &TrainedModel,
    data: &Dataset,
    repeats: usize,
    seed: u64,
) -> Result<FeatureImportance> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".to_string()));
    }
    let raw = mean_drops(model, data, repeats, seed)?;
    Ok(FeatureImportance::from_raw(model.feature_names.clone(), raw))
}

/// Permutation importance on pooled held-out predictions.
///
/// One model is fitted per fold. For every shuffle, column `j` is permuted
/// across all rows and each row is rescored by the model of the fold that
/// held it out; the drop is measured on the pooled weighted ROC, matching
/// how [`cross_validate`] scores.
pub fn cv_permutation_importance(
    spec: &ClassifierSpec,
    data: &Dataset,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<FeatureImportance> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".to_string()));
    }
    let plan = stratified_kfold(data, folds, seed)?;
    let models = (0..folds)
        .map(|f| {
            let (tr, _) = fold_split(&plan, f);
            train(spec, &data.subset(&tr), seed::derive(seed, 1, f as u64))
                .map_err(|e| Error::Fold { fold: f, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled_roc = |rows: &[Vec<f64>]| -> Result<f64> {
        let probs: Vec<Vec<f64>> = rows.iter().zip(&plan).map(|(r, &f)| models[f].predict_row(r)).collect();
        Ok(evaluate(&probs, &data.labels, &data.class_names)?.weighted.roc_area)
    };
    let base = pooled_roc(&data.rows)?;
    let raw = (0..data.n_features())
        .into_par_iter()
        .map(|j| {
            let mut total = 0.0;
            for r in 0..repeats {
                let mut column: Vec<f64> = data.rows.iter().map(|row| row[j]).collect();
                column.shuffle(&mut seed::child_rng(seed, STREAM_SHUFFLE, (j * repeats + r) as u64));
                let mut rows = data.rows.clone();
                for (row, v) in rows.iter_mut().zip(column) {
                    row[j] = v;
                }
                total += base - pooled_roc(&rows)?;
            }
            Ok(total / repeats as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FeatureImportance::from_raw(data.feature_names.clone(), raw))
}

/// Candidate specs for a family; the forest grid includes `I=29, K=13, depth=3`.
pub fn grid(family: Family) -> Vec<ClassifierSpec> {
    let depths = [None, Some(3), Some(6)];
    match family {
        Family::Tree => depths
            .iter()
            .flat_map(|&d| [1, 3].map(|min_leaf| ClassifierSpec::Tree { tree: TreeParams { max_depth: d, min_leaf } }))
            .collect(),
        Family::Forest => {
            let mut out = Vec::new();
            for trees in [29, 100] {
                for k in [None, Some(13)] {
                    for d in depths {
                        out.push(ClassifierSpec::Forest {
                            trees,
                            features_per_split: k,
                            bootstrap: true,
                            tree: TreeParams { max_depth: d, min_leaf: 1 },
                        });
                    }
                }
            }
            out
        }
        Family::Bagging => [10, 29]
            .iter()
            .flat_map(|&trees| {
                depths.map(|d| ClassifierSpec::Bagging { trees, tree: TreeParams { max_depth: d, min_leaf: 1 } })
            })
            .collect(),
        Family::Logistic => [1e-8, 1e-4, 1e-2, 1.0].map(|ridge| ClassifierSpec::Logistic { ridge }).to_vec(),
        Family::Knn => [1, 3, 5, 7].map(|k| ClassifierSpec::Knn { k }).to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub best: ClassifierSpec,
    pub score: f64,
    pub trials: Vec<(ClassifierSpec, f64)>,
}

/// Exhaustive grid search by pooled-CV weighted ROC; ties keep the earlier
/// grid point.
pub fn grid_search(family: Family, data: &Dataset, folds: usize, seed: u64) -> Result<GridResult> {
    let specs = grid(family);
    let scores = specs
        .iter()
        .map(|s| Ok(cross_validate(s, data, folds, seed)?.report.weighted.roc_area))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(GridResult { best: specs[best].clone(), score: scores[best], trials: specs.into_iter().zip(scores).collect() })
}
