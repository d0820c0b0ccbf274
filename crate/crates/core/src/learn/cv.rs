use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{evaluate, train, ClassifierSpec, Dataset, EvalReport};
use crate::seed;
use crate::{Error, Result};

const STREAM_FOLDS: u64 = 0x666f_6c64;
const STREAM_FOLD_TRAIN: u64 = 0x6669_7474;

/// Fold index for every row.
///
/// Rows of each class are shuffled and dealt round-robin; the dealing
/// position carries over between classes so fold sizes differ by at most
/// one as well.
pub fn stratified_kfold(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("folds must be at least 2, got {folds}")));
    }
    let counts = data.class_counts();
    for (name, &n) in data.class_names.iter().zip(&counts) {
        if n > 0 && n < folds {
            return Err(Error::Data(format!("class {name} has {n} rows, fewer than {folds} folds")));
        }
    }
    let mut rng = seed::child_rng(seed, STREAM_FOLDS, 0);
    let mut plan = vec![0; data.len()];
    let mut next = 0;
    for c in 0..data.n_classes() {
        let mut rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == c).collect();
        rows.shuffle(&mut rng);
        for i in rows {
            plan[i] = next % folds;
            next += 1;
        }
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvOutcome {
    pub report: EvalReport,
    /// Out-of-fold class distribution for every row, in row order.
    pub probabilities: Vec<Vec<f64>>,
    pub folds: Vec<usize>,
}

/// Split rows by plan into (train, test) index lists for fold `f`.
pub fn fold_split(plan: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..plan.len()).partition(|&i| plan[i] != f)
}

/// Pooled k-fold cross-validation: every row is scored once by a model that
/// never saw it, and the pooled predictions are evaluated together.
pub fn cross_validate(spec: &ClassifierSpec, data: &Dataset, folds: usize, seed: u64) -> Result<CvOutcome> {
    spec.validate()?;
    let plan = stratified_kfold(data, folds, seed)?;
    let parts = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (tr, te) = fold_split(&plan, f);
            let model = train(spec, &data.subset(&tr), seed::derive(seed, STREAM_FOLD_TRAIN, f as u64))
                .map_err(|e| Error::Fold { fold: f, source: Box::new(e) })?;
            let probs = model.predict_proba(&data.subset(&te).rows)?;
            Ok((te, probs))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut probabilities = vec![Vec::new(); data.len()];
    for (te, probs) in parts {
        for (i, p) in te.into_iter().zip(probs) {
            probabilities[i] = p;
        }
    }
    let report = evaluate(&probabilities, &data.labels, &data.class_names)?;
    Ok(CvOutcome { report, probabilities, folds: plan })
}
