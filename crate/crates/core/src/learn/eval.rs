use std::io::Write;

use serde::Serialize;

use crate::stats::rank_average;
use crate::{Error, Result};

/// One-vs-rest figures for a class, or their support-weighted mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct ClassMetrics {
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    pub roc_area: f64,
    pub prc_area: f64,
}

impl ClassMetrics {
    fn values(&self) -> [f64; 8] {
        [
            self.tp_rate,
            self.fp_rate,
            self.precision,
            self.recall,
            self.f_measure,
            self.mcc,
            self.roc_area,
            self.prc_area,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub support: Vec<usize>,
    pub weighted: ClassMetrics,
    pub accuracy: f64,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

pub const REPORT_COLUMNS: [&str; 8] =
    ["TP Rate", "FP Rate", "Precision", "Recall", "F-Measure", "MCC", "ROC Area", "PRC Area"];

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Mann-Whitney AUC: share of positive/negative pairs ranked correctly,
/// ties counting half. `0.5` when either side is empty.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return 0.5;
    }
    let ranks = rank_average(scores);
    let sum: f64 = ranks.iter().zip(positive).filter(|(_, &b)| b).map(|(r, _)| r).sum();
    (sum - (p * (p + 1)) as f64 / 2.0) / (p * n) as f64
}

/// Area under the precision-recall curve by the trapezoid rule over
/// distinct score thresholds (descending). The curve starts at recall 0
/// with the precision of the first threshold. `0` with no positives.
pub fn prc_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let total_pos = positive.iter().filter(|&&b| b).count();
    if total_pos == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev: Option<(f64, f64)> = None;
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        let (r0, p0) = prev.unwrap_or((0.0, precision));
        area += (recall - r0) * (precision + p0) / 2.0;
        prev = Some((recall, precision));
    }
    area
}

/// Score probability rows against true labels.
pub fn evaluate(probabilities: &[Vec<f64>], labels: &[usize], class_names: &[String]) -> Result<EvalReport> {
    if probabilities.len() != labels.len() {
        return Err(Error::Data(format!("{} predictions for {} labels", probabilities.len(), labels.len())));
    }
    if labels.len() < 2 {
        return Err(Error::Data("evaluation needs at least 2 rows".to_string()));
    }
    let k = class_names.len();
    if probabilities.iter().any(|p| p.len() != k) || labels.iter().any(|&l| l >= k) {
        return Err(Error::Data("prediction width or label outside the class list".to_string()));
    }
    let predicted: Vec<usize> = probabilities.iter().map(|p| argmax(p)).collect();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&a, &p) in labels.iter().zip(&predicted) {
        confusion[a][p] += 1;
    }
    let total = labels.len() as f64;
    let support: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();

    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = confusion[c][c] as f64;
            let fn_ = support[c] as f64 - tp;
            let fp = (0..k).map(|a| confusion[a][c]).sum::<usize>() as f64 - tp;
            let tn = total - tp - fn_ - fp;
            let recall = ratio(tp, tp + fn_);
            let precision = ratio(tp, tp + fp);
            let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
            let scores: Vec<f64> = probabilities.iter().map(|p| p[c]).collect();
            let positive: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            ClassMetrics {
                tp_rate: recall,
                fp_rate: ratio(fp, fp + tn),
                precision,
                recall,
                f_measure: ratio(2.0 * precision * recall, precision + recall),
                mcc: ratio(tp * tn - fp * fn_, denom),
                roc_area: roc_auc(&scores, &positive),
                prc_area: prc_auc(&scores, &positive),
            }
        })
        .collect();

    let mut weighted = [0.0; 8];
    for (m, &s) in per_class.iter().zip(&support) {
        for (w, v) in weighted.iter_mut().zip(m.values()) {
            *w += s as f64 * v;
        }
    }
    let [tp_rate, fp_rate, precision, recall, f_measure, mcc, roc_area, prc_area] = weighted.map(|w| w / total);
    let accuracy = (0..k).map(|c| confusion[c][c]).sum::<usize>() as f64 / total;
    Ok(EvalReport {
        class_names: class_names.to_vec(),
        per_class,
        support,
        weighted: ClassMetrics { tp_rate, fp_rate, precision, recall, f_measure, mcc, roc_area, prc_area },
        accuracy,
        confusion,
    })
}

impl EvalReport {
    /// Per-class rows, a `Weighted Avg.` row and a trailing accuracy row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["Class"];
        header.extend(REPORT_COLUMNS);
        header.push("Support");
        w.write_record(&header)?;
        let rows = self.class_names.iter().map(String::as_str).zip(&self.per_class).zip(self.support.iter().copied());
        let total: usize = self.support.iter().sum();
        for ((name, m), s) in rows.chain(std::iter::once((("Weighted Avg.", &self.weighted), total))) {
            let mut record = vec![name.to_string()];
            record.extend(m.values().iter().map(|v| format!("{v:.6}")));
            record.push(s.to_string());
            w.write_record(&record)?;
        }
        let mut acc = vec!["Accuracy".to_string(), format!("{:.6}", self.accuracy)];
        acc.resize(header.len(), String::new());
        w.write_record(&acc)?;
        w.flush()?;
        Ok(())
    }
}
