use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Largest sample size handled by exhaustive enumeration.
pub const EXACT_MAX_N: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    /// Exact for `n <= 9`, t-approximation above.
    #[default]
    Auto,
    #[serde(alias = "exact")]
    ExactPermutation,
    #[serde(alias = "t")]
    TApprox,
}

impl FromStr for PValueMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(PValueMethod::Auto),
            "exact" | "exact-permutation" => Ok(PValueMethod::ExactPermutation),
            "t" | "t-approx" => Ok(PValueMethod::TApprox),
            other => Err(Error::Config(format!("unknown p-value method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PValue {
    pub p: f64,
    /// Set when `|rho| = 1` under the t-approximation, where the statistic
    /// is infinite and `p = 0` is only a finite-sample idealisation.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub significant: bool,
    pub degenerate: bool,
}

/// 1-based ranks; tied values share the average of their positions.
pub fn rank_average(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Data(format!("series lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Data(format!("need at least 3 paired values, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in series".to_string()));
    }
    pearson(&rank_average(x), &rank_average(y)).ok_or_else(|| Error::Data("zero rank variance".to_string()))
}

/// Histograms of `sum d^2` over all permutations of `1..=n`, for `n <= 9`.
fn permutation_histograms() -> &'static [Vec<u64>] {
    static CACHE: OnceLock<Vec<Vec<u64>>> = OnceLock::new();
    CACHE.get_or_init(|| {
        (0..=EXACT_MAX_N)
            .map(|n| {
                let max = n * (n * n).saturating_sub(1) / 3;
                let mut hist = vec![0u64; max + 1];
                let mut perm: Vec<usize> = (0..n).collect();
                // Heap's algorithm, iterative form.
                let mut c = vec![0usize; n];
                let d2 = |p: &[usize]| p.iter().enumerate().map(|(i, &v)| (i.abs_diff(v)).pow(2)).sum::<usize>();
                hist[d2(&perm)] += 1;
                let mut i = 0;
                while i < n {
                    if c[i] < i {
                        if i % 2 == 0 {
                            perm.swap(0, i);
                        } else {
                            perm.swap(c[i], i);
                        }
                        hist[d2(&perm)] += 1;
                        c[i] += 1;
                        i = 0;
                    } else {
                        c[i] = 0;
                        i += 1;
                    }
                }
                hist
            })
            .collect()
    })
}

fn exact_p(rho: f64, n: usize) -> f64 {
    let hist = &permutation_histograms()[n];
    let denom = (n * (n * n - 1)) as f64;
    let total: u64 = hist.iter().sum();
    let hits: u64 = hist
        .iter()
        .enumerate()
        .filter(|(s, _)| (1.0 - 6.0 * *s as f64 / denom).abs() >= rho.abs() - 1e-12)
        .map(|(_, c)| c)
        .sum();
    hits as f64 / total as f64
}

/// Two-sided p-value for the null of no monotonic association.
pub fn spearman_p_value(rho: f64, n: usize, method: PValueMethod) -> Result<PValue> {
    if n < 3 {
        return Err(Error::Data(format!("need n >= 3, got {n}")));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Data(format!("rho {rho} outside [-1, 1]")));
    }
    let method = match method {
        PValueMethod::Auto if n <= EXACT_MAX_N => PValueMethod::ExactPermutation,
        PValueMethod::Auto => PValueMethod::TApprox,
        m => m,
    };
    match method {
        PValueMethod::ExactPermutation => {
            if n > EXACT_MAX_N {
                return Err(Error::Config(format!("exact permutation p-values support n <= {EXACT_MAX_N}, got {n}")));
            }
            Ok(PValue { p: exact_p(rho, n), degenerate: false })
        }
        _ => {
            if rho.abs() >= 1.0 {
                return Ok(PValue { p: 0.0, degenerate: true });
            }
            let df = (n - 2) as f64;
            let t = rho * (df / (1.0 - rho * rho)).sqrt();
            let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Data(e.to_string()))?;
            let p = 2.0 * (1.0 - dist.cdf(t.abs()));
            Ok(PValue { p: p.clamp(0.0, 1.0), degenerate: false })
        }
    }
}

/// Rho, p-value and significance decision at `alpha`.
pub fn spearman(x: &[f64], y: &[f64], alpha: f64, method: PValueMethod) -> Result<CorrelationResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let rho = spearman_rho(x, y)?;
    let p = spearman_p_value(rho, x.len(), method)?;
    Ok(CorrelationResult { rho, p_value: p.p, n: x.len(), significant: p.p < alpha, degenerate: p.degenerate })
}

/// Spearman over pairwise-complete observations; `None` when fewer than
/// three pairs remain or either side has no rank variance.
pub fn correlate(
    x: &[Option<f64>],
    y: &[Option<f64>],
    alpha: f64,
    method: PValueMethod,
) -> Result<Option<CorrelationResult>> {
    let (a, b): (Vec<f64>, Vec<f64>) = x.iter().zip(y).filter_map(|(a, b)| Some(((*a)?, (*b)?))).unzip();
    if a.len() < 3 {
        return Ok(None);
    }
    match spearman(&a, &b, alpha, method) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Data(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Rectangular correlation matrix between two groups of named series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<Option<CorrelationResult>>>,
}

pub fn correlation_matrix(
    rows: &[(String, Vec<Option<f64>>)],
    columns: &[(String, Vec<Option<f64>>)],
    alpha: f64,
    method: PValueMethod,
) -> Result<CorrelationMatrix> {
    let cells = rows
        .iter()
        .map(|(_, x)| columns.iter().map(|(_, y)| correlate(x, y, alpha, method)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationMatrix {
        rows: rows.iter().map(|(n, _)| n.clone()).collect(),
        columns: columns.iter().map(|(n, _)| n.clone()).collect(),
        cells,
    })
}

impl CorrelationMatrix {
    fn write_with<W: Write>(&self, out: W, cell: impl Fn(&CorrelationResult) -> Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["metric".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.rows.iter().zip(&self.cells) {
            let mut record = vec![name.clone()];
            record.extend(row.iter().map(|c| c.as_ref().and_then(&cell).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rho values; non-significant or undefined cells are blank.
    pub fn write_rho_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_with(out, |c| c.significant.then_some(c.rho))
    }

    /// Companion p-values for every defined cell.
    pub fn write_p_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_with(out, |c| Some(c.p_value))
    }
}
