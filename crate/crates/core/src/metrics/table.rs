use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CommandFrequencyVector, DeltaRecord, ProcessMetricsRecord, PROCESS_COLUMNS, PRODUCT_METRICS};
use crate::{Error, Result};

/// Refactoring practice of a team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Practice {
    /// Automatic, plugin-assisted refactoring.
    AR,
    /// Manual refactoring.
    MR,
}

impl FromStr for Practice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "AR" => Ok(Practice::AR),
            "MR" => Ok(Practice::MR),
            other => Err(Error::Schema(format!("unknown practice label {other:?}"))),
        }
    }
}

impl fmt::Display for Practice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Practice::AR => "AR",
            Practice::MR => "MR",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    /// Process metrics only.
    #[default]
    Standard,
    /// Process metrics plus command frequencies.
    Extended,
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "standard" => Ok(FeatureSet::Standard),
            "extended" => Ok(FeatureSet::Extended),
            other => Err(Error::Config(format!("unknown feature set {other:?}"))),
        }
    }
}

/// One team's joined metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub team: String,
    pub process: ProcessMetricsRecord,
    pub commands: Option<CommandFrequencyVector>,
    pub delta: DeltaRecord,
    pub practice: Option<Practice>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub team: String,
    pub features: Vec<f64>,
    pub deltas: [Option<f64>; 23],
    pub practice: Option<Practice>,
}

/// Rows of named numeric features with product deltas and practice labels.
///
/// Column order: the 18 process metrics, then (extended only) one column per
/// catalog command in catalog order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub feature_set: FeatureSet,
    pub feature_columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

fn delta_header(metric: &str) -> String {
    format!("d_{metric}")
}

impl FeatureTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r.features[i]).collect())
    }

    pub fn delta_column(&self, metric: &str) -> Option<Vec<Option<f64>>> {
        let i = PRODUCT_METRICS.iter().position(|m| *m == metric)?;
        Some(self.rows.iter().map(|r| r.deltas[i]).collect())
    }

    /// Restrict to the standard process columns.
    pub fn standard(&self) -> FeatureTable {
        FeatureTable {
            feature_set: FeatureSet::Standard,
            feature_columns: self.feature_columns[..PROCESS_COLUMNS.len()].to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| TableRow { features: r.features[..PROCESS_COLUMNS.len()].to_vec(), ..r.clone() })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["team".to_string()];
        header.extend(self.feature_columns.iter().cloned());
        header.extend(PRODUCT_METRICS.iter().map(|m| delta_header(m)));
        header.push("practice".to_string());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut row = vec![r.team.clone()];
            row.extend(r.features.iter().map(|v| v.to_string()));
            row.extend(r.deltas.iter().map(|d| d.map(|v| v.to_string()).unwrap_or_default()));
            row.push(r.practice.map(|p| p.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<FeatureTable> {
        let mut reader = csv::Reader::from_reader(source);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if headers.first().map(String::as_str) != Some("team") {
            return Err(Error::Schema("feature table must start with a team column".to_string()));
        }
        let first_delta = headers
            .iter()
            .position(|h| *h == delta_header(PRODUCT_METRICS[0]))
            .ok_or_else(|| Error::Schema("feature table lacks delta columns".to_string()))?;
        let expected_tail: Vec<String> =
            PRODUCT_METRICS.iter().map(|m| delta_header(m)).chain(std::iter::once("practice".to_string())).collect();
        if headers[first_delta..] != expected_tail[..] {
            return Err(Error::Schema("feature table delta/practice columns out of order".to_string()));
        }
        let feature_columns = headers[1..first_delta].to_vec();
        if feature_columns.len() < PROCESS_COLUMNS.len()
            || feature_columns[..PROCESS_COLUMNS.len()] != PROCESS_COLUMNS.map(String::from)[..]
        {
            return Err(Error::Schema("feature table must begin with the process metric columns".to_string()));
        }
        let feature_set =
            if feature_columns.len() > PROCESS_COLUMNS.len() { FeatureSet::Extended } else { FeatureSet::Standard };
        let number = |text: &str, col: &str| -> Result<f64> {
            text.trim().parse().map_err(|_| Error::Schema(format!("{col}: {text:?} is not a number")))
        };
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let features = (1..first_delta).map(|i| number(&record[i], &headers[i])).collect::<Result<Vec<_>>>()?;
            let mut deltas = [None; 23];
            for (k, slot) in deltas.iter_mut().enumerate() {
                let cell = &record[first_delta + k];
                if !cell.trim().is_empty() {
                    *slot = Some(number(cell, &headers[first_delta + k])?);
                }
            }
            let label = &record[first_delta + 23];
            let practice = if label.trim().is_empty() { None } else { Some(label.parse()?) };
            rows.push(TableRow { team: record[0].to_string(), features, deltas, practice });
        }
        Ok(FeatureTable { feature_set, feature_columns, rows })
    }
}

/// Join per-team rows into a feature table.
pub fn assemble_feature_table(rows: &[FeatureRow], feature_set: FeatureSet) -> Result<FeatureTable> {
    let mut teams = BTreeSet::new();
    for r in rows {
        if !teams.insert(&r.team) {
            return Err(Error::Schema(format!("duplicate team id {}", r.team)));
        }
        if r.delta.team != r.team {
            return Err(Error::Schema(format!("{}: delta belongs to team {}", r.team, r.delta.team)));
        }
    }

    let mut feature_columns: Vec<String> = PROCESS_COLUMNS.iter().map(|s| s.to_string()).collect();
    if feature_set == FeatureSet::Extended {
        let labels = match rows.first() {
            Some(first) => first
                .commands
                .as_ref()
                .ok_or_else(|| Error::Schema(format!("{}: command frequencies missing", first.team)))?
                .labels
                .clone(),
            None => Vec::new(),
        };
        for r in rows {
            match &r.commands {
                None => return Err(Error::Schema(format!("{}: command frequencies missing", r.team))),
                Some(c) if c.labels != labels => {
                    return Err(Error::Schema(format!("{}: command catalog differs from other rows", r.team)))
                }
                Some(_) => {}
            }
        }
        feature_columns.extend(labels);
    }

    let table_rows = rows
        .iter()
        .map(|r| {
            let mut features = r.process.values().to_vec();
            if feature_set == FeatureSet::Extended {
                if let Some(c) = &r.commands {
                    features.extend(c.counts.iter().map(|&n| n as f64));
                }
            }
            TableRow { team: r.team.clone(), features, deltas: r.delta.deltas, practice: r.practice }
        })
        .collect();
    Ok(FeatureTable { feature_set, feature_columns, rows: table_rows })
}
