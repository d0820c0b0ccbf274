use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::{Error, Result};

/// Product metric names, in snapshot column order.
pub const PRODUCT_METRICS: [&str; 23] = [
    "VG", "PAR", "NBD", "CA", "CE", "RMI", "RMA", "RMD", "DIT", "WMC", "NSC", "NORM", "LCOM", "NOF", "NSF", "SIX",
    "NOP", "NOC", "NOI", "NOM", "NSM", "MLOC", "TLOC",
];

const VG: usize = 0;
const TLOC: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Moment {
    T0,
    T1,
}

impl FromStr for Moment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t0" => Ok(Moment::T0),
            "t1" => Ok(Moment::T1),
            other => Err(Error::Schema(format!("unknown moment {other:?}"))),
        }
    }
}

impl Moment {
    pub fn as_str(self) -> &'static str {
        match self {
            Moment::T0 => "t0",
            Moment::T1 => "t1",
        }
    }
}

/// Product metrics of one team's project at one moment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductMetricsSnapshot {
    pub team: String,
    pub moment: Moment,
    pub values: [f64; 23],
}

impl ProductMetricsSnapshot {
    pub fn new(team: impl Into<String>, moment: Moment, values: [f64; 23]) -> Result<Self> {
        let snapshot = ProductMetricsSnapshot { team: team.into(), moment, values };
        snapshot.validate()?;
        Ok(snapshot)
    }

    pub fn get(&self, metric: &str) -> Option<f64> {
        PRODUCT_METRICS.iter().position(|m| *m == metric).map(|i| self.values[i])
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in PRODUCT_METRICS.iter().zip(self.values) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Schema(format!("{}: {name} = {v} is not a non-negative number", self.team)));
            }
        }
        if self.values[TLOC].fract() != 0.0 {
            return Err(Error::Schema(format!("{}: TLOC must be integral", self.team)));
        }
        Ok(())
    }
}

/// Relative change of each product metric between two snapshots, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRecord {
    pub team: String,
    /// `None` where the baseline value is zero.
    pub deltas: [Option<f64>; 23],
    /// Assigned by level partitioning.
    pub vg_level: Option<String>,
}

impl DeltaRecord {
    pub fn get(&self, metric: &str) -> Option<f64> {
        PRODUCT_METRICS.iter().position(|m| *m == metric).and_then(|i| self.deltas[i])
    }

    pub fn vg_delta(&self) -> Option<f64> {
        self.deltas[VG]
    }

    /// Reduction view of the VG delta: positive when complexity dropped.
    pub fn vg_reduction(&self) -> Option<f64> {
        self.deltas[VG].map(|d| -d)
    }

    /// Metrics whose delta is undefined.
    pub fn undefined(&self) -> Vec<&'static str> {
        PRODUCT_METRICS.iter().zip(&self.deltas).filter(|(_, d)| d.is_none()).map(|(m, _)| *m).collect()
    }
}

/// `(v1 - v0) / v0 * 100` per metric; zero baselines are flagged as `None`.
pub fn compute_delta(t0: &ProductMetricsSnapshot, t1: &ProductMetricsSnapshot) -> Result<DeltaRecord> {
    if t0.team != t1.team {
        return Err(Error::Schema(format!("snapshot teams differ: {} vs {}", t0.team, t1.team)));
    }
    if t0.moment != Moment::T0 || t1.moment != Moment::T1 {
        return Err(Error::Schema(format!("{}: expected a t0 and a t1 snapshot", t0.team)));
    }
    let mut deltas = [None; 23];
    for (i, slot) in deltas.iter_mut().enumerate() {
        let (v0, v1) = (t0.values[i], t1.values[i]);
        if v0 != 0.0 {
            *slot = Some((v1 - v0) / v0 * 100.0);
        }
    }
    Ok(DeltaRecord { team: t0.team.clone(), deltas, vg_level: None })
}

/// Read snapshots from CSV with a `team`, `moment` and one column per product
/// metric. Column order is free.
pub fn read_snapshots<R: Read>(source: R) -> Result<Vec<ProductMetricsSnapshot>> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("product snapshot CSV lacks column {name}")))
    };
    let team_col = col("team")?;
    let moment_col = col("moment")?;
    let metric_cols = PRODUCT_METRICS.iter().map(|m| col(m)).collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let mut values = [0.0; 23];
        for (slot, (&c, name)) in values.iter_mut().zip(metric_cols.iter().zip(PRODUCT_METRICS)) {
            *slot = row[c]
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("row {}: {name} = {:?} is not a number", line + 2, &row[c])))?;
        }
        out.push(ProductMetricsSnapshot::new(&row[team_col], row[moment_col].parse()?, values)?);
    }
    Ok(out)
}

pub fn write_snapshots<W: Write>(snapshots: &[ProductMetricsSnapshot], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["team", "moment"];
    header.extend(PRODUCT_METRICS);
    w.write_record(&header)?;
    for s in snapshots {
        let mut row = vec![s.team.clone(), s.moment.as_str().to_string()];
        row.extend(s.values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Pair each team's t0 and t1 snapshots and compute its delta.
pub fn deltas_by_team(snapshots: &[ProductMetricsSnapshot]) -> Result<BTreeMap<String, DeltaRecord>> {
    let mut pairs: BTreeMap<&str, [Option<&ProductMetricsSnapshot>; 2]> = BTreeMap::new();
    for s in snapshots {
        let slot = &mut pairs.entry(&s.team).or_default()[s.moment as usize];
        if slot.replace(s).is_some() {
            return Err(Error::Schema(format!("{}: duplicate {} snapshot", s.team, s.moment.as_str())));
        }
    }
    pairs
        .into_iter()
        .map(|(team, pair)| match pair {
            [Some(t0), Some(t1)] => Ok((team.to_string(), compute_delta(t0, t1)?)),
            _ => Err(Error::Schema(format!("{team}: needs both t0 and t1 snapshots"))),
        })
        .collect()
}
