use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use super::{verify_event_hash_with, EventDigest, Field, RawEvent, DEFAULT_DIGEST};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    JsonLines,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(tag: &str) -> Result<Self> {
        match tag.to_ascii_lowercase().as_str() {
            "json-lines" | "jsonl" | "ndjson" => Ok(Format::JsonLines),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown event format {other:?}"))),
        }
    }
}

impl Format {
    /// Guess the format from a file extension.
    pub fn from_extension(ext: &str) -> Option<Format> {
        match ext.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(Format::JsonLines),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

/// What to do with events whose stored hash does not verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashPolicy {
    /// Drop them and count them as rejected.
    #[default]
    Reject,
    /// Keep them; they are still counted in `hash_failures`.
    Keep,
}

/// Counters for one ingestion run. `parsed` counts every record seen.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub parsed: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub reasons: BTreeMap<String, usize>,
    pub duplicates_removed: usize,
    pub hash_failures: usize,
}

impl IngestReport {
    fn reject(&mut self, reason: String) {
        self.rejected += 1;
        *self.reasons.entry(reason).or_default() += 1;
    }

    /// Merge counters from a report over another source.
    pub fn absorb(&mut self, other: &IngestReport) {
        self.parsed += other.parsed;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.duplicates_removed += other.duplicates_removed;
        self.hash_failures += other.hash_failures;
        for (reason, n) in &other.reasons {
            *self.reasons.entry(reason.clone()).or_default() += n;
        }
    }

    /// Flat `key=value` lines; rejection reasons appear as `reason.<text>`.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "parsed={}", self.parsed);
        let _ = writeln!(out, "accepted={}", self.accepted);
        let _ = writeln!(out, "rejected={}", self.rejected);
        let _ = writeln!(out, "duplicates_removed={}", self.duplicates_removed);
        let _ = writeln!(out, "hash_failures={}", self.hash_failures);
        for (reason, n) in &self.reasons {
            let _ = writeln!(out, "reason.{}={}", reason.replace(' ', "_"), n);
        }
        out
    }
}

/// Parse a byte stream of raw events. Malformed records are counted in the
/// report and skipped; only an unreadable or non-UTF-8 source fails.
pub fn parse_events<R: Read>(mut source: R, format: Format) -> Result<(Vec<RawEvent>, IngestReport)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(|e| Error::Input(format!("cannot read event source: {e}")))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Input(format!("event source is not UTF-8: {e}")))?;

    let mut report = IngestReport::default();
    let mut events = Vec::new();
    let mut accept = |record: std::result::Result<RawEvent, String>, report: &mut IngestReport| {
        report.parsed += 1;
        match record {
            Ok(e) => {
                report.accepted += 1;
                events.push(e);
            }
            Err(reason) => report.reject(reason),
        }
    };

    match format {
        Format::JsonLines => {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                accept(record_from_json(line), &mut report);
            }
        }
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
            let headers = match reader.headers() {
                Ok(h) => h.clone(),
                // An empty file has no header row.
                Err(_) if text.trim().is_empty() => return Ok((events, report)),
                Err(e) => return Err(Error::Input(format!("bad CSV header: {e}"))),
            };
            for row in reader.records() {
                let record = match row {
                    Ok(row) if row.len() != headers.len() => Err("malformed record".to_string()),
                    Ok(row) => {
                        record_from_pairs(headers.iter().zip(row.iter()).map(|(k, v)| (k.to_string(), v.to_string())))
                    }
                    Err(_) => Err("malformed record".to_string()),
                };
                accept(record, &mut report);
            }
        }
    }
    Ok((events, report))
}

fn record_from_json(line: &str) -> std::result::Result<RawEvent, String> {
    let value: Value = serde_json::from_str(line).map_err(|_| "malformed record".to_string())?;
    let Value::Object(map) = value else {
        return Err("malformed record".to_string());
    };
    record_from_pairs(map.into_iter().filter_map(|(k, v)| {
        let text = match v {
            Value::Null => return None,
            Value::String(s) => s,
            other => other.to_string(),
        };
        Some((k, text))
    }))
}

fn record_from_pairs(pairs: impl Iterator<Item = (String, String)>) -> std::result::Result<RawEvent, String> {
    let mut known: BTreeMap<Field, String> = BTreeMap::new();
    let mut extra = BTreeMap::new();
    for (key, value) in pairs {
        match Field::from_key(key.trim()) {
            Some(field) => {
                known.insert(field, value);
            }
            None => {
                extra.insert(key, value);
            }
        }
    }
    for field in Field::REQUIRED {
        match known.get(&field) {
            None => return Err(format!("missing field {}", field.name())),
            Some(v) if v.trim().is_empty() => return Err(format!("empty field {}", field.name())),
            _ => {}
        }
    }
    let epoch = chrono::DateTime::UNIX_EPOCH;
    let mut event = RawEvent::new("", "", "", epoch, epoch);
    for (field, value) in known {
        event.set(field, value).map_err(|_| format!("invalid {}", field.name()))?;
    }
    event.extra = extra;
    event.validate()?;
    Ok(event)
}

/// Keep the first event per `(username, timestamp_begin, timestamp_end)`,
/// preserving relative order. Returns the survivors and the number dropped.
pub fn deduplicate(events: Vec<RawEvent>) -> (Vec<RawEvent>, usize) {
    let before = events.len();
    let mut seen = HashSet::with_capacity(before);
    let kept: Vec<RawEvent> = events
        .into_iter()
        .filter(|e| {
            let (user, begin, end) = e.dedup_key();
            seen.insert((user.to_string(), begin, end))
        })
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Parse, verify hashes under `policy` and deduplicate.
pub fn ingest<R: Read>(
    source: R,
    format: Format,
    policy: HashPolicy,
    digest: Option<&dyn EventDigest>,
) -> Result<(Vec<RawEvent>, IngestReport)> {
    let (events, mut report) = parse_events(source, format)?;
    let digest = digest.unwrap_or(&DEFAULT_DIGEST);
    let mut verified = Vec::with_capacity(events.len());
    for e in events {
        if verify_event_hash_with(&e, digest) {
            verified.push(e);
            continue;
        }
        report.hash_failures += 1;
        match policy {
            HashPolicy::Keep => verified.push(e),
            HashPolicy::Reject => {
                report.accepted -= 1;
                report.reject("hash mismatch".to_string());
            }
        }
    }
    let (kept, removed) = deduplicate(verified);
    report.duplicates_removed = removed;
    Ok((kept, report))
}

/// Serialize events. JSON lines use the collector's key names in collector
/// order followed by extras; CSV uses snake-case headers.
pub fn write_events<W: Write>(events: &[RawEvent], format: Format, mut out: W) -> Result<()> {
    match format {
        Format::JsonLines => {
            for e in events {
                let mut line = String::from("{");
                for (i, field) in Field::ALL.iter().enumerate() {
                    if i > 0 {
                        line.push(',');
                    }
                    line.push_str(&serde_json::to_string(field.json_name())?);
                    line.push(':');
                    line.push_str(&serde_json::to_string(&e.get(*field))?);
                }
                for (k, v) in &e.extra {
                    line.push(',');
                    line.push_str(&serde_json::to_string(k)?);
                    line.push(':');
                    line.push_str(&serde_json::to_string(v)?);
                }
                line.push('}');
                writeln!(out, "{line}")?;
            }
        }
        Format::Csv => {
            let extra_keys: std::collections::BTreeSet<&String> = events.iter().flat_map(|e| e.extra.keys()).collect();
            let mut w = csv::Writer::from_writer(out);
            let header: Vec<&str> =
                Field::ALL.iter().map(|f| f.name()).chain(extra_keys.iter().map(|k| k.as_str())).collect();
            w.write_record(&header)?;
            for e in events {
                let row: Vec<String> = Field::ALL
                    .iter()
                    .map(|f| e.get(*f).into_owned())
                    .chain(extra_keys.iter().map(|k| e.extra.get(*k).cloned().unwrap_or_default()))
                    .collect();
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
