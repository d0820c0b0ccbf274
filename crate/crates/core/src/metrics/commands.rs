use std::collections::HashMap;

use serde::Serialize;

use crate::eventlog::EventLog;
use crate::{Error, Result};

const DEFAULT_CATALOG: &str = include_str!("../../data/command_catalog.txt");

/// Ordered list of `(category, command)` labels tracked as features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommandCatalog {
    entries: Vec<(String, String)>,
}

impl CommandCatalog {
    /// Parse `Category/Command` lines; blank lines and `#` comments are
    /// skipped. The category ends at the first `/`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, cmd) = line
                .split_once('/')
                .ok_or_else(|| Error::Config(format!("catalog line {}: expected Category/Command", i + 1)))?;
            let entry = (cat.trim().to_string(), cmd.trim().to_string());
            if entries.contains(&entry) {
                return Err(Error::Config(format!("catalog line {}: duplicate entry {line}", i + 1)));
            }
            entries.push(entry);
        }
        if entries.is_empty() {
            return Err(Error::Config("command catalog is empty".to_string()));
        }
        Ok(CommandCatalog { entries })
    }

    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::parse(&labels.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join("\n"))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Category/Command` labels in catalog order.
    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|(c, m)| format!("{c}/{m}")).collect()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

impl Default for CommandCatalog {
    /// The bundled catalog of commands seen in the refactoring study.
    fn default() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("bundled catalog is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommandFrequencyVector {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    /// Events matching no catalog entry.
    pub other: u64,
}

impl CommandFrequencyVector {
    pub fn get(&self, label: &str) -> Option<u64> {
        self.labels.iter().position(|l| l == label).map(|i| self.counts[i])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.other
    }
}

/// Count events per catalog entry; everything else lands in `other`.
pub fn command_frequency_vector(log: &EventLog, catalog: &CommandCatalog) -> CommandFrequencyVector {
    let index: HashMap<(&str, &str), usize> =
        catalog.entries.iter().enumerate().map(|(i, (c, m))| ((c.as_str(), m.as_str()), i)).collect();
    let mut counts = vec![0u64; catalog.len()];
    let mut other = 0;
    for e in log.events() {
        match index.get(&(e.activity_path.category(), e.activity_path.command())) {
            Some(&i) => counts[i] += 1,
            None => other += 1,
        }
    }
    CommandFrequencyVector { labels: catalog.labels(), counts, other }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::{build_log, parse_timestamp, RawEvent};

    fn log(cmds: &[(&str, &str)]) -> EventLog {
        let base = parse_timestamp("2020-01-01 00:00:00.000").unwrap();
        let events: Vec<RawEvent> = cmds
            .iter()
            .enumerate()
            .map(|(i, (c, m))| {
                let t = base + chrono::Duration::seconds(i as i64);
                let mut e = RawEvent::new("T", "s", "u", t, t);
                e.filename = "A.java".into();
                e.category_name = c.to_string();
                e.command_name = m.to_string();
                e
            })
            .collect();
        build_log(&events)
    }

    #[test]
    fn bundled_catalog_covers_named_commands() {
        let c = CommandCatalog::default();
        assert_eq!(c.len(), 33);
        let labels = c.labels();
        for l in [
            "Refactor/Java-Extract Method",
            "Eclipse View/Long Method",
            "Edit/Copy",
            "Text Editing/Delete Previous Word",
        ] {
            assert!(labels.iter().any(|x| x == l), "{l}");
        }
    }

    #[test]
    fn counts_and_other_bucket() {
        let l = log(&[("Edit", "Copy"), ("Edit", "Copy"), ("Edit", "Copy"), ("Edit", "Paste"), ("Weird", "Thing")]);
        let v = command_frequency_vector(&l, &CommandCatalog::default());
        assert_eq!(v.get("Edit/Copy"), Some(3));
        assert_eq!(v.get("Edit/Paste"), Some(1));
        assert_eq!(v.other, 1);
        assert_eq!(v.total(), l.event_count() as u64);
    }

    #[test]
    fn empty_log_is_all_zero() {
        let v = command_frequency_vector(&EventLog::default(), &CommandCatalog::default());
        assert!(v.counts.iter().all(|&c| c == 0));
        assert_eq!(v.other, 0);
    }

    #[test]
    fn catalog_parse_errors() {
        assert!(CommandCatalog::parse("# nothing\n\n").is_err());
        assert!(CommandCatalog::parse("NoSlash").is_err());
        assert!(CommandCatalog::parse("A/b\nA/b").is_err());
        let c = CommandCatalog::from_labels(&["Edit/Copy", "Compare/Select Next Change"]).unwrap();
        assert_eq!(c.labels(), ["Edit/Copy", "Compare/Select Next Change"]);
    }
}
