//! IDE event ingestion: parsing, tamper checks, deduplication and the
//! case-structured event log.
//!
//! Raw events carry the fields emitted by the IDE collector plugin. A case is
//! one development session of one team (`team/session`) and the activity of
//! each event is the three-level path `filename|category|command`.

mod hash;
mod log;
mod parse;

pub use hash::{
    canonical_serialization, compute_hash, verify_event_hash, verify_event_hash_with, EventDigest, Md5Digest,
    Sha256Truncated, DEFAULT_DIGEST,
};
pub use log::{build_log, ActivityPath, CanonicalEvent, EventLog, Trace, EMPTY_SEGMENT};
pub use parse::{deduplicate, ingest, parse_events, write_events, Format, HashPolicy, IngestReport};

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDateTime, Timelike, Utc};

use crate::{Error, Result};

pub type Timestamp = DateTime<Utc>;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.3f";

/// Render a timestamp in the collector's `YYYY-MM-DD HH:MM:SS.mmm` form.
pub fn format_timestamp(ts: &Timestamp) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Parse a collector timestamp. Naive values are UTC; offset-bearing values
/// (RFC 3339) are normalised to UTC. Sub-millisecond digits are truncated.
pub fn parse_timestamp(text: &str) -> Result<Timestamp> {
    let text = text.trim();
    let parsed = NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S%.f")
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f"))
        .map(|naive| naive.and_utc())
        .or_else(|_| DateTime::parse_from_rfc3339(text).map(|dt| dt.with_timezone(&Utc)))
        .or_else(|_| DateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S%.f%:z").map(|dt| dt.with_timezone(&Utc)))
        .map_err(|_| Error::Input(format!("unparseable timestamp {text:?}")))?;
    let millis = parsed.nanosecond() / 1_000_000 * 1_000_000;
    Ok(parsed.with_nanosecond(millis).unwrap_or(parsed))
}

/// Fields of a raw event, in the collector's serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    Team,
    Session,
    TimestampBegin,
    TimestampEnd,
    Fullname,
    Username,
    Workspacename,
    Projectname,
    Filename,
    Extension,
    CategoryName,
    CommandName,
    CategoryId,
    CommandId,
    PlatformBranch,
    PlatformVersion,
    JavaVersion,
    Continent,
    Country,
    City,
    OsName,
    Perspective,
    Hash,
}

impl Field {
    pub const ALL: [Field; 23] = [
        Field::Team,
        Field::Session,
        Field::TimestampBegin,
        Field::TimestampEnd,
        Field::Fullname,
        Field::Username,
        Field::Workspacename,
        Field::Projectname,
        Field::Filename,
        Field::Extension,
        Field::CategoryName,
        Field::CommandName,
        Field::CategoryId,
        Field::CommandId,
        Field::PlatformBranch,
        Field::PlatformVersion,
        Field::JavaVersion,
        Field::Continent,
        Field::Country,
        Field::City,
        Field::OsName,
        Field::Perspective,
        Field::Hash,
    ];

    /// Fields that must be present and non-empty for a record to be accepted.
    pub const REQUIRED: [Field; 8] = [
        Field::Team,
        Field::Session,
        Field::TimestampBegin,
        Field::TimestampEnd,
        Field::Username,
        Field::CategoryName,
        Field::CommandName,
        Field::Hash,
    ];

    /// Snake-case name, used as the CSV header and attribute key.
    pub fn name(self) -> &'static str {
        match self {
            Field::Team => "team",
            Field::Session => "session",
            Field::TimestampBegin => "timestamp_begin",
            Field::TimestampEnd => "timestamp_end",
            Field::Fullname => "fullname",
            Field::Username => "username",
            Field::Workspacename => "workspacename",
            Field::Projectname => "projectname",
            Field::Filename => "filename",
            Field::Extension => "extension",
            Field::CategoryName => "category_name",
            Field::CommandName => "command_name",
            Field::CategoryId => "category_id",
            Field::CommandId => "command_id",
            Field::PlatformBranch => "platform_branch",
            Field::PlatformVersion => "platform_version",
            Field::JavaVersion => "java_version",
            Field::Continent => "continent",
            Field::Country => "country",
            Field::City => "city",
            Field::OsName => "os_name",
            Field::Perspective => "perspective",
            Field::Hash => "hash",
        }
    }

    /// Key used by the collector's JSON output.
    pub fn json_name(self) -> &'static str {
        match self {
            Field::CategoryName => "categoryName",
            Field::CommandName => "commandName",
            Field::CategoryId => "categoryID",
            Field::CommandId => "commandID",
            Field::JavaVersion => "java",
            other => other.name(),
        }
    }

    /// Resolve a JSON key or CSV header to a field. Both naming styles are
    /// accepted in either format.
    pub fn from_key(key: &str) -> Option<Field> {
        Field::ALL.iter().copied().find(|f| f.name() == key || f.json_name() == key)
    }
}

/// One IDE action as emitted by the collector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub team: String,
    pub session: String,
    pub timestamp_begin: Timestamp,
    pub timestamp_end: Timestamp,
    pub fullname: String,
    pub username: String,
    pub workspacename: String,
    pub projectname: String,
    pub filename: String,
    pub extension: String,
    pub category_name: String,
    pub command_name: String,
    pub category_id: String,
    pub command_id: String,
    pub platform_branch: String,
    pub platform_version: String,
    pub java_version: String,
    pub continent: String,
    pub country: String,
    pub city: String,
    pub os_name: String,
    pub perspective: String,
    pub hash: String,
    /// Fields not known to the schema, kept verbatim.
    pub extra: BTreeMap<String, String>,
}

impl RawEvent {
    /// An event with the mandatory fields set, everything else empty and no
    /// hash. Call [`RawEvent::seal`] after filling in the remaining fields.
    pub fn new(
        team: impl Into<String>,
        session: impl Into<String>,
        username: impl Into<String>,
        begin: Timestamp,
        end: Timestamp,
    ) -> Self {
        RawEvent {
            team: team.into(),
            session: session.into(),
            timestamp_begin: begin,
            timestamp_end: end,
            fullname: String::new(),
            username: username.into(),
            workspacename: String::new(),
            projectname: String::new(),
            filename: String::new(),
            extension: String::new(),
            category_name: String::new(),
            command_name: String::new(),
            category_id: String::new(),
            command_id: String::new(),
            platform_branch: String::new(),
            platform_version: String::new(),
            java_version: String::new(),
            continent: String::new(),
            country: String::new(),
            city: String::new(),
            os_name: String::new(),
            perspective: String::new(),
            hash: String::new(),
            extra: BTreeMap::new(),
        }
    }

    /// String value of a field; timestamps are rendered in collector format.
    pub fn get(&self, field: Field) -> std::borrow::Cow<'_, str> {
        use std::borrow::Cow::{Borrowed, Owned};
        match field {
            Field::Team => Borrowed(&self.team),
            Field::Session => Borrowed(&self.session),
            Field::TimestampBegin => Owned(format_timestamp(&self.timestamp_begin)),
            Field::TimestampEnd => Owned(format_timestamp(&self.timestamp_end)),
            Field::Fullname => Borrowed(&self.fullname),
            Field::Username => Borrowed(&self.username),
            Field::Workspacename => Borrowed(&self.workspacename),
            Field::Projectname => Borrowed(&self.projectname),
            Field::Filename => Borrowed(&self.filename),
            Field::Extension => Borrowed(&self.extension),
            Field::CategoryName => Borrowed(&self.category_name),
            Field::CommandName => Borrowed(&self.command_name),
            Field::CategoryId => Borrowed(&self.category_id),
            Field::CommandId => Borrowed(&self.command_id),
            Field::PlatformBranch => Borrowed(&self.platform_branch),
            Field::PlatformVersion => Borrowed(&self.platform_version),
            Field::JavaVersion => Borrowed(&self.java_version),
            Field::Continent => Borrowed(&self.continent),
            Field::Country => Borrowed(&self.country),
            Field::City => Borrowed(&self.city),
            Field::OsName => Borrowed(&self.os_name),
            Field::Perspective => Borrowed(&self.perspective),
            Field::Hash => Borrowed(&self.hash),
        }
    }

    /// Set a string field. Timestamp fields are parsed.
    pub fn set(&mut self, field: Field, value: String) -> Result<()> {
        let slot = match field {
            Field::TimestampBegin => {
                self.timestamp_begin = parse_timestamp(&value)?;
                return Ok(());
            }
            Field::TimestampEnd => {
                self.timestamp_end = parse_timestamp(&value)?;
                return Ok(());
            }
            Field::Team => &mut self.team,
            Field::Session => &mut self.session,
            Field::Fullname => &mut self.fullname,
            Field::Username => &mut self.username,
            Field::Workspacename => &mut self.workspacename,
            Field::Projectname => &mut self.projectname,
            Field::Filename => &mut self.filename,
            Field::Extension => &mut self.extension,
            Field::CategoryName => &mut self.category_name,
            Field::CommandName => &mut self.command_name,
            Field::CategoryId => &mut self.category_id,
            Field::CommandId => &mut self.command_id,
            Field::PlatformBranch => &mut self.platform_branch,
            Field::PlatformVersion => &mut self.platform_version,
            Field::JavaVersion => &mut self.java_version,
            Field::Continent => &mut self.continent,
            Field::Country => &mut self.country,
            Field::City => &mut self.city,
            Field::OsName => &mut self.os_name,
            Field::Perspective => &mut self.perspective,
            Field::Hash => &mut self.hash,
        };
        *slot = value;
        Ok(())
    }

    /// Recompute and store the hash with the default digest.
    pub fn seal(&mut self) {
        self.hash = compute_hash(self, &DEFAULT_DIGEST);
    }

    /// The deduplication key: `(username, timestamp_begin, timestamp_end)`.
    pub fn dedup_key(&self) -> (&str, Timestamp, Timestamp) {
        (&self.username, self.timestamp_begin, self.timestamp_end)
    }

    /// Check the structural invariants, returning the first violation as a
    /// human-readable reason.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for field in [Field::Team, Field::Session, Field::Username, Field::CategoryName, Field::CommandName] {
            if self.get(field).trim().is_empty() {
                return Err(format!("empty field {}", field.name()));
            }
        }
        if self.timestamp_begin > self.timestamp_end {
            return Err("timestamp_begin after timestamp_end".to_string());
        }
        if !is_hash_shaped(&self.hash) {
            return Err("invalid hash".to_string());
        }
        Ok(())
    }
}

/// `[0-9a-f]{32}`
pub fn is_hash_shaped(hash: &str) -> bool {
    hash.len() == 32 && hash.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}
