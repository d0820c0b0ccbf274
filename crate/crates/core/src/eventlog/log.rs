use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{canonical_serialization, Field, RawEvent, Timestamp};

/// Placeholder for an empty path segment, so every activity keeps three
/// non-empty levels.
pub const EMPTY_SEGMENT: &str = "-";

/// `filename | category | command`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivityPath(pub [String; 3]);

impl ActivityPath {
    pub fn new(file: &str, category: &str, command: &str) -> Self {
        let seg = |s: &str| {
            if s.trim().is_empty() {
                EMPTY_SEGMENT.to_string()
            } else {
                s.to_string()
            }
        };
        ActivityPath([seg(file), seg(category), seg(command)])
    }

    /// Label at hierarchy `level` (0..=2): the first `level + 1` segments
    /// joined by `|`.
    pub fn label(&self, level: usize) -> String {
        self.0[..=level.min(2)].join("|")
    }

    pub fn file(&self) -> &str {
        &self.0[0]
    }

    pub fn category(&self) -> &str {
        &self.0[1]
    }

    pub fn command(&self) -> &str {
        &self.0[2]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalEvent {
    /// `team/session`
    pub case_id: String,
    pub activity_path: ActivityPath,
    pub start: Timestamp,
    pub end: Timestamp,
    /// The developer (`username`).
    pub resource: String,
    /// Every other raw field by snake-case name, plus unknown extras.
    pub attributes: BTreeMap<String, String>,
}

impl CanonicalEvent {
    pub fn attr(&self, key: &str) -> &str {
        self.attributes.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn team(&self) -> &str {
        self.attr(Field::Team.name())
    }

    pub fn session(&self) -> &str {
        self.attr(Field::Session.name())
    }

    fn from_raw(raw: &RawEvent) -> Self {
        let mut attributes = raw.extra.clone();
        for field in Field::ALL {
            if matches!(
                field,
                Field::Filename
                    | Field::CategoryName
                    | Field::CommandName
                    | Field::Username
                    | Field::TimestampBegin
                    | Field::TimestampEnd
            ) {
                continue;
            }
            attributes.insert(field.name().to_string(), raw.get(field).into_owned());
        }
        CanonicalEvent {
            case_id: case_id(&raw.team, &raw.session),
            activity_path: ActivityPath::new(&raw.filename, &raw.category_name, &raw.command_name),
            start: raw.timestamp_begin,
            end: raw.timestamp_end,
            resource: raw.username.clone(),
            attributes,
        }
    }

    /// Rebuild the raw event this one was canonicalized from.
    pub fn to_raw(&self) -> RawEvent {
        let mut raw = RawEvent::new(self.team(), self.session(), &self.resource, self.start, self.end);
        raw.filename = self.activity_path.file().to_string();
        raw.category_name = self.activity_path.category().to_string();
        raw.command_name = self.activity_path.command().to_string();
        for (key, value) in &self.attributes {
            match Field::from_key(key) {
                Some(field) => {
                    // Only string fields live in attributes.
                    let _ = raw.set(field, value.clone());
                }
                None => {
                    raw.extra.insert(key.clone(), value.clone());
                }
            }
        }
        raw
    }
}

pub fn case_id(team: &str, session: &str) -> String {
    format!("{team}/{session}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<CanonicalEvent>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Activity labels at `level`, in trace order.
    pub fn labels(&self, level: usize) -> impl Iterator<Item = String> + '_ {
        self.events.iter().map(move |e| e.activity_path.label(level))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    /// Sorted by case id.
    pub traces: Vec<Trace>,
    /// Distinct activity labels at each hierarchy level.
    pub catalog: [BTreeSet<String>; 3],
}

impl EventLog {
    pub fn event_count(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = &CanonicalEvent> {
        self.traces.iter().flat_map(|t| t.events.iter())
    }

    /// All events as raw records, trace by trace.
    pub fn to_raw_events(&self) -> Vec<RawEvent> {
        self.events().map(CanonicalEvent::to_raw).collect()
    }

    /// Distinct teams, sorted.
    pub fn teams(&self) -> BTreeSet<String> {
        self.events().map(|e| e.team().to_string()).collect()
    }

    /// One sub-log per team.
    pub fn split_by_team(&self) -> BTreeMap<String, EventLog> {
        let mut grouped: BTreeMap<String, Vec<Trace>> = BTreeMap::new();
        for trace in &self.traces {
            let team = trace.events.first().map(|e| e.team().to_string()).unwrap_or_default();
            grouped.entry(team).or_default().push(trace.clone());
        }
        grouped.into_iter().map(|(team, traces)| (team, EventLog::from_traces(traces))).collect()
    }

    fn from_traces(traces: Vec<Trace>) -> Self {
        let mut catalog: [BTreeSet<String>; 3] = Default::default();
        for e in traces.iter().flat_map(|t| t.events.iter()) {
            for (level, set) in catalog.iter_mut().enumerate() {
                set.insert(e.activity_path.label(level));
            }
        }
        EventLog { traces, catalog }
    }

    /// Hex SHA-256 over the canonical serialization of every event in log
    /// order, identifying the log a model was discovered from.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for trace in &self.traces {
            hasher.update(trace.case_id.as_bytes());
            hasher.update(b"\n");
            for e in &trace.events {
                hasher.update(canonical_serialization(&e.to_raw()).as_bytes());
                hasher.update(b"\n");
            }
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Group deduplicated events into traces keyed by `team/session`, ordered by
/// start, then end, then command id, then input position.
pub fn build_log(events: &[RawEvent]) -> EventLog {
    let mut cases: BTreeMap<String, Vec<(usize, &RawEvent)>> = BTreeMap::new();
    for (index, raw) in events.iter().enumerate() {
        cases.entry(case_id(&raw.team, &raw.session)).or_default().push((index, raw));
    }
    let traces = cases
        .into_iter()
        .map(|(case_id, mut members)| {
            members.sort_by(|(ia, a), (ib, b)| {
                a.timestamp_begin
                    .cmp(&b.timestamp_begin)
                    .then(a.timestamp_end.cmp(&b.timestamp_end))
                    .then_with(|| a.command_id.cmp(&b.command_id))
                    .then(ia.cmp(ib))
            });
            Trace { case_id, events: members.into_iter().map(|(_, raw)| CanonicalEvent::from_raw(raw)).collect() }
        })
        .collect();
    EventLog::from_traces(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::{deduplicate, parse_timestamp};
    use proptest::prelude::*;

    fn ev(team: &str, session: &str, user: &str, ms: i64, cmd: &str) -> RawEvent {
        let base = parse_timestamp("2020-03-21 09:00:00.000").unwrap();
        let t = base + chrono::Duration::milliseconds(ms);
        let mut e = RawEvent::new(team, session, user, t, t + chrono::Duration::milliseconds(5));
        e.filename = "/p/A.java".into();
        e.category_name = "Edit".into();
        e.command_name = cmd.into();
        e.command_id = format!("id.{cmd}");
        e.platform_version = "4.7".into();
        e.seal();
        e
    }

    #[test]
    fn one_session_one_trace() {
        let events =
            vec![ev("T1", "s1", "u", 0, "Copy"), ev("T1", "s1", "u", 10, "Paste"), ev("T1", "s1", "u", 20, "Cut")];
        let log = build_log(&events);
        assert_eq!(log.traces.len(), 1);
        assert_eq!(log.traces[0].len(), 3);
        assert_eq!(log.traces[0].case_id, "T1/s1");
    }

    #[test]
    fn case_id_includes_session() {
        let events = vec![ev("T1", "s1", "u", 0, "Copy"), ev("T1", "s2", "u", 10, "Paste")];
        let log = build_log(&events);
        assert_eq!(log.traces.len(), 2);
        assert_eq!(log.teams().len(), 1);
    }

    #[test]
    fn catalog_levels() {
        let events = vec![ev("T1", "s1", "u", 0, "Copy"), ev("T1", "s1", "u", 10, "Paste")];
        let log = build_log(&events);
        assert_eq!(log.catalog[0].len(), 1);
        assert_eq!(log.catalog[1].iter().next().unwrap(), "/p/A.java|Edit");
        assert_eq!(log.catalog[2].len(), 2);
    }

    #[test]
    fn ties_break_on_end_then_command_id_then_position() {
        let mut a = ev("T", "s", "u", 0, "B");
        let mut b = ev("T", "s", "u", 0, "A");
        let c = ev("T", "s", "w", 0, "A");
        // a ends later than b and c.
        a.timestamp_end += chrono::Duration::milliseconds(1);
        a.seal();
        b.seal();
        let log = build_log(&[a, b, c]);
        let order: Vec<_> = log.traces[0].events.iter().map(|e| e.resource.as_str()).collect();
        assert_eq!(order, ["u", "w", "u"]);
        assert_eq!(log.traces[0].events[2].activity_path.command(), "B");
    }

    #[test]
    fn empty_segments_are_filled() {
        let p = ActivityPath::new("", "View", "Open");
        assert_eq!(p.label(2), "-|View|Open");
        assert_eq!(p.label(0), "-");
    }

    #[test]
    fn raw_round_trip_preserves_hash() {
        let e = ev("T1", "s1", "u", 0, "Copy");
        let log = build_log(std::slice::from_ref(&e));
        assert_eq!(log.to_raw_events(), vec![e]);
    }

    fn arb_events() -> impl Strategy<Value = Vec<RawEvent>> {
        prop::collection::vec((0u8..3, 0u8..3, 0u8..2, 0i64..50, 0u8..4), 0..60).prop_map(|specs| {
            specs
                .into_iter()
                .map(|(t, s, u, ms, c)| {
                    ev(&format!("T{t}"), &format!("s{s}"), &format!("u{u}"), ms * 7, &format!("C{c}"))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn build_after_dedup_is_idempotent(events in arb_events()) {
            let (deduped, _) = deduplicate(events);
            let log = build_log(&deduped);
            let (again, removed) = deduplicate(log.to_raw_events());
            prop_assert_eq!(removed, 0);
            prop_assert_eq!(build_log(&again), log.clone());
            prop_assert_eq!(log.event_count(), deduped.len());
        }

        #[test]
        fn traces_sorted_by_start(events in arb_events()) {
            let (deduped, _) = deduplicate(events);
            let log = build_log(&deduped);
            for t in &log.traces {
                prop_assert!(t.events.windows(2).all(|w| w[0].start <= w[1].start));
                prop_assert!(t.events.iter().all(|e| e.case_id == t.case_id));
            }
        }

        #[test]
        fn permutation_of_duplicate_free_input_gives_same_log(events in arb_events(), rot in 0usize..60) {
            let (deduped, _) = deduplicate(events);
            let mut rotated = deduped.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
            }
            let (rotated, _) = deduplicate(rotated);
            let a = build_log(&deduped);
            let b = build_log(&rotated);
            // Keys are unique, so ordering can only differ on exact ties, which
            // are resolved by command id and then position.
            let key = |l: &EventLog| -> BTreeSet<(String, usize)> {
                l.traces.iter().map(|t| (t.case_id.clone(), t.len())).collect()
            };
            prop_assert_eq!(key(&a), key(&b));
        }
    }
}
