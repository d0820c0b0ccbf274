//! Hierarchical process discovery.
//!
//! Activities are structured names `file|category|command`. At hierarchy
//! level `L` an event is labelled by its first `L + 1` segments, and the
//! level-`L` transition system is the directly-follows graph over those
//! labels, bracketed by artificial `START` and `END` states so that every
//! trace replays as a `START -> ... -> END` walk.

mod dot;
mod filter;

pub use dot::{export_dot, Overlay};
pub use filter::filter_model;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::eventlog::{EventLog, Trace};
use crate::{Error, Result};

/// Deepest hierarchy level: activities have three segments.
pub const MAX_LEVEL: usize = 2;

/// A state of a transition system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum State {
    Start,
    Activity(String),
    End,
}

impl State {
    pub fn is_artificial(&self) -> bool {
        !matches!(self, State::Activity(_))
    }

    pub fn label(&self) -> &str {
        match self {
            State::Start => "START",
            State::End => "END",
            State::Activity(label) => label,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Simple,
    Composite,
}

/// A node of the activity hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActivityNode {
    pub label: String,
    pub level: usize,
    pub kind: NodeKind,
    /// Indices into [`ProcessModel::nodes`]; empty for simple nodes.
    pub children: Vec<usize>,
    pub absolute_frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeInfo {
    pub kind: NodeKind,
    pub frequency: u64,
}

/// Frequency-annotated directly-follows graph at one hierarchy level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    pub level: usize,
    pub nodes: BTreeMap<State, NodeInfo>,
    pub arcs: BTreeMap<(State, State), u64>,
}

impl TransitionSystem {
    fn from_traces<'a>(traces: impl Iterator<Item = &'a Trace>, level: usize, kind: NodeKind) -> Self {
        let mut nodes: BTreeMap<State, NodeInfo> = BTreeMap::new();
        let mut arcs: BTreeMap<(State, State), u64> = BTreeMap::new();
        let bump = |state: &State, nodes: &mut BTreeMap<State, NodeInfo>| {
            let kind = if state.is_artificial() { NodeKind::Simple } else { kind };
            nodes.entry(state.clone()).or_insert(NodeInfo { kind, frequency: 0 }).frequency += 1;
        };
        for trace in traces {
            if trace.is_empty() {
                continue;
            }
            let mut prev = State::Start;
            bump(&prev, &mut nodes);
            for label in trace.labels(level) {
                let next = State::Activity(label);
                bump(&next, &mut nodes);
                *arcs.entry((prev, next.clone())).or_default() += 1;
                prev = next;
            }
            bump(&State::End, &mut nodes);
            *arcs.entry((prev, State::End)).or_default() += 1;
        }
        TransitionSystem { level, nodes, arcs }
    }

    /// Activity nodes, excluding `START` and `END`.
    pub fn activities(&self) -> impl Iterator<Item = (&State, &NodeInfo)> {
        self.nodes.iter().filter(|(s, _)| !s.is_artificial())
    }

    pub fn activity_count(&self) -> usize {
        self.activities().count()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn arc_frequency(&self, from: &State, to: &State) -> u64 {
        // BTreeMap lookups need an owned tuple key.
        self.arcs.get(&(from.clone(), to.clone())).copied().unwrap_or(0)
    }

    /// Whether the trace is a `START -> ... -> END` walk along existing arcs.
    pub fn replays(&self, trace: &Trace) -> bool {
        let mut prev = State::Start;
        for label in trace.labels(self.level) {
            let next = State::Activity(label);
            if !self.arcs.contains_key(&(prev, next.clone())) {
                return false;
            }
            prev = next;
        }
        self.arcs.contains_key(&(prev, State::End))
    }

    pub fn summary(&self) -> TransitionSystemSummary<'_> {
        TransitionSystemSummary {
            level: self.level,
            nodes: self
                .nodes
                .iter()
                .map(|(s, info)| NodeSummary { label: s.label(), kind: info.kind, frequency: info.frequency })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|((from, to), f)| ArcSummary { from: from.label(), to: to.label(), frequency: *f })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct NodeSummary<'a> {
    pub label: &'a str,
    pub kind: NodeKind,
    pub frequency: u64,
}

#[derive(Debug, Serialize)]
pub struct ArcSummary<'a> {
    pub from: &'a str,
    pub to: &'a str,
    pub frequency: u64,
}

/// Flat node/arc listing of one transition system.
#[derive(Debug, Serialize)]
pub struct TransitionSystemSummary<'a> {
    pub level: usize,
    pub nodes: Vec<NodeSummary<'a>>,
    pub arcs: Vec<ArcSummary<'a>>,
}

/// A discovered hierarchical model with one transition system per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessModel {
    pub max_level: usize,
    /// Arena of hierarchy nodes, level by level, labels sorted within a level.
    pub nodes: Vec<ActivityNode>,
    pub roots: Vec<usize>,
    systems: Vec<TransitionSystem>,
    pub log_digest: String,
}

impl ProcessModel {
    pub fn simple_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Simple).count()
    }

    pub fn composite_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Composite).count()
    }

    /// The most granular transition system.
    pub fn deepest(&self) -> &TransitionSystem {
        &self.systems[self.max_level]
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            max_level: usize,
            log_digest: &'a str,
            hierarchy: &'a [ActivityNode],
            levels: Vec<TransitionSystemSummary<'a>>,
        }
        let summary = Summary {
            max_level: self.max_level,
            log_digest: &self.log_digest,
            hierarchy: &self.nodes,
            levels: self.systems.iter().map(TransitionSystem::summary).collect(),
        };
        Ok(serde_json::to_string_pretty(&summary)?)
    }
}

/// Discover the hierarchical model of `log` down to `max_level` (0..=2).
pub fn discover_model(log: &EventLog, max_level: usize) -> Result<ProcessModel> {
    if max_level > MAX_LEVEL {
        return Err(Error::Config(format!("discovery level {max_level} exceeds {MAX_LEVEL}")));
    }
    if log.traces.iter().all(Trace::is_empty) {
        return Err(Error::Data("no traces".to_string()));
    }

    let mut counts: Vec<BTreeMap<String, u64>> = vec![BTreeMap::new(); max_level + 1];
    for event in log.events() {
        for (level, bucket) in counts.iter_mut().enumerate() {
            *bucket.entry(event.activity_path.label(level)).or_default() += 1;
        }
    }

    let mut nodes = Vec::new();
    let mut index: Vec<HashMap<String, usize>> = vec![HashMap::new(); max_level + 1];
    for (level, bucket) in counts.iter().enumerate() {
        let kind = if level < max_level { NodeKind::Composite } else { NodeKind::Simple };
        for (label, freq) in bucket {
            index[level].insert(label.clone(), nodes.len());
            nodes.push(ActivityNode {
                label: label.clone(),
                level,
                kind,
                children: Vec::new(),
                absolute_frequency: *freq,
            });
        }
    }
    for id in 0..nodes.len() {
        let level = nodes[id].level;
        if level == 0 {
            continue;
        }
        let parent_label = parent_label(&nodes[id].label);
        let parent = index[level - 1][parent_label];
        nodes[parent].children.push(id);
    }
    let roots = (0..nodes.len()).filter(|&i| nodes[i].level == 0).collect();

    let systems = (0..=max_level)
        .map(|level| {
            let kind = if level < max_level { NodeKind::Composite } else { NodeKind::Simple };
            TransitionSystem::from_traces(log.traces.iter(), level, kind)
        })
        .collect();

    Ok(ProcessModel { max_level, nodes, roots, systems, log_digest: log.digest() })
}

fn parent_label(label: &str) -> &str {
    label.rsplit_once('|').map(|(p, _)| p).unwrap_or(label)
}

/// The cached transition system at `level`.
pub fn flatten_level(model: &ProcessModel, level: usize) -> Result<&TransitionSystem> {
    model
        .systems
        .get(level)
        .ok_or_else(|| Error::Config(format!("level {level} not discovered (max level {})", model.max_level)))
}
