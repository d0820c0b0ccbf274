use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{NodeInfo, State, TransitionSystem};
use crate::{Error, Result};

fn ceil_fraction(fraction: f64, n: usize) -> usize {
    // Guard against 0.2 * 10 landing a hair above 2.
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Keep the most frequent activities and paths.
///
/// The `ceil(activity_fraction * |activities|)` most frequent activity nodes
/// survive (`START`/`END` always do), then the
/// `ceil(path_fraction * |arcs among survivors|)` most frequent arcs. Ties
/// break by label order. Kept nodes left unreachable from `START` get a
/// `START` arc, and kept nodes that cannot reach `END` get an `END` arc;
/// repair arcs carry the node's frequency.
pub fn filter_model(ts: &TransitionSystem, activity_fraction: f64, path_fraction: f64) -> Result<TransitionSystem> {
    for (name, f) in [("activity", activity_fraction), ("path", path_fraction)] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("{name} fraction {f} outside (0, 1]")));
        }
    }

    let (nodes, mut arcs) = select(ts, activity_fraction, path_fraction);

    let activities: Vec<State> = nodes.keys().filter(|s| !s.is_artificial()).cloned().collect();
    for node in &activities {
        if !reachable(&arcs, &State::Start, false).contains(node) {
            arcs.insert((State::Start, node.clone()), nodes[node].frequency);
        }
    }
    for node in activities.iter().rev() {
        if !reachable(&arcs, &State::End, true).contains(node) {
            arcs.insert((node.clone(), State::End), nodes[node].frequency);
        }
    }

    Ok(TransitionSystem { level: ts.level, nodes, arcs })
}

type Selection = (BTreeMap<State, NodeInfo>, BTreeMap<(State, State), u64>);

/// Frequency-ranked selection before connectivity repair.
fn select(ts: &TransitionSystem, activity_fraction: f64, path_fraction: f64) -> Selection {
    let mut ranked: Vec<(&State, u64)> = ts.activities().map(|(s, i)| (s, i.frequency)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let keep_n = ceil_fraction(activity_fraction, ranked.len());
    let kept: BTreeSet<&State> =
        ranked.iter().take(keep_n).map(|(s, _)| *s).chain(ts.nodes.keys().filter(|s| s.is_artificial())).collect();

    let mut candidates: Vec<(&(State, State), u64)> =
        ts.arcs.iter().filter(|((a, b), _)| kept.contains(a) && kept.contains(b)).map(|(k, f)| (k, *f)).collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let arc_n = ceil_fraction(path_fraction, candidates.len());

    let nodes: BTreeMap<State, NodeInfo> =
        ts.nodes.iter().filter(|(s, _)| kept.contains(s)).map(|(s, i)| (s.clone(), i.clone())).collect();
    let arcs: BTreeMap<(State, State), u64> = candidates.into_iter().take(arc_n).map(|(k, f)| (k.clone(), f)).collect();

    (nodes, arcs)
}

fn reachable(arcs: &BTreeMap<(State, State), u64>, from: &State, reverse: bool) -> BTreeSet<State> {
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(cur) = queue.pop_front() {
        for (a, b) in arcs.keys() {
            let (src, dst) = if reverse { (b, a) } else { (a, b) };
            if *src == cur && seen.insert(dst.clone()) {
                queue.push_back(dst.clone());
            }
        }
    }
    seen
}
