use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::discovery::{ProcessModel, TransitionSystem};
use crate::eventlog::{EventLog, Field};
use crate::{Error, Result};

/// Process metric columns, in feature-table order.
pub const PROCESS_COLUMNS: [&str; 18] = [
    "DEV", "SES", "EVTS", "NFILES", "NCOM", "PCCPF", "EC", "NOA", "NSS", "NCS", "NOT", "PCC", "NVER", "NCAT", "NPLA",
    "NISP", "NOS", "NPER",
];

/// Process metrics of one team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[allow(non_snake_case)]
pub struct ProcessMetricsRecord {
    pub DEV: u64,
    pub SES: u64,
    pub EVTS: u64,
    pub NFILES: u64,
    pub NCOM: u64,
    pub PCCPF: f64,
    pub EC: u64,
    pub NOA: u64,
    pub NSS: u64,
    pub NCS: u64,
    pub NOT: u64,
    pub PCC: u64,
    pub NVER: u64,
    pub NCAT: u64,
    pub NPLA: u64,
    pub NISP: u64,
    pub NOS: u64,
    pub NPER: u64,
    /// Assigned by level partitioning.
    pub PCC_LEVEL: Option<String>,
}

impl ProcessMetricsRecord {
    /// Numeric values in [`PROCESS_COLUMNS`] order.
    pub fn values(&self) -> [f64; 18] {
        [
            self.DEV as f64,
            self.SES as f64,
            self.EVTS as f64,
            self.NFILES as f64,
            self.NCOM as f64,
            self.PCCPF,
            self.EC as f64,
            self.NOA as f64,
            self.NSS as f64,
            self.NCS as f64,
            self.NOT as f64,
            self.PCC as f64,
            self.NVER as f64,
            self.NCAT as f64,
            self.NPLA as f64,
            self.NISP as f64,
            self.NOS as f64,
            self.NPER as f64,
        ]
    }
}

/// Cyclomatic complexity `E - N + 2P` of a transition system, counting
/// `START`/`END` among the nodes and `P` as weakly connected components.
pub fn compute_pcc(ts: &TransitionSystem) -> Result<u64> {
    if ts.nodes.is_empty() {
        return Err(Error::Data("empty transition system".to_string()));
    }
    let index: std::collections::BTreeMap<_, usize> = ts.nodes.keys().enumerate().map(|(i, s)| (s, i)).collect();
    let mut uf = UnionFind::new(index.len());
    for (from, to) in ts.arcs.keys() {
        uf.union(index[from], index[to]);
    }
    let components = uf.count();
    let (e, n) = (ts.arcs.len() as i64, ts.nodes.len() as i64);
    // E - N + P >= 0 for any graph, so the result is at least P.
    Ok((e - n + 2 * components as i64) as u64)
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }

    fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&i| self.find(i) == i).count()
    }
}

fn distinct<'a>(values: impl Iterator<Item = &'a str>) -> u64 {
    values.filter(|v| !v.is_empty()).collect::<BTreeSet<_>>().len() as u64
}

/// Process metrics of a (single-team) log and the model discovered from it.
///
/// Distinct-value counts ignore empty strings. `NSS` and `NCS` count the
/// simple and composite nodes of the activity hierarchy, and `NOA` is their
/// sum; `NOT` and `PCC` come from the deepest transition system.
pub fn compute_process_metrics(log: &EventLog, model: &ProcessModel) -> Result<ProcessMetricsRecord> {
    let attr = |field: Field| distinct(log.events().map(move |e| e.attr(field.name())));
    let deepest = model.deepest();
    let pcc = compute_pcc(deepest)?;
    let nfiles = distinct(log.events().map(|e| e.activity_path.file()));
    let nss = model.simple_count() as u64;
    let ncs = model.composite_count() as u64;
    Ok(ProcessMetricsRecord {
        DEV: distinct(log.events().map(|e| e.resource.as_str())),
        SES: distinct(log.events().map(|e| e.session())),
        EVTS: log.event_count() as u64,
        NFILES: nfiles,
        NCOM: distinct(log.events().map(|e| e.activity_path.command())),
        PCCPF: if nfiles > 0 { pcc as f64 / nfiles as f64 } else { 0.0 },
        EC: log.catalog[2].len() as u64,
        NOA: nss + ncs,
        NSS: nss,
        NCS: ncs,
        NOT: deepest.arcs.len() as u64,
        PCC: pcc,
        NVER: attr(Field::PlatformVersion),
        NCAT: distinct(log.events().map(|e| e.activity_path.category())),
        NPLA: attr(Field::PlatformBranch),
        NISP: attr(Field::City),
        NOS: attr(Field::OsName),
        NPER: attr(Field::Perspective),
        PCC_LEVEL: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::{discover_model, State};
    use crate::eventlog::{build_log, parse_timestamp, RawEvent};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::collections::{BTreeMap, VecDeque};

    fn system(n: usize, edges: &[(usize, usize)]) -> TransitionSystem {
        let state = |i: usize| State::Activity(format!("v{i:02}"));
        let nodes = (0..n)
            .map(|i| (state(i), crate::discovery::NodeInfo { kind: crate::discovery::NodeKind::Simple, frequency: 1 }))
            .collect();
        let arcs = edges.iter().map(|&(a, b)| ((state(a), state(b)), 1)).collect();
        TransitionSystem { level: 2, nodes, arcs }
    }

    /// Components by breadth-first search over the undirected arc set.
    fn bfs_pcc(ts: &TransitionSystem) -> i64 {
        let nodes: Vec<&State> = ts.nodes.keys().collect();
        let mut adj: BTreeMap<&State, Vec<&State>> = BTreeMap::new();
        for (a, b) in ts.arcs.keys() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut p = 0;
        for start in &nodes {
            if !seen.insert(*start) {
                continue;
            }
            p += 1;
            let mut q = VecDeque::from([*start]);
            while let Some(cur) = q.pop_front() {
                for nb in adj.get(cur).into_iter().flatten() {
                    if seen.insert(*nb) {
                        q.push_back(*nb);
                    }
                }
            }
        }
        ts.arcs.len() as i64 - nodes.len() as i64 + 2 * p
    }

    #[test]
    fn straight_line_is_one() {
        assert_eq!(compute_pcc(&system(3, &[(0, 1), (1, 2)])).unwrap(), 1);
    }

    #[test]
    fn diamond_is_two() {
        assert_eq!(compute_pcc(&system(4, &[(0, 1), (0, 2), (1, 3), (2, 3)])).unwrap(), 2);
    }

    #[test]
    fn two_disjoint_chains() {
        assert_eq!(compute_pcc(&system(4, &[(0, 1), (2, 3)])).unwrap(), 2);
    }

    #[test]
    fn empty_system_errors() {
        assert!(compute_pcc(&system(0, &[])).is_err());
    }

    #[test]
    fn random_graphs_match_bfs_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..=30);
            let m = rng.gen_range(0..=2 * n);
            let edges: Vec<(usize, usize)> = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
            let ts = system(n, &edges);
            assert_eq!(compute_pcc(&ts).unwrap() as i64, bfs_pcc(&ts));
        }
    }

    fn event(user: &str, session: &str, ms: i64, file: &str, cmd: &str) -> RawEvent {
        let t = parse_timestamp("2020-03-21 09:00:00.000").unwrap() + chrono::Duration::milliseconds(ms);
        let mut e = RawEvent::new("T", session, user, t, t);
        e.filename = file.into();
        e.category_name = "Edit".into();
        e.command_name = cmd.into();
        e.platform_version = "4.7.3".into();
        e.city = "Lisbon".into();
        e.seal();
        e
    }

    #[test]
    fn direct_counts_on_single_trace() {
        let log = build_log(&[event("u", "s", 0, "A.java", "Copy"), event("u", "s", 1, "A.java", "Paste")]);
        let model = discover_model(&log, 2).unwrap();
        let m = compute_process_metrics(&log, &model).unwrap();
        assert_eq!((m.DEV, m.SES, m.EVTS, m.NFILES, m.NCOM), (1, 1, 2, 1, 2));
        assert_eq!((m.NCAT, m.NVER, m.NISP, m.NOS, m.NPER), (1, 1, 1, 0, 0));
        assert_eq!(m.EC, 2);
        // Hierarchy: A.java, A.java|Edit (composite); two commands (simple).
        assert_eq!((m.NSS, m.NCS, m.NOA), (2, 2, 4));
        // START->Copy->Paste->END
        assert_eq!((m.NOT, m.PCC), (3, 1));
        assert_eq!(m.PCCPF, 1.0);
    }

    fn arb_events() -> impl Strategy<Value = Vec<RawEvent>> {
        prop::collection::vec((0u8..3, 0u8..3, 0u8..3, 0u8..4), 1..40).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (u, s, f, c))| {
                    event(&format!("u{u}"), &format!("s{s}"), i as i64 * 10, &format!("F{f}.java"), &format!("C{c}"))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn distinct_counts_ignore_input_order(events in arb_events(), seed in 0u64..1000) {
            let log = build_log(&events);
            let m = compute_process_metrics(&log, &discover_model(&log, 2).unwrap()).unwrap();
            let mut shuffled = events.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let log2 = build_log(&shuffled);
            let m2 = compute_process_metrics(&log2, &discover_model(&log2, 2).unwrap()).unwrap();
            prop_assert_eq!(m, m2);
        }

        #[test]
        fn activity_count_splits_into_simple_and_composite(events in arb_events(), level in 0usize..3) {
            let log = build_log(&events);
            let model = discover_model(&log, level).unwrap();
            let m = compute_process_metrics(&log, &model).unwrap();
            prop_assert_eq!(m.NOA, m.NSS + m.NCS);
            prop_assert!(m.PCC >= 1);
        }
    }
}
