//! Deterministic synthetic teams with known ground truth.
//!
//! Each team gets a practice profile, a target process complexity and a
//! target complexity reduction. Events are emitted one at a time while the
//! generator tracks the directly-follows graph it is building: it explores
//! new transitions until the target is reached and then only re-walks known
//! ones. Product snapshots are back-computed from the sampled reduction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use chrono::Duration;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eventlog::{parse_timestamp, RawEvent};
use crate::metrics::{Moment, Practice, ProductMetricsSnapshot, PRODUCT_METRICS};
use crate::seed;
use crate::stats::LevelPartition;
use crate::{Error, Result};

const STREAM_TEAM: u64 = 0x7465_616d;
const STREAM_ORDER: u64 = 0x6f72_6472;

/// Breakpoints of the complexity-reduction levels, in percent.
pub const VG_LEVEL_EDGES: [f64; 2] = [4.0, 9.0];
pub const VG_LEVEL_LABELS: [&str; 3] = ["LOW", "MEDIUM", "HIGH"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandWeight {
    /// `Category/Command`
    pub label: String,
    pub weight: f64,
}

fn mix(entries: &[(&str, f64)]) -> Vec<CommandWeight> {
    entries.iter().map(|(l, w)| CommandWeight { label: l.to_string(), weight: *w }).collect()
}

/// Behaviour of one practice cohort. Ranges are inclusive `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PracticeProfile {
    pub practice: Practice,
    pub teams: usize,
    pub developers: [usize; 2],
    pub sessions: [usize; 2],
    pub events_per_session: [usize; 2],
    pub file_pool: [usize; 2],
    pub command_mix: Vec<CommandWeight>,
    /// How many commands of the mix a team actually uses.
    pub commands_used: [usize; 2],
    /// Target process cyclomatic complexity, sampled uniformly.
    pub pcc_band: [f64; 2],
    /// Complexity reduction in percent.
    pub vg_reduction_band: [f64; 2],
    pub vg_reduction_mean: f64,
}

impl PracticeProfile {
    /// Plugin-assisted refactoring: smell views and refactor commands, mostly
    /// two or three developers, shorter sessions.
    pub fn automatic() -> Self {
        PracticeProfile {
            practice: Practice::AR,
            teams: 32,
            developers: [2, 3],
            sessions: [3, 6],
            events_per_session: [50, 120],
            file_pool: [5, 12],
            command_mix: mix(&[
                ("Eclipse View/Long Method", 6.0),
                ("Eclipse View/God Class", 5.0),
                ("Eclipse View/Code Smell Visualization", 4.0),
                ("Eclipse View/Feature Envy", 4.0),
                ("Eclipse View/Type Checking", 3.0),
                ("Eclipse View/Duplicated Code", 3.0),
                ("Eclipse View/Package Explorer", 2.0),
                ("Refactor/Java-Extract Method", 5.0),
                ("Refactor/Java-Move - Refactoring", 4.0),
                ("Refactor/Java-Extract Class...", 3.0),
                ("Refactor/Java-Rename - Refactoring", 2.0),
                ("Eclipse Editor/File Open", 4.0),
                ("Eclipse Editor/File Editing", 6.0),
                ("Eclipse Editor/File Close", 2.0),
                ("File/Save", 3.0),
                ("Edit/Copy", 1.0),
                ("Edit/Paste", 1.0),
                ("Source/Format", 1.0),
                ("Navigate/Open Declaration", 1.0),
                ("Compare/Select Next Change", 0.5),
                ("Text Editing/Delete Previous Word", 0.5),
            ]),
            commands_used: [6, 14],
            pcc_band: [100.0, 260.0],
            vg_reduction_band: [2.68, 16.77],
            vg_reduction_mean: 7.81,
        }
    }

    /// Manual refactoring with native editor features: edit and navigation
    /// commands, one or two developers, longer sessions.
    pub fn manual() -> Self {
        PracticeProfile {
            practice: Practice::MR,
            teams: 39,
            developers: [1, 2],
            sessions: [3, 6],
            events_per_session: [80, 170],
            file_pool: [8, 16],
            command_mix: mix(&[
                ("Edit/Copy", 8.0),
                ("Edit/Paste", 8.0),
                ("Edit/Cut", 4.0),
                ("Edit/Delete", 5.0),
                ("Edit/Undo", 4.0),
                ("Edit/Redo", 1.0),
                ("Edit/Find and Replace", 3.0),
                ("Eclipse Editor/File Open", 6.0),
                ("Eclipse Editor/File Editing", 12.0),
                ("Eclipse Editor/File Close", 3.0),
                ("Eclipse View/Project Explorer", 4.0),
                ("Eclipse View/Package Explorer", 4.0),
                ("File/Save", 6.0),
                ("File/Save All", 2.0),
                ("File/Refresh", 1.0),
                ("Source/Generate Getters and Setters", 2.0),
                ("Compare/Select Next Change", 2.0),
                ("Text Editing/Delete Previous Word", 4.0),
                ("Refactor/Java-Rename - Refactoring", 2.0),
                ("Navigate/Open Declaration", 4.0),
                ("Navigate/Go to Line", 2.0),
                ("Navigate/Quick Outline", 2.0),
                ("Edit/Select All", 2.0),
                ("Edit/Content Assist", 3.0),
            ]),
            commands_used: [13, 24],
            pcc_band: [180.0, 400.0],
            vg_reduction_band: [0.32, 13.98],
            vg_reduction_mean: 2.69,
        }
    }

    fn validate(&self) -> Result<()> {
        let name = self.practice;
        let range = |what: &str, r: [usize; 2], min: usize| {
            if r[0] < min || r[0] > r[1] {
                return Err(Error::Config(format!("{name}: {what} range {r:?} is empty or below {min}")));
            }
            Ok(())
        };
        range("developers", self.developers, 1)?;
        range("sessions", self.sessions, 1)?;
        range("events_per_session", self.events_per_session, 2)?;
        range("file_pool", self.file_pool, 1)?;
        range("commands_used", self.commands_used, 1)?;
        if self.commands_used[1] > self.command_mix.len() {
            return Err(Error::Config(format!(
                "{name}: commands_used exceeds the {} commands in the mix",
                self.command_mix.len()
            )));
        }
        if self.teams == 0 {
            return Err(Error::Config(format!("{name}: team count must be positive")));
        }
        if self.command_mix.iter().any(|c| !(c.weight >= 0.0 && c.weight.is_finite()) || !c.label.contains('/')) {
            return Err(Error::Config(format!(
                "{name}: command weights must be non-negative and labels Category/Command"
            )));
        }
        if self.command_mix.iter().map(|c| c.weight).sum::<f64>() <= 0.0 {
            return Err(Error::Config(format!("{name}: command weights sum to zero")));
        }
        let [lo, hi] = self.pcc_band;
        if !(lo.is_finite() && hi.is_finite() && 1.0 <= lo && lo <= hi) {
            return Err(Error::Config(format!("{name}: PCC band {:?} is infeasible", self.pcc_band)));
        }
        let [a, b] = self.vg_reduction_band;
        if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b && b < 100.0) {
            return Err(Error::Config(format!("{name}: VG reduction band {:?} is infeasible", self.vg_reduction_band)));
        }
        if !(a < self.vg_reduction_mean && self.vg_reduction_mean < b) {
            return Err(Error::Config(format!(
                "{name}: VG reduction mean {} lies outside band {:?}",
                self.vg_reduction_mean, self.vg_reduction_band
            )));
        }
        Ok(())
    }

    /// Reduction `a + (b - a) * u^g` with `u` uniform; `g` is chosen so the
    /// expected value equals the configured mean.
    fn sample_reduction(&self, rng: &mut ChaCha8Rng) -> f64 {
        let [a, b] = self.vg_reduction_band;
        let gamma = (b - a) / (self.vg_reduction_mean - a) - 1.0;
        a + (b - a) * rng.gen::<f64>().powf(gamma)
    }
}

/// Attribute pools sampled identically for every cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub platform_versions: Vec<String>,
    pub platform_branches: Vec<String>,
    pub os_names: Vec<String>,
    pub cities: Vec<String>,
    pub perspectives: Vec<String>,
    /// Each team uses between 1 and this many values of every attribute.
    pub max_distinct: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        NoiseConfig {
            platform_versions: s(&["4.7.3", "4.8.0", "4.9.0", "4.10.0"]),
            platform_branches: s(&["Neon", "Oxygen", "Photon", "2018-12"]),
            os_names: s(&["Windows 10", "Mac OS X", "Linux"]),
            cities: s(&["Lisbon", "Porto", "Braga", "Coimbra", "Faro"]),
            perspectives: s(&["Java", "Debug", "Java Browsing", "Resource"]),
            max_distinct: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// First session start, `YYYY-MM-DD HH:MM:SS`.
    pub start: String,
    pub profiles: Vec<PracticeProfile>,
    pub noise: NoiseConfig,
    /// Product metrics at t0, jittered by up to +-10% per team.
    pub baseline: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 42,
            start: "2021-03-01 09:00:00".to_string(),
            profiles: vec![PracticeProfile::automatic(), PracticeProfile::manual()],
            noise: NoiseConfig::default(),
            baseline: vec![
                2.2, 1.4, 1.6, 4.0, 3.5, 0.45, 0.2, 0.3, 2.1, 14.0, 0.6, 0.4, 0.25, 3.0, 0.5, 0.3, 5.0, 0.5, 1.0, 6.5,
                0.8, 7.5, 9000.0,
            ],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        parse_timestamp(&self.start).map_err(|e| Error::Config(format!("start: {e}")))?;
        if self.profiles.is_empty() {
            return Err(Error::Config("scenario has no practice profiles".to_string()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.profiles {
            if !seen.insert(p.practice) {
                return Err(Error::Config(format!("duplicate profile for {}", p.practice)));
            }
            p.validate()?;
        }
        if self.baseline.len() != PRODUCT_METRICS.len() {
            return Err(Error::Config(format!("baseline needs {} values", PRODUCT_METRICS.len())));
        }
        if self.baseline.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("baseline values must be positive".to_string()));
        }
        let n = &self.noise;
        for (what, pool) in [
            ("platform_versions", &n.platform_versions),
            ("platform_branches", &n.platform_branches),
            ("os_names", &n.os_names),
            ("cities", &n.cities),
            ("perspectives", &n.perspectives),
        ] {
            if pool.is_empty() {
                return Err(Error::Config(format!("noise pool {what} is empty")));
            }
        }
        if n.max_distinct == 0 {
            return Err(Error::Config("noise max_distinct must be positive".to_string()));
        }
        Ok(())
    }
}

/// What the generator intended and produced for one team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct GroundTruth {
    pub team: String,
    pub practice: Practice,
    pub DEV: u64,
    pub SES: u64,
    pub EVTS: u64,
    pub NFILES: u64,
    pub NCOM: u64,
    pub target_pcc: f64,
    /// Complexity of the emitted level-2 directly-follows graph.
    pub PCC: u64,
    pub vg_reduction: f64,
    pub vg_level: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Events per team, in emission order.
    pub events: BTreeMap<String, Vec<RawEvent>>,
    pub snapshots: Vec<ProductMetricsSnapshot>,
    pub truth: Vec<GroundTruth>,
}

/// Directly-follows bookkeeping for one team.
#[derive(Default)]
struct Graph {
    nodes: BTreeSet<usize>,
    arcs: BTreeSet<(usize, usize)>,
    succ: HashMap<usize, Vec<usize>>,
}

const START: usize = usize::MAX - 1;
const END: usize = usize::MAX;

impl Graph {
    fn pcc(&self) -> i64 {
        // Every node hangs off START, so the graph is one component.
        self.arcs.len() as i64 - (self.nodes.len() as i64 + 2) + 2
    }

    fn add(&mut self, from: usize, to: usize) {
        for n in [from, to] {
            if n != START && n != END {
                self.nodes.insert(n);
            }
        }
        if self.arcs.insert((from, to)) {
            self.succ.entry(from).or_default().push(to);
        }
    }
}

fn pick_weighted(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let total = cumulative[cumulative.len() - 1];
    let x = rng.gen::<f64>() * total;
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
}

fn slug(s: &str) -> String {
    s.chars()
        .filter_map(|c| match c {
            'a'..='z' | '0'..='9' => Some(c),
            'A'..='Z' => Some(c.to_ascii_lowercase()),
            ' ' | '-' => Some('.'),
            _ => None,
        })
        .collect()
}

fn team_values(rng: &mut ChaCha8Rng, pool: &[String], max: usize) -> Vec<String> {
    let count = rng.gen_range(1..=max.min(pool.len()));
    pool.choose_multiple(rng, count).cloned().collect()
}

struct TeamPlan<'a> {
    id: String,
    profile: &'a PracticeProfile,
}

fn generate_team(
    plan: &TeamPlan<'_>,
    config: &ScenarioConfig,
    index: u64,
) -> Result<(Vec<RawEvent>, GroundTruth, [ProductMetricsSnapshot; 2])> {
    let p = plan.profile;
    let mut rng = seed::child_rng(config.seed, STREAM_TEAM, index);
    let team = &plan.id;

    let devs = rng.gen_range(p.developers[0]..=p.developers[1]);
    let sessions = rng.gen_range(p.sessions[0]..=p.sessions[1]).max(devs);
    let files = rng.gen_range(p.file_pool[0]..=p.file_pool[1]);
    let target = rng.gen_range(p.pcc_band[0]..=p.pcc_band[1]);
    let used = rng.gen_range(p.commands_used[0]..=p.commands_used[1]);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, p.command_mix.len(), used).into_vec();
    picked.sort_unstable();
    let mix: Vec<&CommandWeight> = picked.iter().map(|&i| &p.command_mix[i]).collect();
    let commands: Vec<(&str, &str)> = mix.iter().map(|c| c.label.split_once('/').expect("validated label")).collect();
    let cumulative: Vec<f64> = mix
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();

    let n = &config.noise;
    let versions = team_values(&mut rng, &n.platform_versions, n.max_distinct);
    let branches = team_values(&mut rng, &n.platform_branches, n.max_distinct);
    let oses = team_values(&mut rng, &n.os_names, n.max_distinct);
    let cities = team_values(&mut rng, &n.cities, n.max_distinct);
    let perspectives = team_values(&mut rng, &n.perspectives, n.max_distinct);

    // Activity id = file * commands + command.
    let n_cmd = commands.len();
    let explore = |rng: &mut ChaCha8Rng| rng.gen_range(0..files) * n_cmd + pick_weighted(rng, &cumulative);

    let mut graph = Graph::default();
    let mut events = Vec::new();
    let base = parse_timestamp(&config.start)?;
    let mut used_files = BTreeSet::new();
    let mut used_commands = BTreeSet::new();
    let mut users = BTreeSet::new();

    for s in 0..sessions {
        // Every developer leads at least one session.
        let dev = if s < devs { s } else { rng.gen_range(0..devs) };
        let username = format!("{}-dev{}", team.to_lowercase(), dev + 1);
        users.insert(username.clone());
        let len = rng.gen_range(p.events_per_session[0]..=p.events_per_session[1]);
        let mut t = base + Duration::days(s as i64) + Duration::minutes(rng.gen_range(0..120));
        let mut prev = START;
        for _ in 0..len {
            let next = if graph.pcc() < target.round() as i64 {
                // Prefer a new transition into a known activity (raises the
                // complexity by one), then any new transition.
                let mut fallback = None;
                let mut chosen = None;
                for _ in 0..8 {
                    let cand = explore(&mut rng);
                    if graph.arcs.contains(&(prev, cand)) {
                        continue;
                    }
                    if graph.nodes.contains(&cand) {
                        chosen = Some(cand);
                        break;
                    }
                    fallback.get_or_insert(cand);
                }
                chosen.or(fallback).unwrap_or_else(|| explore(&mut rng))
            } else {
                match graph.succ.get(&prev).map(|v| v.iter().filter(|&&x| x != END).copied().collect::<Vec<_>>()) {
                    Some(known) if !known.is_empty() => *known.choose(&mut rng).expect("non-empty"),
                    _ => match graph.succ.get(&START) {
                        Some(firsts) if prev == START => *firsts.choose(&mut rng).expect("non-empty"),
                        _ => *graph.nodes.iter().next().expect("graph has nodes once the target is met"),
                    },
                }
            };
            graph.add(prev, next);
            prev = next;

            let (cat, cmd) = commands[next % n_cmd];
            let file = format!("src/org/{}/Class{:02}.java", team.to_lowercase(), next / n_cmd + 1);
            used_files.insert(file.clone());
            used_commands.insert(cmd);
            let begin = t;
            let end = begin + Duration::milliseconds(rng.gen_range(50..4000));
            t = end + Duration::milliseconds(rng.gen_range(200..20000));

            let mut e = RawEvent::new(team.as_str(), format!("s{:02}", s + 1), username.as_str(), begin, end);
            e.fullname = format!("Developer {} of {team}", dev + 1);
            e.workspacename = format!("ws-{}", team.to_lowercase());
            e.projectname = "refactoring-exercise".to_string();
            e.extension = "java".to_string();
            e.filename = file;
            e.category_name = cat.to_string();
            e.command_name = cmd.to_string();
            e.category_id = format!("org.eclipse.ui.category.{}", slug(cat));
            e.command_id = format!("org.eclipse.ui.{}.{}", slug(cat), slug(cmd));
            e.platform_branch = branches.choose(&mut rng).expect("non-empty").clone();
            e.platform_version = versions.choose(&mut rng).expect("non-empty").clone();
            e.java_version = "1.8.0_191".to_string();
            e.continent = "Europe".to_string();
            e.country = "Portugal".to_string();
            e.city = cities.choose(&mut rng).expect("non-empty").clone();
            e.os_name = oses.choose(&mut rng).expect("non-empty").clone();
            e.perspective = perspectives.choose(&mut rng).expect("non-empty").clone();
            e.seal();
            events.push(e);
        }
        graph.add(prev, END);
    }

    let reduction = p.sample_reduction(&mut rng);
    let mut v0 = [0.0; 23];
    let mut v1 = [0.0; 23];
    for (i, b) in config.baseline.iter().enumerate() {
        v0[i] = b * rng.gen_range(0.9..1.1);
        v1[i] = v0[i] * rng.gen_range(0.97..1.03);
    }
    v0[0] = config.baseline[0] * rng.gen_range(0.9..1.1);
    v1[0] = v0[0] * (1.0 - reduction / 100.0);
    let tloc = PRODUCT_METRICS.len() - 1;
    v0[tloc] = v0[tloc].round();
    v1[tloc] = v1[tloc].round();

    let levels = LevelPartition::from_edges(&VG_LEVEL_LABELS, &VG_LEVEL_EDGES)?;
    let truth = GroundTruth {
        team: team.clone(),
        practice: p.practice,
        DEV: users.len() as u64,
        SES: sessions as u64,
        EVTS: events.len() as u64,
        NFILES: used_files.len() as u64,
        NCOM: used_commands.len() as u64,
        target_pcc: target,
        PCC: graph.pcc() as u64,
        vg_reduction: reduction,
        vg_level: levels.classify(reduction).to_string(),
    };
    let snaps = [
        ProductMetricsSnapshot::new(team.as_str(), Moment::T0, v0)?,
        ProductMetricsSnapshot::new(team.as_str(), Moment::T1, v1)?,
    ];
    Ok((events, truth, snaps))
}

/// Generate every team of the scenario.
pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let total: usize = config.profiles.iter().map(|p| p.teams).sum();
    // Team ids carry no practice information: practices are shuffled over ids.
    let mut slots: Vec<&PracticeProfile> =
        config.profiles.iter().flat_map(|p| std::iter::repeat_n(p, p.teams)).collect();
    slots.shuffle(&mut seed::child_rng(config.seed, STREAM_ORDER, 0));
    let width = total.to_string().len().max(3);

    let mut scenario = Scenario { events: BTreeMap::new(), snapshots: Vec::new(), truth: Vec::new() };
    for (i, profile) in slots.into_iter().enumerate() {
        let plan = TeamPlan { id: format!("T{:0width$}", i + 1), profile };
        let (events, truth, snaps) = generate_team(&plan, config, i as u64)?;
        scenario.events.insert(plan.id, events);
        scenario.truth.push(truth);
        scenario.snapshots.extend(snaps);
    }
    Ok(scenario)
}

impl Scenario {
    /// `team,practice`
    pub fn write_labels<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["team", "practice"])?;
        for t in &self.truth {
            w.write_record([t.team.as_str(), &t.practice.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_truth<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for t in &self.truth {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Read a `team,practice` label file.
pub fn read_labels<R: std::io::Read>(source: R) -> Result<BTreeMap<String, Practice>> {
    let mut r = csv::Reader::from_reader(source);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Schema(format!("label file lacks column {name}")))
    };
    let (tc, pc) = (col("team")?, col("practice")?);
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        if out.insert(rec[tc].to_string(), rec[pc].parse()?).is_some() {
            return Err(Error::Schema(format!("duplicate label for team {}", &rec[tc])));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::{verify_event_hash, write_events, Format};

    fn small() -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.profiles[0].teams = 4;
        c.profiles[1].teams = 5;
        c
    }

    #[test]
    fn deterministic_bytes() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        let bytes = |s: &Scenario| {
            let mut buf = Vec::new();
            for ev in s.events.values() {
                write_events(ev, Format::JsonLines, &mut buf).unwrap();
            }
            s.write_truth(&mut buf).unwrap();
            buf
        };
        assert_eq!(bytes(&a), bytes(&b));
        let mut other = small();
        other.seed = 7;
        assert_ne!(bytes(&a), bytes(&generate(&other).unwrap()));
    }

    #[test]
    fn events_are_sealed_and_unique() {
        let s = generate(&small()).unwrap();
        let mut keys = BTreeSet::new();
        for ev in s.events.values().flatten() {
            assert!(verify_event_hash(ev));
            assert!(keys.insert(ev.dedup_key()));
        }
    }

    #[test]
    fn cohorts_follow_their_profiles() {
        let s = generate(&small()).unwrap();
        let mean = |p: Practice, f: &dyn Fn(&GroundTruth) -> f64| {
            let v: Vec<f64> = s.truth.iter().filter(|t| t.practice == p).map(f).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(Practice::AR, &|t| t.EVTS as f64) < mean(Practice::MR, &|t| t.EVTS as f64));
        assert!(mean(Practice::AR, &|t| t.PCC as f64) < mean(Practice::MR, &|t| t.PCC as f64));
        for t in &s.truth {
            let band = if t.practice == Practice::AR { [2.68, 16.77] } else { [0.32, 13.98] };
            assert!(t.vg_reduction >= band[0] && t.vg_reduction <= band[1]);
            // Close to target: at most a handful of transitions over.
            assert!((t.PCC as f64) <= t.target_pcc.round() + 8.0, "{t:?}");
        }
    }

    #[test]
    fn infeasible_bands_rejected() {
        let mut c = small();
        c.profiles[0].vg_reduction_band = [10.0, 5.0];
        assert!(matches!(generate(&c), Err(Error::Config(_))));
        let mut c = small();
        c.profiles[1].vg_reduction_mean = 20.0;
        assert!(generate(&c).is_err());
        let mut c = small();
        c.profiles[1].command_mix.iter_mut().for_each(|w| w.weight = 0.0);
        assert!(generate(&c).is_err());
    }

    #[test]
    fn reduction_mean_matches_profile() {
        let p = PracticeProfile::manual();
        let mut rng = seed::rng(1);
        let n = 20000;
        let mean = (0..n).map(|_| p.sample_reduction(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.69).abs() < 0.1, "{mean}");
    }

    #[test]
    fn labels_round_trip() {
        let s = generate(&small()).unwrap();
        let mut buf = Vec::new();
        s.write_labels(&mut buf).unwrap();
        let labels = read_labels(buf.as_slice()).unwrap();
        assert_eq!(labels.len(), 9);
        assert_eq!(labels.values().filter(|p| **p == Practice::AR).count(), 4);
    }
}
