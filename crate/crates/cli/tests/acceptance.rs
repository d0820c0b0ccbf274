//! Acceptance suite. Every test prints one `criterion N: PASS|FAIL` line;
//! run with `--nocapture` to see them.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use refmine::discovery::{discover_model, flatten_level, NodeInfo, NodeKind, State, TransitionSystem};
use refmine::eventlog::{build_log, ingest, parse_timestamp, write_events, Format, HashPolicy, RawEvent};
use refmine::learn::{cross_validate, evaluate, roc_auc, ClassifierSpec, Dataset, Family};
use refmine::metrics::{compute_delta, compute_pcc, FeatureTable, Moment, ProductMetricsSnapshot};
use refmine::seed;
use refmine::stats::{
    correlate, elbow_select, kmeans, level_partition, silhouette_score, spearman_p_value, spearman_rho, PValueMethod,
};
use serde_json::Value;

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

// ---------------------------------------------------------------- 1

fn bfs_pcc(ts: &TransitionSystem) -> i64 {
    let ids: BTreeMap<&State, usize> = ts.nodes.keys().enumerate().map(|(i, s)| (s, i)).collect();
    let mut adj = vec![Vec::new(); ids.len()];
    for (a, b) in ts.arcs.keys() {
        adj[ids[a]].push(ids[b]);
        adj[ids[b]].push(ids[a]);
    }
    let mut seen = vec![false; ids.len()];
    let mut components = 0;
    for s in 0..ids.len() {
        if seen[s] {
            continue;
        }
        components += 1;
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    ts.arcs.len() as i64 - ids.len() as i64 + 2 * components
}

fn random_system(rng: &mut impl Rng) -> TransitionSystem {
    let n = rng.gen_range(2..=30);
    let mut states = vec![State::Start, State::End];
    states.extend((0..n - 2).map(|i| State::Activity(format!("a{i}"))));
    let nodes = states.iter().map(|s| (s.clone(), NodeInfo { kind: NodeKind::Simple, frequency: 1 })).collect();
    let mut arcs = BTreeMap::new();
    for _ in 0..rng.gen_range(0..=2 * n) {
        let a = states.choose(rng).unwrap().clone();
        let b = states.choose(rng).unwrap().clone();
        arcs.insert((a, b), 1);
    }
    TransitionSystem { level: 0, nodes, arcs }
}

#[test]
fn criterion_01_pcc_matches_bfs_oracle() {
    let mut rng = seed::rng(101);
    let systems: Vec<_> = (0..100).map(|_| random_system(&mut rng)).collect();
    let t = Instant::now();
    let mismatches = systems.iter().filter(|ts| compute_pcc(ts).unwrap() as i64 != bfs_pcc(ts)).count();
    let elapsed = t.elapsed();
    report(
        1,
        mismatches == 0 && elapsed < Duration::from_secs(1),
        &format!("100 systems, {mismatches} mismatches, {elapsed:?}"),
    );
}

// ---------------------------------------------------------------- 2

fn random_log(rng: &mut impl Rng) -> Vec<RawEvent> {
    let base = parse_timestamp("2021-01-01 00:00:00").unwrap();
    let n = rng.gen_range(1..=1000);
    let mut events: Vec<RawEvent> = (0..n)
        .map(|i| {
            let team = format!("T{}", rng.gen_range(0..3));
            let session = format!("s{}", rng.gen_range(0..4));
            // Distinct start times keep the order unambiguous and avoid duplicates.
            let t = base + chrono::Duration::seconds(i as i64);
            let mut e = RawEvent::new(team.as_str(), session.as_str(), "dev", t, t);
            e.filename = format!("F{}.java", rng.gen_range(0..4));
            e.category_name = format!("C{}", rng.gen_range(0..3));
            e.command_name = format!("K{}", rng.gen_range(0..5));
            e.seal();
            e
        })
        .collect();
    events.shuffle(rng);
    events
}

fn naive_arcs(events: &[RawEvent], level: usize) -> BTreeMap<(String, String), u64> {
    let mut cases: BTreeMap<(String, String), Vec<&RawEvent>> = BTreeMap::new();
    for e in events {
        cases.entry((e.team.clone(), e.session.clone())).or_default().push(e);
    }
    let mut arcs = BTreeMap::new();
    for mut trace in cases.into_values() {
        trace.sort_by_key(|e| e.timestamp_begin);
        let mut labels = vec!["START".to_string()];
        labels.extend(trace.iter().map(|e| {
            [&e.filename, &e.category_name, &e.command_name][..=level]
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join("|")
        }));
        labels.push("END".to_string());
        for w in labels.windows(2) {
            *arcs.entry((w[0].clone(), w[1].clone())).or_default() += 1;
        }
    }
    arcs
}

#[test]
fn criterion_02_directly_follows_matches_pair_scan() {
    let mut rng = seed::rng(202);
    let t = Instant::now();
    let mut mismatches = 0;
    for _ in 0..50 {
        let events = random_log(&mut rng);
        let mut buf = Vec::new();
        write_events(&events, Format::JsonLines, &mut buf).unwrap();
        let (kept, _) = ingest(buf.as_slice(), Format::JsonLines, HashPolicy::Reject, None).unwrap();
        let model = discover_model(&build_log(&kept), 2).unwrap();
        for level in 0..=2 {
            let ts = flatten_level(&model, level).unwrap();
            let got: BTreeMap<(String, String), u64> =
                ts.arcs.iter().map(|((a, b), n)| ((a.label().to_string(), b.label().to_string()), *n)).collect();
            if got != naive_arcs(&events, level) {
                mismatches += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    report(
        2,
        mismatches == 0 && elapsed < Duration::from_secs(5),
        &format!("50 logs x 3 levels, {mismatches} mismatches, {elapsed:?}"),
    );
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_relative_delta_arithmetic() {
    let mut rng = seed::rng(303);
    let (mut worst, mut flagged, mut leaked) = (0.0f64, 0, 0);
    for i in 0..1000 {
        let mut v0 = [0.0f64; 23];
        let mut v1 = [0.0f64; 23];
        for j in 0..23 {
            v0[j] = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..500.0) };
            v1[j] = rng.gen_range(0.0..500.0);
        }
        // TLOC is a line count.
        v0[22] = v0[22].round();
        v1[22] = v1[22].round();
        let team = format!("T{i}");
        let d = compute_delta(
            &ProductMetricsSnapshot::new(team.as_str(), Moment::T0, v0).unwrap(),
            &ProductMetricsSnapshot::new(team.as_str(), Moment::T1, v1).unwrap(),
        )
        .unwrap();
        for j in 0..23 {
            match d.deltas[j] {
                None if v0[j] == 0.0 => flagged += 1,
                None => leaked += 1,
                Some(x) if v0[j] == 0.0 || !x.is_finite() => leaked += 1,
                Some(x) => {
                    let hand = 100.0 * (v1[j] - v0[j]) / v0[j];
                    worst = worst.max((x - hand).abs() / hand.abs().max(1.0));
                }
            }
        }
    }
    // An undefined delta must drop out of correlations rather than poison them.
    let x: Vec<Option<f64>> = vec![Some(1.0), Some(2.0), None, Some(4.0), Some(5.0)];
    let y: Vec<Option<f64>> = vec![Some(2.0), Some(1.0), Some(9.0), Some(3.0), Some(5.0)];
    let with_gap = correlate(&x, &y, 0.05, PValueMethod::Auto).unwrap().unwrap();
    let complete = correlate(
        &[Some(1.0), Some(2.0), Some(4.0), Some(5.0)],
        &[Some(2.0), Some(1.0), Some(3.0), Some(5.0)],
        0.05,
        PValueMethod::Auto,
    )
    .unwrap()
    .unwrap();
    let pass = worst <= 1e-12 && leaked == 0 && flagged > 0 && with_gap == complete;
    report(
        3,
        pass,
        &format!("1000 snapshot pairs, max rel err {worst:e}, {flagged} zero baselines flagged, {leaked} leaked"),
    );
}

// ---------------------------------------------------------------- 4

fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn criterion_04_spearman_oracles() {
    let mut rng = seed::rng(404);
    let mut worst_plain = 0.0f64;
    let mut worst_ties = 0.0f64;
    for _ in 0..500 {
        let n = rng.gen_range(5..=40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let (rx, ry) = (brute_ranks(&x), brute_ranks(&y));
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        let nf = n as f64;
        let formula = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        worst_plain = worst_plain.max((spearman_rho(&x, &y).unwrap() - formula).abs());

        let xt: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        let yt: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        if let Ok(rho) = spearman_rho(&xt, &yt) {
            worst_ties = worst_ties.max((rho - pearson(&brute_ranks(&xt), &brute_ranks(&yt))).abs());
        }
    }
    let p5 = spearman_p_value(1.0, 5, PValueMethod::ExactPermutation).unwrap().p;
    let mut worst_gap = 0.0f64;
    for _ in 0..200 {
        let x: Vec<f64> = (0..9).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..9).map(|_| rng.gen::<f64>()).collect();
        let rho = spearman_rho(&x, &y).unwrap();
        let exact = spearman_p_value(rho, 9, PValueMethod::ExactPermutation).unwrap().p;
        let approx = spearman_p_value(rho, 9, PValueMethod::TApprox).unwrap().p;
        worst_gap = worst_gap.max((exact - approx).abs());
    }
    let pass = worst_plain <= 1e-9 && worst_ties <= 1e-9 && (p5 - 2.0 / 120.0).abs() < 1e-15 && worst_gap <= 0.05;
    report(
        4,
        pass,
        &format!(
            "sum-d2 err {worst_plain:e}, tied err {worst_ties:e}, p(n=5, rho=1) = {p5}, max exact/t gap at n=9 {worst_gap:.4}"
        ),
    );
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_auc_calibration() {
    let mut rng = seed::rng(505);
    let positive: Vec<bool> = (0..10_000).map(|i| i % 2 == 0).collect();
    let scores: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
    let random = roc_auc(&scores, &positive);
    let separated: Vec<f64> =
        positive.iter().map(|&p| if p { 1.0 + rng.gen::<f64>() } else { rng.gen::<f64>() }).collect();
    let perfect = roc_auc(&separated, &positive);
    let fixture = roc_auc(&[0.6, 0.35, 0.8, 0.4], &[true, true, true, false]);
    let pass = (random - 0.5).abs() <= 0.02 && perfect == 1.0 && fixture == 2.0 / 3.0;
    report(5, pass, &format!("random {random:.4}, separated {perfect}, fixture {fixture}"));
}

// ---------------------------------------------------------------- 6

/// Box-Muller standard normal.
fn normal(rng: &mut impl Rng) -> f64 {
    let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn criterion_06_blobs_choose_three() {
    let mut rng = seed::rng(606);
    let side = 10.0;
    let centers = [(0.0, 0.0), (side, 0.0), (side / 2.0, side * 3f64.sqrt() / 2.0)];
    let sigma = 0.1 * side;
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (c, &(cx, cy)) in centers.iter().enumerate() {
        for _ in 0..100 {
            points.push(vec![cx + sigma * normal(&mut rng), cy + sigma * normal(&mut rng)]);
            truth.push(c);
        }
    }
    let t = Instant::now();
    let ks: Vec<usize> = (1..=8).collect();
    let elbow = elbow_select(&points, &ks, 7).unwrap().chosen;
    let mut best = (0, f64::NEG_INFINITY);
    for k in 2..=8 {
        let c = kmeans(&points, k, 7).unwrap();
        let s = silhouette_score(&points, &c.assignment).unwrap().mean;
        if s > best.1 {
            best = (k, s);
        }
    }
    let c3 = kmeans(&points, 3, 7).unwrap();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let agreement =
        perms.iter().map(|p| c3.assignment.iter().zip(&truth).filter(|(&a, &t)| p[a] == t).count()).max().unwrap()
            as f64
            / points.len() as f64;
    let elapsed = t.elapsed();
    let pass = elbow == 3 && best.0 == 3 && agreement >= 0.99 && elapsed < Duration::from_secs(10);
    report(
        6,
        pass,
        &format!("elbow k={elbow}, silhouette k={} ({:.3}), agreement {agreement:.3}, {elapsed:?}", best.0, best.1),
    );
}

// ---------------------------------------------------------------- 7

#[test]
#[ignore = "the listed partition is not a k-means optimum for these values; run with --include-ignored to see it fail"]
fn criterion_07_level_fixture() {
    let values = [2.0, 3.9, 4.2, 8.5, 9.5, 12.0];
    let expected = ["LOW", "LOW", "MEDIUM", "MEDIUM", "HIGH", "HIGH"];
    let part = level_partition(&values, 3, &["LOW", "MEDIUM", "HIGH"], 42).unwrap();
    let got: Vec<&str> = values.iter().map(|&v| part.classify(v)).collect();
    report(7, got == expected, &format!("got {got:?} with edges {:?}, expected {expected:?}", part.edges));
}

// ---------------------------------------------------------------- 8-10

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_refmine")
}

fn refmine(args: &[&str]) {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    assert!(out.status.success(), "refmine {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn scratch(name: &str) -> PathBuf {
    let p = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&p);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    p
}

struct DefaultRun {
    data: PathBuf,
    run: PathBuf,
    elapsed: Duration,
}

/// The default scenario through synth and the full pipeline, built once.
fn default_run() -> &'static DefaultRun {
    static RUN: OnceLock<DefaultRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let (data, run) = (scratch("default-data"), scratch("default-run"));
        let t = Instant::now();
        refmine(&["synth", "--out", data.to_str().unwrap()]);
        refmine(&["pipeline", "--input", data.to_str().unwrap(), "--out", run.to_str().unwrap()]);
        DefaultRun { data, run, elapsed: t.elapsed() }
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const DRIVERS: [&str; 4] = ["EVTS", "NOA", "DEV", "NCOM"];
const NOISE: [&str; 5] = ["NVER", "NPLA", "NISP", "NOS", "NPER"];

#[test]
fn criterion_08_synthetic_reproduction() {
    let base = default_run();

    let mut ordering = Vec::new();
    for s in 1..=10 {
        let (data, run) = (scratch(&format!("seed{s}-data")), scratch(&format!("seed{s}-run")));
        let seed = s.to_string();
        refmine(&["synth", "--out", data.to_str().unwrap(), "--seed", &seed]);
        refmine(&["pipeline", "--input", data.to_str().unwrap(), "--out", run.to_str().unwrap(), "--seed", &seed]);
        let summary = read_json(&run.join("report/summary.json"));
        ordering.push(summary["pcc_mr_exceeds_ar"].as_bool() == Some(true));
    }
    let a = ordering.iter().all(|&b| b);

    let summary = read_json(&base.run.join("report/summary.json"));
    let roc = summary["classification"]["practice"]["weighted_roc_area"].as_f64().unwrap();
    let b = roc >= 0.90;

    let mut imp = BTreeMap::new();
    let mut reader = csv::Reader::from_path(base.run.join("train/practice/importance.csv")).unwrap();
    let mut top = None;
    for rec in reader.records() {
        let rec = rec.unwrap();
        top.get_or_insert_with(|| rec[0].to_string());
        imp.insert(rec[0].to_string(), rec[1].parse::<f64>().unwrap());
    }
    let top = top.unwrap();
    let noise_max = NOISE.iter().map(|n| imp[*n]).fold(0.0, f64::max);
    let driver_mean = DRIVERS.iter().map(|d| imp[*d]).sum::<f64>() / DRIVERS.len() as f64;
    let c = DRIVERS.contains(&top.as_str()) && driver_mean > noise_max;

    let fast = base.elapsed < Duration::from_secs(120);
    report(
        8,
        a && b && c && fast,
        &format!(
            "(a) MR>AR on seeds 1-10: {a}; (b) weighted ROC {roc:.3}; (c) top feature {top}, driver mean {driver_mean:.3} vs noise max {noise_max:.3}, drivers {:?}; runtime {:?}",
            DRIVERS.map(|d| (d, (imp[d] * 1000.0).round() / 1000.0)),
            base.elapsed
        ),
    );
}

#[test]
fn criterion_09_label_permutation_null() {
    let base = default_run();
    let table =
        FeatureTable::read_csv(std::fs::File::open(base.run.join("metrics/features.csv")).unwrap()).unwrap().standard();
    let rows: Vec<Vec<f64>> = table.rows.iter().map(|r| r.features.clone()).collect();
    let labels: Vec<String> = table.rows.iter().map(|r| r.practice.unwrap().to_string()).collect();
    let spec = ClassifierSpec::default_for(Family::Forest);
    let mut rng = seed::rng(909);
    let mut rocs = Vec::new();
    for i in 0..10 {
        let mut shuffled = labels.clone();
        shuffled.shuffle(&mut rng);
        let data = Dataset::new(table.feature_columns.clone(), rows.clone(), &shuffled).unwrap();
        rocs.push(cross_validate(&spec, &data, 10, i).unwrap().report.weighted.roc_area);
    }
    let mean = rocs.iter().sum::<f64>() / rocs.len() as f64;
    let (lo, hi) = rocs.iter().fold((1.0f64, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    report(
        9,
        (mean - 0.5).abs() <= 0.1,
        &format!("mean shuffled ROC {mean:.3} over 10 shuffles (range {lo:.3}-{hi:.3})"),
    );
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_10_reruns_are_byte_identical() {
    let base = default_run();
    let (data2, run2) = (scratch("rerun-data"), scratch("rerun-run"));
    refmine(&["synth", "--out", data2.to_str().unwrap()]);
    refmine(&["pipeline", "--input", base.data.to_str().unwrap(), "--out", run2.to_str().unwrap()]);
    let (d1, d2) = (tree(&base.data), tree(&data2));
    let (r1, r2) = (tree(&base.run), tree(&run2));
    let dots = r1.keys().filter(|p| p.extension().is_some_and(|e| e == "dot")).count();
    let differing: Vec<_> = r1.keys().filter(|k| r1.get(*k) != r2.get(*k)).take(3).collect();
    let pass = d1 == d2 && r1 == r2 && dots > 0;
    report(
        10,
        pass,
        &format!("{} data files, {} run files ({dots} DOT) compared, differing: {differing:?}", d1.len(), r1.len()),
    );
}

// ---------------------------------------------------------------- 11

struct Brute {
    tp_rate: f64,
    fp_rate: f64,
    precision: f64,
    f_measure: f64,
    mcc: f64,
    roc: f64,
    prc: f64,
}

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn brute_class(probs: &[Vec<f64>], labels: &[usize], predicted: &[usize], c: usize) -> Brute {
    let count =
        |f: &dyn Fn(usize, usize) -> bool| labels.iter().zip(predicted).filter(|(&a, &p)| f(a, p)).count() as f64;
    let tp = count(&|a, p| a == c && p == c);
    let fp = count(&|a, p| a != c && p == c);
    let fn_ = count(&|a, p| a == c && p != c);
    let tn = count(&|a, p| a != c && p != c);
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);

    let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == c).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l != c).map(|(s, _)| *s).collect();
    let roc = if pos.is_empty() || neg.is_empty() {
        0.5
    } else {
        let mut wins = 0.0;
        for p in &pos {
            for n in &neg {
                wins += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        wins / (pos.len() * neg.len()) as f64
    };
    let prc = if pos.is_empty() {
        0.0
    } else {
        let mut thresholds = scores.clone();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut area = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for t in thresholds {
            let tp_t = pos.iter().filter(|&&s| s >= t).count() as f64;
            let fp_t = neg.iter().filter(|&&s| s >= t).count() as f64;
            let (r, p) = (tp_t / pos.len() as f64, tp_t / (tp_t + fp_t));
            let (r0, p0) = prev.unwrap_or((0.0, p));
            area += (r - r0) * (p + p0) / 2.0;
            prev = Some((r, p));
        }
        area
    };
    Brute {
        tp_rate: recall,
        fp_rate: div(fp, fp + tn),
        precision,
        f_measure: div(2.0 * precision * recall, precision + recall),
        mcc: div(tp * tn - fp * fn_, ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt()),
        roc,
        prc,
    }
}

#[test]
fn criterion_11_evaluation_matches_brute_force() {
    let mut rng = seed::rng(1111);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let k = rng.gen_range(2..=4);
        let n = rng.gen_range(4..=40);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        // Coarse weights produce tied scores and tied argmaxes.
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0..4) as f64 + 0.5).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            })
            .collect();
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let r = evaluate(&probs, &labels, &names).unwrap();
        let predicted: Vec<usize> = probs
            .iter()
            .map(|p| {
                let m = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                p.iter().position(|&v| v == m).unwrap()
            })
            .collect();
        let accuracy = labels.iter().zip(&predicted).filter(|(a, p)| a == p).count() as f64 / n as f64;
        let mut check = |a: f64, b: f64| worst = worst.max((a - b).abs());
        check(r.accuracy, accuracy);
        let mut weighted = [0.0; 8];
        for c in 0..k {
            let b = brute_class(&probs, &labels, &predicted, c);
            let m = &r.per_class[c];
            let vals = [b.tp_rate, b.fp_rate, b.precision, b.tp_rate, b.f_measure, b.mcc, b.roc, b.prc];
            let got = [m.tp_rate, m.fp_rate, m.precision, m.recall, m.f_measure, m.mcc, m.roc_area, m.prc_area];
            let support = labels.iter().filter(|&&l| l == c).count() as f64;
            for i in 0..8 {
                check(got[i], vals[i]);
                weighted[i] += support * vals[i] / n as f64;
            }
        }
        let w = &r.weighted;
        let got = [w.tp_rate, w.fp_rate, w.precision, w.recall, w.f_measure, w.mcc, w.roc_area, w.prc_area];
        for i in 0..8 {
            check(got[i], weighted[i]);
        }
    }
    report(11, worst <= 1e-12, &format!("50 prediction sets, max deviation {worst:e}"));
}
