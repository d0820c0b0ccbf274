use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use refmine::discovery::{discover_model, export_dot, filter_model, flatten_level, Overlay, MAX_LEVEL};
use refmine::eventlog::{
    build_log, deduplicate, ingest, parse_events, write_events, EventLog, Format, HashPolicy, IngestReport,
};
use refmine::learn::{
    cross_validate, cv_permutation_importance, greedy_feature_select, grid_search, train, ClassifierSpec, Dataset,
    Direction,
};
use refmine::metrics::{
    assemble_feature_table, command_frequency_vector, compute_process_metrics, deltas_by_team, read_snapshots,
    CommandCatalog, FeatureRow, FeatureSet, FeatureTable, Practice, PRODUCT_METRICS,
};
use refmine::seed;
use refmine::stats::{correlation_matrix, elbow_select, kmeans, level_partition, silhouette_score, LevelPartition};
use refmine::synth::{generate, read_labels};
use refmine::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{level_labels, PipelineConfig, SelectMode};
use crate::fsio::{ensure_replaceable, read_text, Staged};

const STREAM_PARTITION: u64 = 0x7061_7274;
const STREAM_TRAIN: u64 = 0x7472_6e67;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const PRODUCTS_FILE: &str = "products.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const TRUTH_FILE: &str = "ground_truth.csv";
pub const CONFIG_ECHO: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Discover,
    Metrics,
    Partition,
    Correlate,
    Train,
    Synth,
    Report,
}

impl Stage {
    pub const PIPELINE: [Stage; 7] = [
        Stage::Ingest,
        Stage::Discover,
        Stage::Metrics,
        Stage::Partition,
        Stage::Correlate,
        Stage::Train,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Discover => "discover",
            Stage::Metrics => "metrics",
            Stage::Partition => "partition",
            Stage::Correlate => "correlate",
            Stage::Train => "train",
            Stage::Synth => "synth",
            Stage::Report => "report",
        }
    }
}

/// Run one stage; returns the directory it wrote.
pub fn run(stage: Stage, cfg: &PipelineConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let out = cfg.out.clone().ok_or_else(|| Error::Config("--out is required".to_string()))?;
    if stage == Stage::Synth {
        return synth(cfg, &out);
    }
    let created = !out.exists();
    if !created {
        ensure_replaceable(&out)?;
    }
    let result = run_stage(stage, cfg, &out);
    if result.is_err() && created {
        // Nothing else lives there yet; leave no trace of the failed run.
        let _ = fs::remove_dir_all(&out);
    }
    result
}

fn run_stage(stage: Stage, cfg: &PipelineConfig, out: &Path) -> Result<PathBuf> {
    let target = out.join(stage.name());
    let staged = Staged::new(&target)?;
    match stage {
        Stage::Ingest => run_ingest(cfg, &staged)?,
        Stage::Discover => run_discover(cfg, out, &staged)?,
        Stage::Metrics => run_metrics(cfg, out, &staged)?,
        Stage::Partition => run_partition(cfg, out, &staged)?,
        Stage::Correlate => run_correlate(cfg, out, &staged)?,
        Stage::Train => run_train(cfg, out, &staged)?,
        Stage::Report => run_report(out, &staged)?,
        Stage::Synth => unreachable!(),
    }
    staged.write(CONFIG_ECHO, echo(cfg)?)?;
    // The run directory itself is owned once a stage lands in it.
    let marker = out.join(crate::fsio::MARKER);
    staged.commit()?;
    if !marker.exists() {
        fs::write(marker, b"")?;
    }
    Ok(target)
}

/// Effective config without the output path, so runs into different
/// directories stay byte-identical.
fn echo(cfg: &PipelineConfig) -> Result<String> {
    PipelineConfig { out: None, ..cfg.clone() }.to_toml()
}

fn input(cfg: &PipelineConfig) -> Result<&Path> {
    let p = cfg.input.as_deref().ok_or_else(|| Error::Config("--input is required".to_string()))?;
    if !p.exists() {
        return Err(Error::Input(format!("input path {} does not exist", p.display())));
    }
    Ok(p)
}

fn prior(out: &Path, stage: Stage, file: &str) -> Result<PathBuf> {
    let p = out.join(stage.name()).join(file);
    if !p.is_file() {
        return Err(Error::Input(format!("missing {}; run the {} stage first", p.display(), stage.name())));
    }
    Ok(p)
}

fn csv_bytes<F: FnOnce(&mut Vec<u8>) -> Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Event files under `path`: the file itself, `path/events/`, or `path`.
fn event_files(path: &Path) -> Result<Vec<(PathBuf, Format)>> {
    let format_of = |p: &Path| p.extension().and_then(|e| e.to_str()).and_then(Format::from_extension);
    if path.is_file() {
        let f = format_of(path).ok_or_else(|| Error::Input(format!("unknown event format for {}", path.display())))?;
        return Ok(vec![(path.to_path_buf(), f)]);
    }
    let dir = if path.join("events").is_dir() { path.join("events") } else { path.to_path_buf() };
    let skip = [PRODUCTS_FILE, LABELS_FILE, TRUTH_FILE];
    let mut files = Vec::new();
    for entry in fs::read_dir(&dir)? {
        let p = entry?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !p.is_file() || name.starts_with('.') || skip.contains(&name) {
            continue;
        }
        if let Some(f) = format_of(&p) {
            files.push((p, f));
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    if files.is_empty() {
        return Err(Error::Input(format!("no .jsonl or .csv event files in {}", dir.display())));
    }
    Ok(files)
}

fn run_ingest(cfg: &PipelineConfig, staged: &Staged) -> Result<()> {
    let mut all = Vec::new();
    let mut report = IngestReport::default();
    for (path, format) in event_files(input(cfg)?)? {
        let file = fs::File::open(&path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let (events, r) = ingest(file, format, HashPolicy::Reject, None)?;
        report.absorb(&r);
        all.extend(events);
    }
    // Files may overlap; deduplicate across them too.
    let (kept, removed) = deduplicate(all);
    report.duplicates_removed += removed;
    if kept.is_empty() {
        return Err(Error::Data("no valid events after ingestion".to_string()));
    }
    let canonical = build_log(&kept).to_raw_events();
    staged.write(EVENTS_FILE, csv_bytes(|b| write_events(&canonical, Format::JsonLines, b))?)?;
    staged.write("report.txt", report.to_key_values())
}

fn load_log(out: &Path) -> Result<EventLog> {
    let path = prior(out, Stage::Ingest, EVENTS_FILE)?;
    let file = fs::File::open(&path)?;
    let (events, report) = parse_events(file, Format::JsonLines)?;
    if report.rejected > 0 {
        return Err(Error::Schema(format!("{} has {} malformed events", path.display(), report.rejected)));
    }
    Ok(build_log(&events))
}

/// File-name-safe team id.
pub fn sanitize(team: &str) -> String {
    team.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn run_discover(cfg: &PipelineConfig, out: &Path, staged: &Staged) -> Result<()> {
    let d = &cfg.discover;
    let mut seen = BTreeMap::new();
    for (team, log) in load_log(out)?.split_by_team() {
        let name = sanitize(&team);
        if let Some(other) = seen.insert(name.clone(), team.clone()) {
            return Err(Error::Schema(format!("teams {other:?} and {team:?} share file name {name}")));
        }
        let model = discover_model(&log, MAX_LEVEL)?;
        let ts = filter_model(flatten_level(&model, d.level)?, d.filter_activities, d.filter_paths)?;
        staged.write(&format!("models/{name}.json"), model.summary_json()? + "\n")?;
        staged.write(&format!("dot/{name}.dot"), export_dot(&ts, Overlay::AbsoluteFrequency))?;
    }
    Ok(())
}

fn run_metrics(cfg: &PipelineConfig, out: &Path, staged: &Staged) -> Result<()> {
    let dir = input(cfg)?;
    let dir = if dir.is_file() { dir.parent().unwrap_or(Path::new(".")) } else { dir };
    let products = dir.join(PRODUCTS_FILE);
    let snapshots = read_snapshots(read_text(&products)?.as_bytes())?;
    let deltas = deltas_by_team(&snapshots)?;
    let labels_path = dir.join(LABELS_FILE);
    let labels =
        if labels_path.is_file() { read_labels(read_text(&labels_path)?.as_bytes())? } else { BTreeMap::new() };

    let catalog = CommandCatalog::default();
    let mut rows = Vec::new();
    for (team, log) in load_log(out)?.split_by_team() {
        let delta = deltas
            .get(&team)
            .cloned()
            .ok_or_else(|| Error::Schema(format!("team {team} has events but no product snapshots")))?;
        let model = discover_model(&log, MAX_LEVEL)?;
        rows.push(FeatureRow {
            process: compute_process_metrics(&log, &model)?,
            commands: Some(command_frequency_vector(&log, &catalog)),
            delta,
            practice: labels.get(&team).copied(),
            team,
        });
    }
    let table = assemble_feature_table(&rows, FeatureSet::Extended)?;
    staged.write("features.csv", csv_bytes(|b| table.write_csv(b))?)
}

fn load_table(out: &Path) -> Result<FeatureTable> {
    let path = prior(out, Stage::Metrics, "features.csv")?;
    FeatureTable::read_csv(fs::File::open(path)?)
}

fn select_features(table: &FeatureTable, set: FeatureSet) -> FeatureTable {
    match set {
        FeatureSet::Standard => table.standard(),
        FeatureSet::Extended => table.clone(),
    }
}

/// Complexity reduction (negated VG delta) per row.
fn vg_reductions(table: &FeatureTable) -> Vec<Option<f64>> {
    table.delta_column("VG").unwrap_or_default().into_iter().map(|d| d.map(|v| -v)).collect()
}

#[derive(Serialize)]
struct VariablePartition {
    variable: String,
    k: usize,
    elbow_k: Option<usize>,
    best_silhouette_k: Option<usize>,
    partition: LevelPartition,
}

fn partition_variable(
    name: &str,
    values: &[f64],
    k: usize,
    max_k: usize,
    seed: u64,
    curve: &mut csv::Writer<Vec<u8>>,
) -> Result<VariablePartition> {
    let points: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    let ks: Vec<usize> = (1..=max_k.min(values.len())).collect();
    let elbow = if ks.len() >= 3 { Some(elbow_select(&points, &ks, seed)?) } else { None };
    let mut best: Option<(usize, f64)> = None;
    for (i, &kk) in ks.iter().enumerate() {
        let clustering = kmeans(&points, kk, seed)?;
        let sil = if kk >= 2 && kk < values.len() {
            Some(silhouette_score(&points, &clustering.assignment)?.mean)
        } else {
            None
        };
        if let Some(s) = sil {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((kk, s));
            }
        }
        let distortion = elbow.as_ref().map_or(clustering.distortion, |e| e.distortions[i]);
        curve.write_record([
            name.to_string(),
            kk.to_string(),
            distortion.to_string(),
            sil.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    let labels = level_labels(k);
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Ok(VariablePartition {
        variable: name.to_string(),
        k,
        elbow_k: elbow.map(|e| e.chosen),
        best_silhouette_k: best.map(|b| b.0),
        partition: level_partition(values, k, &label_refs, seed)?,
    })
}

fn run_partition(cfg: &PipelineConfig, out: &Path, staged: &Staged) -> Result<()> {
    let table = load_table(out)?;
    let p = &cfg.partition;
    let pcc = table.column("PCC").ok_or_else(|| Error::Schema("features.csv lacks PCC".to_string()))?;
    let reductions = vg_reductions(&table);
    let defined: Vec<f64> = reductions.iter().flatten().copied().collect();

    let mut curve = csv::Writer::from_writer(Vec::new());
    curve.write_record(["variable", "k", "distortion", "silhouette"])?;
    let pcc_part =
        partition_variable("PCC", &pcc, p.pcc_k, p.max_k, seed::derive(cfg.seed, STREAM_PARTITION, 0), &mut curve)?;
    let vg_part = partition_variable(
        "VG_REDUCTION",
        &defined,
        p.k,
        p.max_k,
        seed::derive(cfg.seed, STREAM_PARTITION, 1),
        &mut curve,
    )?;

    let mut levels = csv::Writer::from_writer(Vec::new());
    levels.write_record(["team", "PCC", "PCC_LEVEL", "VG_REDUCTION", "VG_LEVEL"])?;
    for ((row, pcc), red) in table.rows.iter().zip(&pcc).zip(&reductions) {
        levels.write_record([
            row.team.clone(),
            pcc.to_string(),
            pcc_part.partition.classify(*pcc).to_string(),
            red.map(|r| r.to_string()).unwrap_or_default(),
            red.map(|r| vg_part.partition.classify(r).to_string()).unwrap_or_default(),
        ])?;
    }
    staged.write("levels.csv", levels.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    staged.write("elbow.csv", curve.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    staged.write("partition.json", to_json(&json!({ "PCC": pcc_part, "VG_REDUCTION": vg_part }))?)
}

fn run_correlate(cfg: &PipelineConfig, out: &Path, staged: &Staged) -> Result<()> {
    let table = select_features(&load_table(out)?, cfg.train.features);
    let groups: [(&str, Option<Practice>); 3] = [("AR", Some(Practice::AR)), ("MR", Some(Practice::MR)), ("all", None)];
    let mut significant = csv::Writer::from_writer(Vec::new());
    significant.write_record(["group", "feature", "metric", "rho", "p", "n"])?;
    for (group, practice) in groups {
        let members: Vec<usize> =
            (0..table.rows.len()).filter(|&i| practice.is_none_or(|p| table.rows[i].practice == Some(p))).collect();
        let rows: Vec<(String, Vec<Option<f64>>)> = table
            .feature_columns
            .iter()
            .enumerate()
            .map(|(j, name)| (name.clone(), members.iter().map(|&i| Some(table.rows[i].features[j])).collect()))
            .collect();
        let columns: Vec<(String, Vec<Option<f64>>)> = PRODUCT_METRICS
            .iter()
            .enumerate()
            .map(|(m, name)| (format!("d_{name}"), members.iter().map(|&i| table.rows[i].deltas[m]).collect()))
            .collect();
        let matrix = correlation_matrix(&rows, &columns, cfg.correlate.alpha, cfg.correlate.method)?;
        staged.write(&format!("rho_{group}.csv"), csv_bytes(|b| matrix.write_rho_csv(b))?)?;
        staged.write(&format!("p_{group}.csv"), csv_bytes(|b| matrix.write_p_csv(b))?)?;
        for (r, row) in matrix.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let Some(cell) = cell.as_ref().filter(|c| c.significant) {
                    significant.write_record([
                        group.to_string(),
                        matrix.rows[r].clone(),
                        matrix.columns[c].clone(),
                        cell.rho.to_string(),
                        cell.p_value.to_string(),
                        cell.n.to_string(),
                    ])?;
                }
            }
        }
    }
    staged.write("significant.csv", significant.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}

/// Team -> VG level from the partition stage.
fn load_vg_levels(out: &Path) -> Result<BTreeMap<String, String>> {
    let path = prior(out, Stage::Partition, "levels.csv")?;
    let mut r = csv::Reader::from_reader(fs::File::open(path)?);
    let mut map = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        if let (Some(team), Some(level)) = (rec.get(0), rec.get(4)) {
            if !level.is_empty() {
                map.insert(team.to_string(), level.to_string());
            }
        }
    }
    Ok(map)
}

struct Target {
    name: &'static str,
    teams: Vec<String>,
    data: Dataset,
}

fn build_target(
    name: &'static str,
    table: &FeatureTable,
    label: impl Fn(&str, usize) -> Option<String>,
) -> Result<Option<Target>> {
    let mut teams = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        if let Some(l) = label(&row.team, i) {
            teams.push(row.team.clone());
            rows.push(row.features.clone());
            labels.push(l);
        }
    }
    let distinct: std::collections::BTreeSet<&String> = labels.iter().collect();
    if distinct.len() < 2 {
        return Ok(None);
    }
    Ok(Some(Target { name, teams, data: Dataset::new(table.feature_columns.clone(), rows, &labels)? }))
}

fn train_target(cfg: &PipelineConfig, target: &Target, index: u64, staged: &Staged) -> Result<Value> {
    let t = &cfg.train;
    let seed = seed::derive(cfg.seed, STREAM_TRAIN, index);
    let smallest = target.data.class_counts().into_iter().filter(|&n| n > 0).min().unwrap_or(0);
    let folds = t.folds.min(smallest);
    if folds < 2 {
        return Ok(json!({ "status": "skipped", "reason": format!("smallest class has {smallest} rows") }));
    }
    let dir = target.name;

    let (spec, grid) = if t.grid {
        let g = grid_search(t.family, &target.data, folds, seed)?;
        (g.best.clone(), Some(g))
    } else {
        (ClassifierSpec::default_for(t.family), None)
    };
    let selection = match t.select {
        SelectMode::None => None,
        SelectMode::Forward => Some(greedy_feature_select(&spec, &target.data, Direction::Forward, folds, seed)?),
        SelectMode::Backward => Some(greedy_feature_select(&spec, &target.data, Direction::Backward, folds, seed)?),
    };
    let data = match &selection {
        Some(s) => target.data.project_names(&s.selected)?,
        None => target.data.clone(),
    };

    let cv = cross_validate(&spec, &data, folds, seed)?;
    staged.write(&format!("{dir}/eval.csv"), csv_bytes(|b| cv.report.write_csv(b))?)?;
    staged.write(&format!("{dir}/eval.json"), to_json(&cv.report)?)?;

    let mut preds = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["team".to_string(), "actual".to_string(), "predicted".to_string(), "fold".to_string()];
    header.extend(data.class_names.iter().map(|c| format!("p_{c}")));
    preds.write_record(&header)?;
    for (i, p) in cv.probabilities.iter().enumerate() {
        let mut rec = vec![
            target.teams[i].clone(),
            data.class_names[data.labels[i]].clone(),
            data.class_names[refmine::learn::argmax(p)].clone(),
            cv.folds[i].to_string(),
        ];
        rec.extend(p.iter().map(|v| v.to_string()));
        preds.write_record(&rec)?;
    }
    staged.write(&format!("{dir}/predictions.csv"), preds.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;

    let importance = cv_permutation_importance(&spec, &data, folds, t.repeats, seed)?;
    let mut imp = csv::Writer::from_writer(Vec::new());
    imp.write_record(["feature", "importance", "raw_drop"])?;
    for name in importance.ranking() {
        let j = importance.names.iter().position(|n| n == name).expect("ranked name exists");
        imp.write_record([name.to_string(), importance.values[j].to_string(), importance.raw[j].to_string()])?;
    }
    staged.write(&format!("{dir}/importance.csv"), imp.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;

    let model = train(&spec, &data, seed)?;
    staged.write(&format!("{dir}/model.json"), model.to_json()? + "\n")?;
    staged.write(
        &format!("{dir}/selection.json"),
        to_json(&json!({ "spec": spec, "folds": folds, "grid": grid, "selection": selection }))?,
    )?;
    Ok(json!({
        "status": "trained",
        "rows": data.len(),
        "folds": folds,
        "features": data.feature_names,
    }))
}

fn run_train(cfg: &PipelineConfig, out: &Path, staged: &Staged) -> Result<()> {
    let table = select_features(&load_table(out)?, cfg.train.features);
    let vg = load_vg_levels(out)?;
    let targets = [
        build_target("practice", &table, |_, i| table.rows[i].practice.map(|p| p.to_string()))?,
        build_target("vg_level", &table, |team, _| vg.get(team).cloned())?,
    ];
    let mut status = BTreeMap::new();
    for (i, target) in targets.iter().enumerate() {
        let name = ["practice", "vg_level"][i];
        let s = match target {
            Some(t) => train_target(cfg, t, i as u64, staged)?,
            None => json!({ "status": "skipped", "reason": "fewer than two labelled classes" }),
        };
        status.insert(name, s);
    }
    staged.write("targets.json", to_json(&status)?)
}

fn read_json(path: &Path) -> Result<Option<Value>> {
    if !path.is_file() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&read_text(path)?)?))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn run_report(out: &Path, staged: &Staged) -> Result<()> {
    let table = load_table(out)?;
    let reductions = vg_reductions(&table);
    let col = |name: &str| table.column(name).unwrap_or_default();
    let (pcc, evts) = (col("PCC"), col("EVTS"));

    let mut cohorts = serde_json::Map::new();
    for practice in [Practice::AR, Practice::MR] {
        let idx: Vec<usize> = (0..table.rows.len()).filter(|&i| table.rows[i].practice == Some(practice)).collect();
        cohorts.insert(
            practice.to_string(),
            json!({
                "teams": idx.len(),
                "mean_PCC": mean(idx.iter().map(|&i| pcc[i])),
                "mean_EVTS": mean(idx.iter().map(|&i| evts[i])),
                "mean_VG_REDUCTION": mean(idx.iter().filter_map(|&i| reductions[i])),
            }),
        );
    }
    let pcc_of = |p: &str| cohorts.get(p).and_then(|c| c["mean_PCC"].as_f64());
    let ordering = match (pcc_of("AR"), pcc_of("MR")) {
        (Some(ar), Some(mr)) => Some(mr > ar),
        _ => None,
    };

    let mut significant = BTreeMap::<String, usize>::new();
    let sig_path = out.join(Stage::Correlate.name()).join("significant.csv");
    if sig_path.is_file() {
        let mut r = csv::Reader::from_reader(fs::File::open(sig_path)?);
        for rec in r.records() {
            *significant.entry(rec?.get(0).unwrap_or("").to_string()).or_default() += 1;
        }
    }

    let mut classification = serde_json::Map::new();
    for target in ["practice", "vg_level"] {
        let dir = out.join(Stage::Train.name()).join(target);
        let Some(eval) = read_json(&dir.join("eval.json"))? else { continue };
        let mut top = Vec::new();
        if let Ok(text) = fs::read_to_string(dir.join("importance.csv")) {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            for rec in r.records().take(5) {
                let rec = rec?;
                top.push(
                    json!({ "feature": rec.get(0), "importance": rec.get(1).and_then(|v| v.parse::<f64>().ok()) }),
                );
            }
        }
        classification.insert(
            target.to_string(),
            json!({
                "accuracy": eval["accuracy"],
                "weighted_roc_area": eval["weighted"]["roc_area"],
                "weighted_prc_area": eval["weighted"]["prc_area"],
                "weighted_mcc": eval["weighted"]["mcc"],
                "top_features": top,
            }),
        );
    }

    let summary = json!({
        "teams": table.rows.len(),
        "cohorts": cohorts,
        "pcc_mr_exceeds_ar": ordering,
        "partition": read_json(&out.join(Stage::Partition.name()).join("partition.json"))?,
        "significant_correlations": significant,
        "classification": classification,
    });
    staged.write("summary.json", to_json(&summary)?)
}

fn synth(cfg: &PipelineConfig, out: &Path) -> Result<PathBuf> {
    cfg.synth.validate()?;
    if out.exists() {
        ensure_replaceable(out)?;
    }
    let scenario = generate(&cfg.synth)?;
    let staged = Staged::new(out)?;
    for (team, events) in &scenario.events {
        staged.write(
            &format!("events/{}.jsonl", sanitize(team)),
            csv_bytes(|b| write_events(events, Format::JsonLines, b))?,
        )?;
    }
    staged.write(PRODUCTS_FILE, csv_bytes(|b| refmine::metrics::write_snapshots(&scenario.snapshots, b))?)?;
    staged.write(LABELS_FILE, csv_bytes(|b| scenario.write_labels(b))?)?;
    staged.write(TRUTH_FILE, csv_bytes(|b| scenario.write_truth(b))?)?;
    staged.write(CONFIG_ECHO, echo(cfg)?)?;
    staged.commit()?;
    Ok(out.to_path_buf())
}

/// Every pipeline stage in order; stops at the first failure.
pub fn run_pipeline(cfg: &PipelineConfig) -> std::result::Result<PathBuf, (Stage, Error)> {
    let mut last = PathBuf::new();
    for stage in Stage::PIPELINE {
        last = run(stage, cfg).map_err(|e| (stage, e))?;
    }
    Ok(last)
}
