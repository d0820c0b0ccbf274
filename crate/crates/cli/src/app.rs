use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use refmine::learn::Family;
use refmine::metrics::FeatureSet;
use refmine::Error;

use crate::config::{one_line, Overrides, PipelineConfig};
use crate::stages::{self, Stage};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "refmine", version, about = "Mine refactoring sessions from IDE event logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, verify and deduplicate raw events.
    Ingest,
    /// Discover per-team transition systems and export DOT.
    Discover,
    /// Compute the team feature table.
    Metrics,
    /// Cluster PCC and complexity reduction into levels.
    Partition,
    /// Spearman correlations between features and product deltas.
    Correlate,
    /// Cross-validate and fit classifiers.
    Train,
    /// Generate a synthetic data set into --out.
    Synth,
    /// Aggregate stage outputs into summary.json.
    Report,
    /// Run every stage from ingest to report.
    Pipeline,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Event log file or data directory.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Run directory; one subdirectory per stage.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Hierarchy depth: 0 file, 1 file|category, 2 file|category|command.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub level: Option<u8>,
    /// Fraction of most frequent activities kept in DOT output.
    #[arg(long, global = true)]
    pub filter_activities: Option<f64>,
    /// Fraction of most frequent paths kept in DOT output.
    #[arg(long, global = true)]
    pub filter_paths: Option<f64>,
    /// Number of complexity-reduction levels.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Significance level for correlations.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Cross-validation folds.
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// standard or extended.
    #[arg(long, global = true, value_parser = parse_features)]
    pub features: Option<FeatureSet>,
    /// tree, forest, bagging, logistic or knn.
    #[arg(long, global = true, value_parser = parse_family)]
    pub family: Option<Family>,
}

fn parse_features(s: &str) -> Result<FeatureSet, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            input: self.input.clone(),
            out: self.out.clone(),
            level: self.level.map(usize::from),
            filter_activities: self.filter_activities,
            filter_paths: self.filter_paths,
            k: self.k,
            alpha: self.alpha,
            folds: self.folds,
            seed: self.seed,
            features: self.features,
            family: self.family,
        }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", one_line(s).replace('\\', "\\\\").replace('"', "\\\""))
}

/// One machine-parsable line: `error: code=<CODE> stage=<stage> message="<text>"`.
pub fn error_line(code: &str, stage: &str, message: &str) -> String {
    format!("error: code={code} stage={stage} message={}", quote(message))
}

fn fail(stage: &str, e: &Error) -> i32 {
    eprintln!("{}", error_line(e.code(), stage, &e.to_string()));
    if e.is_validation() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

pub fn effective_config(flags: &Flags) -> refmine::Result<PipelineConfig> {
    let mut cfg = match &flags.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply(&flags.overrides());
    cfg.validate()?;
    Ok(cfg)
}

pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", error_line("USAGE", "args", first));
            return EXIT_CONFIG;
        }
    };
    let cfg = match effective_config(&cli.flags) {
        Ok(cfg) => cfg,
        Err(e) => return fail("config", &e),
    };
    let stage = match cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Discover => Stage::Discover,
        Command::Metrics => Stage::Metrics,
        Command::Partition => Stage::Partition,
        Command::Correlate => Stage::Correlate,
        Command::Train => Stage::Train,
        Command::Synth => Stage::Synth,
        Command::Report => Stage::Report,
        Command::Pipeline => {
            return match stages::run_pipeline(&cfg) {
                Ok(dir) => {
                    println!("{}", dir.display());
                    EXIT_OK
                }
                Err((stage, e)) => fail(stage.name(), &e),
            };
        }
    };
    match stages::run(stage, &cfg) {
        Ok(dir) => {
            println!("{}", dir.display());
            EXIT_OK
        }
        Err(e) => fail(stage.name(), &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_line_is_single_line_and_quoted() {
        let line = error_line("CONFIG", "train", "bad \"value\"\nsecond line");
        assert_eq!(line, "error: code=CONFIG stage=train message=\"bad \\\"value\\\" second line\"");
    }

    #[test]
    fn flag_parsing() {
        let cli =
            Cli::try_parse_from(["refmine", "train", "--folds", "5", "--family", "knn", "--features", "extended"])
                .unwrap();
        let o = cli.flags.overrides();
        assert_eq!((o.folds, o.family, o.features), (Some(5), Some(Family::Knn), Some(FeatureSet::Extended)));
        assert!(Cli::try_parse_from(["refmine", "discover", "--level", "3"]).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with(["refmine", "bogus"]), EXIT_CONFIG);
        assert_eq!(main_with(["refmine", "ingest", "--alpha", "2"]), EXIT_CONFIG);
    }
}
