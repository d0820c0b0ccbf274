use std::path::{Path, PathBuf};

use refmine::learn::Family;
use refmine::metrics::FeatureSet;
use refmine::stats::PValueMethod;
use refmine::synth::ScenarioConfig;
use refmine::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoverConfig {
    /// Level of the exported transition system (0..=2).
    pub level: usize,
    pub filter_activities: f64,
    pub filter_paths: f64,
}

impl Default for DiscoverConfig {
    fn default() -> Self {
        DiscoverConfig { level: 2, filter_activities: 1.0, filter_paths: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    /// Number of complexity-reduction levels.
    pub k: usize,
    /// Number of process-complexity levels.
    pub pcc_k: usize,
    /// Largest k on the elbow curve.
    pub max_k: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig { k: 3, pcc_k: 2, max_k: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelateConfig {
    pub alpha: f64,
    pub method: PValueMethod,
}

impl Default for CorrelateConfig {
    fn default() -> Self {
        CorrelateConfig { alpha: 0.05, method: PValueMethod::Auto }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    None,
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub family: Family,
    pub features: FeatureSet,
    pub folds: usize,
    /// Shuffles per feature for permutation importance.
    pub repeats: usize,
    pub select: SelectMode,
    /// Search the family's hyperparameter grid instead of using defaults.
    pub grid: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            family: Family::Forest,
            features: FeatureSet::Standard,
            folds: 10,
            repeats: 5,
            select: SelectMode::None,
            grid: false,
        }
    }
}

/// Everything a run needs; file values are overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub discover: DiscoverConfig,
    pub partition: PartitionConfig,
    pub correlate: CorrelateConfig,
    pub train: TrainConfig,
    pub synth: ScenarioConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            input: None,
            out: None,
            discover: DiscoverConfig::default(),
            partition: PartitionConfig::default(),
            correlate: CorrelateConfig::default(),
            train: TrainConfig::default(),
            synth: ScenarioConfig::default(),
        }
    }
}

/// Flag values; `None` keeps the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub level: Option<usize>,
    pub filter_activities: Option<f64>,
    pub filter_paths: Option<f64>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub features: Option<FeatureSet>,
    pub family: Option<Family>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), one_line(&e.to_string()))))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.input {
            self.input = Some(v.clone());
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = o.level {
            self.discover.level = v;
        }
        if let Some(v) = o.filter_activities {
            self.discover.filter_activities = v;
        }
        if let Some(v) = o.filter_paths {
            self.discover.filter_paths = v;
        }
        if let Some(v) = o.k {
            self.partition.k = v;
        }
        if let Some(v) = o.alpha {
            self.correlate.alpha = v;
        }
        if let Some(v) = o.folds {
            self.train.folds = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
            self.synth.seed = v;
        }
        if let Some(v) = o.features {
            self.train.features = v;
        }
        if let Some(v) = o.family {
            self.train.family = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.discover;
        if d.level > refmine::discovery::MAX_LEVEL {
            return Err(Error::Config(format!("level must be 0, 1 or 2, got {}", d.level)));
        }
        for (name, f) in [("filter-activities", d.filter_activities), ("filter-paths", d.filter_paths)] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {f}")));
            }
        }
        let p = &self.partition;
        if p.k == 0 || p.pcc_k == 0 {
            return Err(Error::Config("level counts must be positive".to_string()));
        }
        if p.max_k < 4 {
            return Err(Error::Config("max_k must be at least 4 so the elbow curve has 3 points".to_string()));
        }
        let a = self.correlate.alpha;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {a}")));
        }
        if self.train.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.train.folds)));
        }
        if self.train.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".to_string()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot render config: {e}")))
    }
}

/// Labels for `k` ordered levels.
pub fn level_labels(k: usize) -> Vec<String> {
    match k {
        1 => vec!["ALL".into()],
        2 => vec!["LOW".into(), "HIGH".into()],
        3 => vec!["LOW".into(), "MEDIUM".into(), "HIGH".into()],
        _ => (1..=k).map(|i| format!("L{i}")).collect(),
    }
}

pub fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
