use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::declare::DEFAULT_ACTIVITY_CAP;
use crate::ensemble::{EnsembleKind, EnsembleParams};
use crate::error::{Error, Result};
use crate::event_log::{ColumnMap, DesirableSide};
use crate::sparse_regression::DEFAULT_LAMBDA_GRID;

pub const SCHEMA_VERSION: u32 = 1;

/// Which traces the conformance metrics are computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvaluateOn {
    /// The held-out test fold.
    Test,
    /// Every trace of the input log.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub log: PathBuf,
    #[serde(default = "default_case")]
    pub case_column: String,
    #[serde(default = "default_activity")]
    pub activity_column: String,
    #[serde(default = "default_timestamp")]
    pub timestamp_column: Option<String>,
}

fn default_case() -> String {
    "case_id".into()
}
fn default_activity() -> String {
    "activity".into()
}
fn default_timestamp() -> Option<String> {
    Some("timestamp".into())
}

/// Either a label file or a duration threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelConfig {
    pub file: Option<PathBuf>,
    pub duration_threshold_hours: Option<f64>,
    #[serde(default = "default_side")]
    pub desirable_side: DesirableSide,
}

fn default_side() -> DesirableSide {
    DesirableSide::Below
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleGrid {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<EnsembleKind>,
    #[serde(default = "default_n_trees")]
    pub n_trees: Vec<usize>,
    #[serde(default = "default_depths")]
    pub max_depth: Vec<usize>,
    #[serde(default = "default_rates")]
    pub learning_rate: Vec<f64>,
}

fn default_kinds() -> Vec<EnsembleKind> {
    vec![EnsembleKind::RandomForest, EnsembleKind::GradientBoosting]
}
fn default_n_trees() -> Vec<usize> {
    vec![50, 100]
}
fn default_depths() -> Vec<usize> {
    vec![3, 5]
}
fn default_rates() -> Vec<f64> {
    vec![0.1, 0.3]
}

impl Default for EnsembleGrid {
    fn default() -> Self {
        EnsembleGrid {
            kinds: default_kinds(),
            n_trees: default_n_trees(),
            max_depth: default_depths(),
            learning_rate: default_rates(),
        }
    }
}

impl EnsembleGrid {
    /// Every setting in grid order: kind, then trees, depth, learning rate.
    /// Seeds are filled in by the caller.
    pub fn settings(&self, n_features: usize) -> Vec<EnsembleParams> {
        let mut out = Vec::new();
        for &kind in &self.kinds {
            for &n in &self.n_trees {
                for &d in &self.max_depth {
                    match kind {
                        EnsembleKind::RandomForest => out.push(EnsembleParams::random_forest(n, d, n_features, 0)),
                        EnsembleKind::GradientBoosting => {
                            for &lr in &self.learning_rate {
                                out.push(EnsembleParams::gradient_boosting(n, d, lr, 0));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_clusters")]
    pub clusters: usize,
    #[serde(default = "default_split")]
    pub split_ratio: f64,
    #[serde(default = "default_threshold")]
    pub discovery_threshold: f64,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_lambdas")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_evaluate_on")]
    pub evaluate_on: EvaluateOn,
    #[serde(default = "default_cap")]
    pub max_activities: usize,
    pub input: InputConfig,
    pub labels: LabelConfig,
    #[serde(default)]
    pub ensembles: EnsembleGrid,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_clusters() -> usize {
    3
}
fn default_split() -> f64 {
    0.7
}
fn default_threshold() -> f64 {
    crate::discovery::DEFAULT_THRESHOLD
}
fn default_folds() -> usize {
    5
}
fn default_lambdas() -> Vec<f64> {
    DEFAULT_LAMBDA_GRID.to_vec()
}
fn default_evaluate_on() -> EvaluateOn {
    EvaluateOn::Test
}
fn default_cap() -> usize {
    DEFAULT_ACTIVITY_CAP
}

impl PipelineConfig {
    /// Minimal config with every default filled in.
    pub fn new(log: impl Into<PathBuf>, labels: LabelConfig, seed: u64) -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            seed,
            output_dir: default_output(),
            clusters: default_clusters(),
            split_ratio: default_split(),
            discovery_threshold: default_threshold(),
            cv_folds: default_folds(),
            lambda_grid: default_lambdas(),
            evaluate_on: default_evaluate_on(),
            max_activities: default_cap(),
            input: InputConfig {
                log: log.into(),
                case_column: default_case(),
                activity_column: default_activity(),
                timestamp_column: default_timestamp(),
            },
            labels,
            ensembles: EnsembleGrid::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input.log);
        if let Some(f) = self.labels.file.as_mut() {
            fix(f);
        }
        fix(&mut self.output_dir);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn columns(&self) -> ColumnMap {
        ColumnMap {
            case: self.input.case_column.clone(),
            activity: self.input.activity_column.clone(),
            timestamp: self.input.timestamp_column.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.clusters == 0 {
            return bad("clusters must be at least 1".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio must be in (0,1), got {}", self.split_ratio));
        }
        if !(0.0..=1.0).contains(&self.discovery_threshold) {
            return bad(format!("discovery_threshold must be in [0,1], got {}", self.discovery_threshold));
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be at least 2".into());
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return bad("lambda_grid must be a non-empty list of positive numbers".into());
        }
        match (&self.labels.file, self.labels.duration_threshold_hours) {
            (Some(_), Some(_)) => return bad("set either labels.file or labels.duration_threshold_hours, not both".into()),
            (None, None) => return bad("labels need a file or a duration_threshold_hours".into()),
            (None, Some(h)) if !(h > 0.0) => return bad("duration_threshold_hours must be positive".into()),
            _ => {}
        }
        let g = &self.ensembles;
        if g.kinds.is_empty() || g.n_trees.is_empty() || g.max_depth.is_empty() {
            return bad("ensemble grid lists must be non-empty".into());
        }
        if g.n_trees.contains(&0) || g.max_depth.contains(&0) {
            return bad("n_trees and max_depth must be at least 1".into());
        }
        if g.kinds.contains(&EnsembleKind::GradientBoosting)
            && (g.learning_rate.is_empty() || g.learning_rate.iter().any(|r| !(*r > 0.0)))
        {
            return bad("learning_rate must be a non-empty list of positive numbers".into());
        }
        if self.max_activities == 0 {
            return bad("max_activities must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
seed = 7
[input]
log = "log.csv"
[labels]
file = "labels.csv"
"#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.split_ratio, 0.7);
        assert_eq!(c.discovery_threshold, 0.2);
        assert_eq!(c.cv_folds, 5);
        assert_eq!(c.lambda_grid, vec![0.001, 0.01, 0.1, 1.0]);
        assert_eq!(c.ensembles.settings(100).len(), 4 + 8);
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml(&MINIMAL.replace("seed = 7", "seed = 7\nclusters = 0")).is_err());
        assert!(PipelineConfig::from_toml(&MINIMAL.replace("schema_version = 1", "schema_version = 2")).is_err());
        assert!(PipelineConfig::from_toml(&MINIMAL.replace("seed = 7\n", "")).is_err());
        assert!(PipelineConfig::from_toml(&MINIMAL.replace("file = \"labels.csv\"", "")).is_err());
        assert!(PipelineConfig::from_toml(&format!("{MINIMAL}\nbogus = 1")).is_err());
    }
}
