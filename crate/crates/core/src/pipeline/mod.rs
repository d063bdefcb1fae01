//! End-to-end orchestration: labeled log in, per-cluster process models and
//! metrics out. Every stage can run on its own from the artifacts of the
//! previous stage in the output directory.

pub mod config;
pub mod figures;
pub mod report;
pub mod synthetic;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub use config::{EnsembleGrid, EvaluateOn, InputConfig, LabelConfig, PipelineConfig};
pub use report::{ClusterEntry, MetricsRow, RuleEntry, RunReport};

use crate::conformance::{align_log, MetricsReport};
use crate::declare::{discover_constraints, Constraint};
use crate::discovery::{self, to_dot, write_pnml, PetriNet};
use crate::encoding::{FeatureSpace, FeatureVector, Rule};
use crate::ensemble::{extract_rules, train_ensemble, Ensemble, EnsembleKind, EnsembleParams};
use crate::error::{Error, Result};
use crate::event_log::{self, label_by_duration, split_train_test, undersample, EventLog, LabelFunction};
use crate::rule_clustering::{agglomerate, jaccard_matrix, select_representatives, ClusterReport, Dendrogram, DistanceMatrix};
use crate::seed;
use crate::sparse_regression::{fit, fit_path, stratified_folds, FitOptions, RegressionModel, RuleMatrix};

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parsed log and labels, in log order.
pub fn load_inputs(cfg: &PipelineConfig) -> Result<(EventLog, LabelFunction)> {
    let log = event_log::read_log(&cfg.input.log, &cfg.columns()).map_err(|e| e.at_stage("parse"))?;
    if log.is_empty() {
        return Err(Error::InvalidInput("input log has no traces".into()).at_stage("parse"));
    }
    let labels = match (&cfg.labels.file, cfg.labels.duration_threshold_hours) {
        (Some(path), _) => LabelFunction::read_csv(path),
        (None, Some(hours)) => label_by_duration(&log, (hours * 3_600_000.0).round() as i64, cfg.labels.desirable_side),
        (None, None) => Err(Error::Config("no label source".into())),
    }
    .map_err(|e| e.at_stage("label"))?;
    labels.vector_for(&log).map_err(|e| e.at_stage("label"))?;
    Ok((log, labels))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplitArtifact {
    train: Vec<String>,
    test: Vec<String>,
    undersampled: Vec<String>,
}

/// Output of the encoding stage.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub log: EventLog,
    pub labels: LabelFunction,
    pub train: EventLog,
    pub test: EventLog,
    /// Balanced subset of `train` the classifiers see.
    pub balanced: EventLog,
    pub space: FeatureSpace,
}

impl Prepared {
    pub fn balanced_labels(&self) -> Vec<bool> {
        self.labels.vector_for(&self.balanced).expect("labels checked at load")
    }

    pub fn balanced_vectors(&self) -> Vec<FeatureVector> {
        self.space.encode_log(&self.balanced)
    }
}

pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    let (log, labels) = load_inputs(cfg)?;
    let (train, test) = split_train_test(&log, &labels, cfg.split_ratio, seed::derive(cfg.seed, "split"))
        .map_err(|e| e.at_stage("split"))?;
    let balanced = undersample(&train, &labels, seed::derive(cfg.seed, "undersample")).map_err(|e| e.at_stage("undersample"))?;
    let constraints = discover_constraints(&balanced, cfg.max_activities).map_err(|e| e.at_stage("constraints"))?;
    let space = FeatureSpace::new(&constraints).map_err(|e| e.at_stage("constraints"))?;
    Ok(Prepared {
        log,
        labels,
        train,
        test,
        balanced,
        space,
    })
}

fn encoded_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_dir.join("encoded")
}

pub fn write_prepared(cfg: &PipelineConfig, prep: &Prepared) -> Result<()> {
    let dir = encoded_dir(cfg);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let ids = |l: &EventLog| l.case_ids().map(String::from).collect();
    write_json(
        &dir.join("split.json"),
        &SplitArtifact {
            train: ids(&prep.train),
            test: ids(&prep.test),
            undersampled: ids(&prep.balanced),
        },
    )?;
    let mut text = String::new();
    for c in prep.space.constraints() {
        text.push_str(&c.to_string());
        text.push('\n');
    }
    write_text(&dir.join("constraints.txt"), &text)?;
    let path = dir.join("features.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    prep.space
        .write_encoded_csv(&prep.balanced, &prep.balanced_vectors(), std::io::BufWriter::new(file))
}

fn select_ids(log: &EventLog, ids: &[String]) -> Result<EventLog> {
    let wanted: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    let sub = log.filter(|t| wanted.contains(t.case_id.as_str()));
    if sub.len() != wanted.len() {
        return Err(Error::InvalidInput("split artifact names cases missing from the log".into()));
    }
    Ok(sub)
}

pub fn load_prepared(cfg: &PipelineConfig) -> Result<Prepared> {
    let (log, labels) = load_inputs(cfg)?;
    let dir = encoded_dir(cfg);
    let split: SplitArtifact = read_json(&dir.join("split.json"))?;
    let path = dir.join("constraints.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let constraints = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<Constraint>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        train: select_ids(&log, &split.train)?,
        test: select_ids(&log, &split.test)?,
        balanced: select_ids(&log, &split.undersampled)?,
        space: FeatureSpace::new(&constraints)?,
        log,
        labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub kind: EnsembleKind,
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: Option<f64>,
    pub lambda: f64,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best: GridScore,
    pub grid: Vec<GridScore>,
}

/// Output of the training stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub selection: Selection,
    pub ensemble: Ensemble,
    pub rules: Vec<Rule>,
    pub model: RegressionModel,
    pub ml_accuracy: f64,
}

fn score_of(p: &EnsembleParams, lambda: f64, cv_accuracy: f64) -> GridScore {
    GridScore {
        kind: p.kind,
        n_trees: p.n_trees,
        max_depth: p.max_depth,
        learning_rate: (p.kind == EnsembleKind::GradientBoosting).then_some(p.learning_rate),
        lambda,
        cv_accuracy,
    }
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Joint cross-validation over (ensemble setting × lambda), then a refit of
/// the winner on the whole balanced training set.
pub fn train(cfg: &PipelineConfig, prep: &Prepared) -> Result<Trained> {
    let stage = |e: Error| e.at_stage("train");
    let x = prep.balanced_vectors();
    let y = prep.balanced_labels();
    let minority = y.iter().filter(|&&l| l).count().min(y.iter().filter(|&&l| !l).count());
    if minority < cfg.cv_folds {
        return Err(stage(Error::Stratify(format!(
            "{minority} training trace(s) per class cannot fill {} folds",
            cfg.cv_folds
        ))));
    }
    let mut lambdas = cfg.lambda_grid.clone();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    lambdas.dedup();
    let settings = cfg.ensembles.settings(prep.space.len());
    let folds = stratified_folds(&y, cfg.cv_folds, seed::derive(cfg.seed, "cv"));
    let cv_seed = seed::derive(cfg.seed, "cv-ensemble");
    let opts = FitOptions::default();

    let mut grid = Vec::new();
    for (si, setting) in settings.iter().enumerate() {
        let mut acc = vec![0.0; lambdas.len()];
        for f in 0..cfg.cv_folds {
            let tr: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
            let va: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
            let (xt, yt) = (pick(&x, &tr), pick(&y, &tr));
            let (xv, yv) = (pick(&x, &va), pick(&y, &va));
            let params = EnsembleParams {
                seed: seed::derive_indexed(cv_seed, (si * cfg.cv_folds + f) as u64),
                ..setting.clone()
            };
            let ens = train_ensemble(&xt, &yt, &params).map_err(stage)?;
            let rules = extract_rules(&ens, &xt);
            let mt = RuleMatrix::from_rules(&xt, &rules).map_err(stage)?;
            let mv = RuleMatrix::from_rules(&xv, &rules).map_err(stage)?;
            let path = fit_path(&mt, &yt, &lambdas, opts).map_err(stage)?;
            for (a, m) in acc.iter_mut().zip(&path) {
                *a += m.accuracy(&mv, &yv) / cfg.cv_folds as f64;
            }
        }
        for (li, &lambda) in lambdas.iter().enumerate() {
            grid.push((si, score_of(setting, lambda, acc[li])));
        }
    }
    // best accuracy; ties → larger lambda, then earlier setting
    let mut bi = 0;
    for i in 1..grid.len() {
        let (b, c) = (&grid[bi].1, &grid[i].1);
        let tie = (c.cv_accuracy - b.cv_accuracy).abs() <= 1e-12;
        if (!tie && c.cv_accuracy > b.cv_accuracy) || (tie && c.lambda > b.lambda) {
            bi = i;
        }
    }
    let (best_si, best) = grid[bi].clone();

    let params = EnsembleParams {
        seed: seed::derive(cfg.seed, "ensemble"),
        ..settings[best_si].clone()
    };
    let ensemble = train_ensemble(&x, &y, &params).map_err(stage)?;
    let rules = extract_rules(&ensemble, &x);
    let m = RuleMatrix::from_rules(&x, &rules).map_err(stage)?;
    let model = fit(&m, &y, best.lambda, opts).map_err(stage)?;

    let test_vectors = prep.space.encode_log(&prep.test);
    let test_labels = prep.labels.vector_for(&prep.test).map_err(stage)?;
    let mt = RuleMatrix::from_rules(&test_vectors, &rules).map_err(stage)?;
    let ml_accuracy = model.accuracy(&mt, &test_labels);
    Ok(Trained {
        selection: Selection {
            best,
            grid: grid.into_iter().map(|(_, g)| g).collect(),
        },
        ensemble,
        rules,
        model,
        ml_accuracy,
    })
}

pub fn write_trained(cfg: &PipelineConfig, trained: &Trained) -> Result<()> {
    let dir = encoded_dir(cfg);
    write_json(&dir.join("ensemble.json"), &trained.ensemble)?;
    write_json(&dir.join("rules.json"), &trained.rules)?;
    write_json(&dir.join("model.json"), &trained.model)?;
    write_json(
        &dir.join("selection.json"),
        &(&trained.selection, trained.ml_accuracy),
    )
}

pub fn load_trained(cfg: &PipelineConfig) -> Result<Trained> {
    let dir = encoded_dir(cfg);
    let (selection, ml_accuracy): (Selection, f64) = read_json(&dir.join("selection.json"))?;
    Ok(Trained {
        selection,
        ensemble: Ensemble::load(&dir.join("ensemble.json"))?,
        rules: read_json(&dir.join("rules.json"))?,
        model: read_json(&dir.join("model.json"))?,
        ml_accuracy,
    })
}

/// Output of the clustering stage. Rules are referred to by their number:
/// position among the important rules sorted by descending |coefficient|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustered {
    /// `important[n]` is the index into `Trained::rules` of rule number n.
    pub important: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub distances: Option<DistanceMatrix>,
    pub dendrogram: Option<Dendrogram>,
    pub report: ClusterReport,
    pub warnings: Vec<String>,
}

impl Clustered {
    pub fn is_degenerate(&self) -> bool {
        self.important.is_empty()
    }
}

pub fn cluster(cfg: &PipelineConfig, prep: &Prepared, trained: &Trained) -> Result<Clustered> {
    let stage = |e: Error| e.at_stage("cluster");
    let w = &trained.model.weights;
    let mut important: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    important.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    let coefficients: Vec<f64> = important.iter().map(|&j| w[j]).collect();
    let mut warnings = Vec::new();
    if important.is_empty() {
        warnings.push("the regression kept no rules; nothing to cluster".to_string());
        return Ok(Clustered {
            important,
            coefficients,
            distances: None,
            dendrogram: None,
            report: ClusterReport {
                clusters: vec![],
                representatives: vec![],
                support: vec![],
            },
            warnings,
        });
    }
    let x = prep.balanced_vectors();
    let train_matrix = RuleMatrix::from_rules(&x, &trained.rules).map_err(stage)?.select_cols(&important);
    let distances = jaccard_matrix(&train_matrix);
    let dendrogram = agglomerate(&distances).map_err(stage)?;
    let mut k = cfg.clusters;
    if k > important.len() {
        warnings.push(format!(
            "requested {k} clusters but only {} important rule(s); using {}",
            important.len(),
            important.len()
        ));
        k = important.len();
    }
    let clusters = dendrogram.cut(k).map_err(stage)?;
    let sub_model = RegressionModel {
        weights: coefficients.clone(),
        ..trained.model.clone()
    };
    let full_vectors = prep.space.encode_log(&prep.log);
    let full_labels = prep.labels.vector_for(&prep.log).map_err(stage)?;
    let full_matrix = RuleMatrix::from_rules(&full_vectors, &trained.rules)
        .map_err(stage)?
        .select_cols(&important);
    let report = select_representatives(&clusters, &sub_model, &full_matrix, &full_labels).map_err(stage)?;
    Ok(Clustered {
        important,
        coefficients,
        distances: Some(distances),
        dendrogram: Some(dendrogram),
        report,
        warnings,
    })
}

pub fn write_clustered(cfg: &PipelineConfig, clustered: &Clustered) -> Result<()> {
    let dir = encoded_dir(cfg);
    write_json(&dir.join("clusters.json"), clustered)?;
    write_json(&dir.join("dendrogram.json"), &clustered.dendrogram)
}

pub fn load_clustered(cfg: &PipelineConfig) -> Result<Clustered> {
    read_json(&encoded_dir(cfg).join("clusters.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveredModel {
    /// `cluster 1`, ..., `L+`, `L-`.
    pub group: String,
    pub traces: usize,
    pub positive: usize,
    pub negative: usize,
    /// Path of the PNML file relative to the output directory.
    pub model: Option<String>,
}

/// Output of the discovery stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discovered {
    pub models: Vec<DiscoveredModel>,
}

pub const POSITIVE_GROUP: &str = "L+";
pub const NEGATIVE_GROUP: &str = "L-";

struct DiscoveryJob {
    group: String,
    file: String,
    log: EventLog,
}

pub fn discover_models(cfg: &PipelineConfig, prep: &Prepared, trained: &Trained, clustered: &Clustered) -> Result<Discovered> {
    let stage = |e: Error| e.at_stage("discover");
    let mut jobs = Vec::new();
    for (k, &rep) in clustered.report.representatives.iter().enumerate() {
        let rule = &trained.rules[clustered.important[rep]];
        let log = prep.log.filter(|t| {
            let v = prep.space.encode(t);
            crate::encoding::rule_holds(&v, rule).unwrap_or(false)
        });
        jobs.push(DiscoveryJob {
            group: format!("cluster {}", k + 1),
            file: format!("cluster_{}", k + 1),
            log,
        });
    }
    let (pos, neg) = prep.labels.partition(&prep.log).map_err(stage)?;
    jobs.push(DiscoveryJob {
        group: POSITIVE_GROUP.into(),
        file: "baseline_pos".into(),
        log: pos,
    });
    jobs.push(DiscoveryJob {
        group: NEGATIVE_GROUP.into(),
        file: "baseline_neg".into(),
        log: neg,
    });
    let nets: Vec<Option<PetriNet>> = jobs
        .par_iter()
        .map(|j| {
            if j.log.is_empty() {
                return Ok(None);
            }
            let tree = discovery::discover(&j.log, cfg.discovery_threshold)?;
            discovery::to_petri_net(&tree).map(Some)
        })
        .collect::<Result<_>>()
        .map_err(stage)?;
    let models_dir = cfg.output_dir.join("models");
    fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
    let mut models = Vec::new();
    for (job, net) in jobs.iter().zip(nets) {
        let labels = prep.labels.vector_for(&job.log).map_err(stage)?;
        let positive = labels.iter().filter(|&&l| l).count();
        let model = match net {
            Some(net) => {
                write_pnml(&net, &job.group, &models_dir.join(format!("{}.pnml", job.file)))?;
                write_text(&models_dir.join(format!("{}.dot", job.file)), &to_dot(&net))?;
                Some(format!("models/{}.pnml", job.file))
            }
            None => None,
        };
        models.push(DiscoveredModel {
            group: job.group.clone(),
            traces: job.log.len(),
            positive,
            negative: job.log.len() - positive,
            model,
        });
    }
    Ok(Discovered { models })
}

pub fn write_discovered(cfg: &PipelineConfig, d: &Discovered) -> Result<()> {
    write_json(&encoded_dir(cfg).join("discovery.json"), d)
}

pub fn load_discovered(cfg: &PipelineConfig) -> Result<Discovered> {
    read_json(&encoded_dir(cfg).join("discovery.json"))
}

/// Conformance and discriminative metrics of every discovered model.
pub fn evaluate(cfg: &PipelineConfig, prep: &Prepared, discovered: &Discovered) -> Result<Vec<MetricsRow>> {
    let stage = |e: Error| e.at_stage("evaluate");
    let target = match cfg.evaluate_on {
        EvaluateOn::Test => &prep.test,
        EvaluateOn::Full => &prep.log,
    };
    let (pos, neg) = prep.labels.partition(target).map_err(stage)?;
    discovered
        .models
        .iter()
        .map(|m| {
            let metrics = match &m.model {
                None => None,
                Some(rel) => {
                    let net = discovery::read_pnml(&cfg.output_dir.join(rel)).map_err(stage)?;
                    let p = align_log(&pos, &net).map_err(stage)?;
                    let n = align_log(&neg, &net).map_err(stage)?;
                    Some(MetricsReport::from_fitness(
                        p.trace_fitness(),
                        n.trace_fitness(),
                        p.alignment_fitness(),
                        n.alignment_fitness(),
                        p.precision(&net).map_err(stage)?,
                        n.precision(&net).map_err(stage)?,
                    ))
                }
            };
            Ok(MetricsRow {
                group: m.group.clone(),
                model: m.model.clone(),
                metrics,
            })
        })
        .collect()
}

/// Runs every stage and writes all artifacts below `cfg.output_dir`.
pub fn run(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let prep = prepare(cfg)?;
    write_prepared(cfg, &prep)?;
    let trained = train(cfg, &prep)?;
    write_trained(cfg, &trained)?;
    let clustered = cluster(cfg, &prep, &trained)?;
    write_clustered(cfg, &clustered)?;
    figures::write_cluster_figures(cfg, &clustered)?;
    let discovered = discover_models(cfg, &prep, &trained, &clustered)?;
    write_discovered(cfg, &discovered)?;
    finish(cfg, &prep, &trained, &clustered, &discovered)
}

/// Evaluation plus report and metric-figure emission.
pub fn finish(
    cfg: &PipelineConfig,
    prep: &Prepared,
    trained: &Trained,
    clustered: &Clustered,
    discovered: &Discovered,
) -> Result<RunReport> {
    let rows = evaluate(cfg, prep, discovered)?;
    let report = RunReport::build(cfg, prep, trained, clustered, discovered, rows);
    report.write(&cfg.output_dir)?;
    figures::write_metrics_figure(&cfg.output_dir, &report)?;
    Ok(report)
}
