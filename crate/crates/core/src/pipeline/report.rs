use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{EvaluateOn, PipelineConfig, SCHEMA_VERSION};
use super::{write_json, write_text, Clustered, Discovered, Prepared, Selection, Trained};
use crate::conformance::MetricsReport;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub clusters_requested: usize,
    pub clusters: usize,
    pub split_ratio: f64,
    pub discovery_threshold: f64,
    pub cv_folds: usize,
    pub lambda_grid: Vec<f64>,
    pub evaluate_on: EvaluateOn,
    pub model_selection: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub traces: usize,
    pub activities: usize,
    pub desirable: usize,
    pub undesirable: usize,
    pub train: usize,
    pub test: usize,
    pub balanced_train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub number: usize,
    pub rule: String,
    pub coefficient: f64,
    pub support_pos: f64,
    pub support_neg: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub cluster: usize,
    pub representative: usize,
    pub rule: String,
    pub coefficient: f64,
    pub support_pos: f64,
    pub support_neg: f64,
    pub members: Vec<usize>,
    pub traces: usize,
    pub positive: usize,
    pub negative: usize,
    /// `None` when the representative covers no trace ("no model").
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub group: String,
    pub model: Option<String>,
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub seed: u64,
    pub settings: Settings,
    pub log: LogSummary,
    pub constraints: usize,
    pub features: usize,
    pub selection: Selection,
    pub ml_accuracy: f64,
    pub extracted_rules: usize,
    pub rules: Vec<RuleEntry>,
    pub clusters: Vec<ClusterEntry>,
    pub metrics: Vec<MetricsRow>,
    pub degenerate: bool,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn build(
        cfg: &PipelineConfig,
        prep: &Prepared,
        trained: &Trained,
        clustered: &Clustered,
        discovered: &Discovered,
        metrics: Vec<MetricsRow>,
    ) -> Self {
        let labels = prep.labels.vector_for(&prep.log).unwrap_or_default();
        let desirable = labels.iter().filter(|&&l| l).count();
        let text = |n: usize| trained.rules[clustered.important[n]].display(&prep.space).to_string();
        let support = |n: usize| {
            clustered
                .report
                .support
                .iter()
                .find(|s| s.rule == n)
                .map_or((0.0, 0.0), |s| (s.positive, s.negative))
        };
        let cluster_of = |n: usize| {
            clustered
                .report
                .clusters
                .iter()
                .position(|c| c.contains(&n))
                .map_or(0, |k| k + 1)
        };
        let rules = (0..clustered.important.len())
            .map(|n| {
                let (sp, sn) = support(n);
                RuleEntry {
                    number: n,
                    rule: text(n),
                    coefficient: clustered.coefficients[n],
                    support_pos: sp,
                    support_neg: sn,
                    cluster: cluster_of(n),
                }
            })
            .collect();
        let clusters: Vec<ClusterEntry> = clustered
            .report
            .clusters
            .iter()
            .zip(&clustered.report.representatives)
            .enumerate()
            .map(|(k, (members, &rep))| {
                let (sp, sn) = support(rep);
                let d = &discovered.models[k];
                ClusterEntry {
                    cluster: k + 1,
                    representative: rep,
                    rule: text(rep),
                    coefficient: clustered.coefficients[rep],
                    support_pos: sp,
                    support_neg: sn,
                    members: members.clone(),
                    traces: d.traces,
                    positive: d.positive,
                    negative: d.negative,
                    model: d.model.clone(),
                }
            })
            .collect();
        let mut warnings = clustered.warnings.clone();
        for c in &clusters {
            if c.model.is_none() {
                warnings.push(format!("cluster {} covers no trace; no model", c.cluster));
            }
        }
        let mut artifacts = vec![
            "report.json".to_string(),
            "report.md".to_string(),
            "figures/heatmap.svg".to_string(),
            "figures/dendrogram.svg".to_string(),
            "figures/metrics.svg".to_string(),
            "encoded/split.json".to_string(),
            "encoded/constraints.txt".to_string(),
            "encoded/features.csv".to_string(),
            "encoded/ensemble.json".to_string(),
            "encoded/rules.json".to_string(),
            "encoded/model.json".to_string(),
            "encoded/selection.json".to_string(),
            "encoded/clusters.json".to_string(),
            "encoded/dendrogram.json".to_string(),
            "encoded/discovery.json".to_string(),
        ];
        for m in &discovered.models {
            if let Some(p) = &m.model {
                artifacts.push(p.clone());
                artifacts.push(p.replace(".pnml", ".dot"));
            }
        }
        RunReport {
            schema_version: SCHEMA_VERSION,
            seed: cfg.seed,
            settings: Settings {
                clusters_requested: cfg.clusters,
                clusters: clustered.report.clusters.len(),
                split_ratio: cfg.split_ratio,
                discovery_threshold: cfg.discovery_threshold,
                cv_folds: cfg.cv_folds,
                lambda_grid: cfg.lambda_grid.clone(),
                evaluate_on: cfg.evaluate_on,
                model_selection: "joint cross-validation over ensemble setting x lambda".into(),
            },
            log: LogSummary {
                traces: prep.log.len(),
                activities: prep.log.alphabet().len(),
                desirable,
                undesirable: prep.log.len() - desirable,
                train: prep.train.len(),
                test: prep.test.len(),
                balanced_train: prep.balanced.len(),
            },
            constraints: prep.space.constraints().len(),
            features: prep.space.len(),
            selection: trained.selection.clone(),
            ml_accuracy: trained.ml_accuracy,
            extracted_rules: trained.rules.len(),
            rules,
            clusters,
            metrics,
            degenerate: clustered.is_degenerate(),
            warnings,
            artifacts,
        }
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        write_json(&out.join("report.json"), self)?;
        write_text(&out.join("report.md"), &self.to_markdown())
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Run report\n");
        let _ = writeln!(
            s,
            "Seed {}; {} traces over {} activities ({} desirable, {} undesirable).",
            self.seed, self.log.traces, self.log.activities, self.log.desirable, self.log.undesirable
        );
        let _ = writeln!(
            s,
            "Training fold {} traces ({} after undersampling), test fold {} traces.\n",
            self.log.train, self.log.balanced_train, self.log.test
        );
        let b = &self.selection.best;
        let lr = b.learning_rate.map(|r| format!(", learning rate {r}")).unwrap_or_default();
        let _ = writeln!(s, "## Model selection\n");
        let _ = writeln!(
            s,
            "{} constraints ({} features). Best setting: {:?} with {} trees, depth {}{lr}, lambda {} (CV accuracy {:.3}).",
            self.constraints, self.features, b.kind, b.n_trees, b.max_depth, b.lambda, b.cv_accuracy
        );
        let _ = writeln!(
            s,
            "{} rules extracted, {} kept by the regression. ML-acc on the test fold: {:.3}.\n",
            self.extracted_rules,
            self.rules.len(),
            self.ml_accuracy
        );
        let _ = writeln!(s, "## Clusters\n");
        if self.clusters.is_empty() {
            let _ = writeln!(s, "No important rules, so no clusters.\n");
        } else {
            let _ = writeln!(s, "| Cluster | Rule | Coef | sup(L+) | sup(L-) | Traces | Model |");
            let _ = writeln!(s, "|---|---|---|---|---|---|---|");
            for c in &self.clusters {
                let _ = writeln!(
                    s,
                    "| {} | rule {}: {} | {:.3} | {:.3} | {:.3} | {} | {} |",
                    c.cluster,
                    c.representative,
                    c.rule,
                    c.coefficient,
                    c.support_pos,
                    c.support_neg,
                    c.traces,
                    c.model.as_deref().unwrap_or("no model")
                );
            }
            s.push('\n');
        }
        let scope = match self.settings.evaluate_on {
            EvaluateOn::Test => "test fold",
            EvaluateOn::Full => "full log",
        };
        let _ = writeln!(s, "## Metrics ({scope})\n");
        let _ = writeln!(
            s,
            "| Group | t-fit(L+) | t-fit(L-) | a-fit(L+) | a-fit(L-) | prc(L+) | prc(L-) | a-acc | t-acc | a-F1 | t-F1 |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|---|");
        for r in &self.metrics {
            match &r.metrics {
                Some(m) => {
                    let _ = writeln!(
                        s,
                        "| {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |",
                        r.group, m.t_fit_pos, m.t_fit_neg, m.a_fit_pos, m.a_fit_neg, m.prc_pos, m.prc_neg, m.a_acc, m.t_acc, m.a_f1, m.t_f1
                    );
                }
                None => {
                    let _ = writeln!(s, "| {} | no model | | | | | | | | | |", r.group);
                }
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "\n## Warnings\n");
            for w in &self.warnings {
                let _ = writeln!(s, "- {w}");
            }
        }
        s
    }
}
