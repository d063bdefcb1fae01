use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use procvar::event_log::DesirableSide;
use procvar::pipeline::{self, figures, synthetic, EvaluateOn, LabelConfig, PipelineConfig, RunReport};
use procvar::{Error, Result};

const EXIT_INPUT: u8 = 1;
const EXIT_STAGE: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(name = "procvar", version, about = "Discriminative rule mining and per-cluster process discovery for labeled event logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage end to end.
    Run(ConfigArgs),
    /// Parse, label, split, undersample, discover constraints and encode.
    Encode(ConfigArgs),
    /// Cross-validate the ensemble and lambda grids, extract rules, fit the sparse model.
    Train(ConfigArgs),
    /// Cluster the important rules and pick representatives.
    Cluster(ConfigArgs),
    /// Filter the log per representative and discover one model per cluster.
    Discover(ConfigArgs),
    /// Compute the metrics and write the report.
    Evaluate(ConfigArgs),
    /// Print the effective config as TOML.
    Config(ConfigArgs),
    /// Write one of the bundled example logs.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file. Flags below override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    /// CSV with `case_id,label` rows (1 = desirable).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    duration_threshold_hours: Option<f64>,
    #[arg(long, value_enum)]
    desirable_side: Option<DesirableSide>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long)]
    discovery_threshold: Option<f64>,
    #[arg(long)]
    cv_folds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    evaluate_on: Option<EvaluateOn>,
    #[arg(long)]
    max_activities: Option<usize>,
    #[arg(long)]
    case_column: Option<String>,
    #[arg(long)]
    activity_column: Option<String>,
    /// Pass an empty string to keep file order instead of sorting by time.
    #[arg(long)]
    timestamp_column: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    /// The 600-trace three-activity log plus its label file.
    Orderings,
    /// A timestamped 13-activity log, labeled by case duration.
    Synthetic,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    example: Example,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    traces: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => {
                let log = self.log.clone().ok_or_else(|| Error::Config("--log or --config is required".into()))?;
                let seed = self.seed.ok_or_else(|| Error::Config("--seed is required".into()))?;
                let labels = LabelConfig {
                    file: None,
                    duration_threshold_hours: None,
                    desirable_side: DesirableSide::Below,
                };
                PipelineConfig::new(log, labels, seed)
            }
        };
        if let Some(v) = &self.log {
            cfg.input.log = v.clone();
        }
        if self.labels.is_some() || self.duration_threshold_hours.is_some() {
            cfg.labels.file = self.labels.clone();
            cfg.labels.duration_threshold_hours = self.duration_threshold_hours;
        }
        if let Some(v) = self.desirable_side {
            cfg.labels.desirable_side = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.clusters {
            cfg.clusters = v;
        }
        if let Some(v) = self.split_ratio {
            cfg.split_ratio = v;
        }
        if let Some(v) = self.discovery_threshold {
            cfg.discovery_threshold = v;
        }
        if let Some(v) = self.cv_folds {
            cfg.cv_folds = v;
        }
        if let Some(v) = &self.lambda_grid {
            cfg.lambda_grid = v.clone();
        }
        if let Some(v) = self.evaluate_on {
            cfg.evaluate_on = v;
        }
        if let Some(v) = self.max_activities {
            cfg.max_activities = v;
        }
        if let Some(v) = &self.case_column {
            cfg.input.case_column = v.clone();
        }
        if let Some(v) = &self.activity_column {
            cfg.input.activity_column = v.clone();
        }
        if let Some(v) = &self.timestamp_column {
            cfg.input.timestamp_column = Some(v.clone()).filter(|s| !s.is_empty());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(report: &RunReport) {
    eprintln!(
        "{} rules kept, {} clusters, ML-acc {:.3}",
        report.rules.len(),
        report.clusters.len(),
        report.ml_accuracy
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn report_exit(report: &RunReport) -> u8 {
    summarize(report);
    if report.degenerate { EXIT_DEGENERATE } else { 0 }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let report = pipeline::run(&cfg)?;
            eprintln!("report written to {}", cfg.output_dir.join("report.md").display());
            Ok(report_exit(&report))
        }
        Command::Encode(args) => {
            let cfg = args.resolve()?;
            std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
            let prep = pipeline::prepare(&cfg)?;
            pipeline::write_prepared(&cfg, &prep)?;
            eprintln!("{} constraints, {} features", prep.space.constraints().len(), prep.space.len());
            Ok(0)
        }
        Command::Train(args) => {
            let cfg = args.resolve()?;
            let prep = pipeline::load_prepared(&cfg)?;
            let trained = pipeline::train(&cfg, &prep)?;
            pipeline::write_trained(&cfg, &trained)?;
            eprintln!(
                "{} rules extracted, {} nonzero, ML-acc {:.3}",
                trained.rules.len(),
                trained.model.nonzero(),
                trained.ml_accuracy
            );
            Ok(0)
        }
        Command::Cluster(args) => {
            let cfg = args.resolve()?;
            let prep = pipeline::load_prepared(&cfg)?;
            let trained = pipeline::load_trained(&cfg)?;
            let clustered = pipeline::cluster(&cfg, &prep, &trained)?;
            pipeline::write_clustered(&cfg, &clustered)?;
            figures::write_cluster_figures(&cfg, &clustered)?;
            for w in &clustered.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if clustered.is_degenerate() { EXIT_DEGENERATE } else { 0 })
        }
        Command::Discover(args) => {
            let cfg = args.resolve()?;
            let prep = pipeline::load_prepared(&cfg)?;
            let trained = pipeline::load_trained(&cfg)?;
            let clustered = pipeline::load_clustered(&cfg)?;
            let discovered = pipeline::discover_models(&cfg, &prep, &trained, &clustered)?;
            pipeline::write_discovered(&cfg, &discovered)?;
            Ok(0)
        }
        Command::Evaluate(args) => {
            let cfg = args.resolve()?;
            let prep = pipeline::load_prepared(&cfg)?;
            let trained = pipeline::load_trained(&cfg)?;
            let clustered = pipeline::load_clustered(&cfg)?;
            let discovered = pipeline::load_discovered(&cfg)?;
            let report = pipeline::finish(&cfg, &prep, &trained, &clustered, &discovered)?;
            Ok(report_exit(&report))
        }
        Command::Config(args) => {
            print!("{}", args.resolve()?.to_toml());
            Ok(0)
        }
        Command::Generate(args) => {
            match args.example {
                Example::Orderings => synthetic::write_orderings(&args.out)?,
                Example::Synthetic => synthetic::write_synthetic(&args.out, args.traces, args.seed)?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_STAGE })
        }
    }
}
