use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blamebench::attribution::{read_attributions_csv, write_attributions_csv};
use blamebench::dataset::{load_dataset, save_dataset};
use blamebench::explainers::{Explainer, ExplainerConfig, ExplainerKind};
use blamebench::groundtruth::{read_ground_truth_csv, write_ground_truth_csv, BoundarySearch, GtProvenance};
use blamebench::harness::config::{DatasetSource, RobustnessMeasure, RobustnessSpec};
use blamebench::harness::report::{write_rows_csv, ReportRow};
use blamebench::harness::runner::explain_rows;
use blamebench::harness::summary::{write_ranking_csv, write_summary_csv};
use blamebench::harness::{
    compare_explainers, run_benchmark, run_figure4_experiment, summarize, BenchmarkConfig, EvaluationSpec,
    GroundTruthMethod, GroupKey, ModelSpec, CONFIG_VERSION,
};
use blamebench::metrics::{evaluate_against_gt, Metric};
use blamebench::models::DEFAULT_VAR_FLOOR;
use blamebench::randomization::{plan_stages, sanity_check, RandomizationMode, SanityThresholds, Verdict};
use blamebench::robustness::NullificationStrategy;
use blamebench::synthdata::{ClusterSpec, GeneratorSpec, PolynomialSpec};
use blamebench::{groundtruth, Dataset, DatasetSchema, Error, FittedModel, Result, RunSeed};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

/// Exit code for a failed sanity check under `--strict`.
const EXIT_SANITY_FAIL: u8 = 5;

#[derive(Parser)]
#[command(name = "blamebench", version, about = "Evaluate local feature-attribution explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with per-instance ground truth.
    Generate(GenerateArgs),
    /// Fit a model on a dataset CSV and save it as JSON.
    Train(TrainArgs),
    /// Explain dataset rows with one explainer.
    Explain(ExplainArgs),
    /// Compute reference importance scores.
    Groundtruth(GroundTruthArgs),
    /// Compare attributions with ground truth.
    Score(ScoreArgs),
    /// Deletion, preservation and continuity measures.
    Robustness(RobustnessArgs),
    /// Model-randomization sanity check.
    Sanity(SanityArgs),
    /// Run a benchmark config end to end.
    Run(RunArgs),
    /// Baseline-vector comparison on Y = 2 x0 - x1.
    Figure4(Figure4Args),
    /// Aggregate a report, or rank explainers against a ground truth.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorName {
    Xor,
    OrangeSkin,
    NonlinearAdditive,
    Switch,
    SenecaRc,
    GaussianClusters,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    generator: GeneratorName,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label noise for seneca_rc.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Extra irrelevant features for seneca_rc.
    #[arg(long, default_value_t = 0)]
    n_redundant: usize,
    /// Polynomial (seneca_rc) or cluster (gaussian_clusters) spec as JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Leave the switch feature out of the switch ground-truth masks.
    #[arg(long)]
    unmark_switch: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Logistic,
    Linear,
    GaussianNb,
    Mlp,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    /// Ridge penalty; defaults to 1e-3 for logistic and 0 for linear.
    #[arg(long)]
    l2: Option<f64>,
    /// Hidden layer sizes for mlp, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_VAR_FLOOR)]
    var_floor: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExplainerArgs {
    #[arg(long)]
    explainer: Option<ExplainerKind>,
    /// Explainer config as JSON; `--explainer` overrides its kind.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ExplainerArgs {
    fn resolve(&self) -> Result<ExplainerConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_json::<ExplainerConfig>(path)?,
            None => ExplainerConfig::new(
                self.explainer
                    .ok_or_else(|| Error::Config("either --explainer or --config is required".into()))?,
            ),
        };
        if let Some(kind) = self.explainer {
            cfg.kind = kind;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    explainer: ExplainerArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explain only the first n rows.
    #[arg(long)]
    max_instances: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GroundTruthArgs {
    #[arg(long, value_parser = parse_serde::<GroundTruthMethod>)]
    method: GroundTruthMethod,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    /// Generating polynomial as JSON, needed by `seneca`.
    #[arg(long)]
    polynomial: Option<PathBuf>,
    /// Boundary search settings as JSON, used by `seneca`.
    #[arg(long)]
    boundary: Option<PathBuf>,
    /// Divide every vector by its largest magnitude.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    max_instances: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    attributions: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "spearman,cosine,euclidean_similarity")]
    metrics: Vec<Metric>,
    /// Dataset and model names written into the report rows.
    #[arg(long, default_value = "")]
    dataset_name: String,
    #[arg(long, default_value = "")]
    model_name: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the rows as JSON to this path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RobustnessArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    explainer: ExplainerArgs,
    #[arg(long, value_delimiter = ',', value_parser = parse_serde::<RobustnessMeasure>, default_value = "deletion")]
    measure: Vec<RobustnessMeasure>,
    /// Features removed or kept; defaults to a quarter of them.
    #[arg(long)]
    k: Option<usize>,
    /// `dataset_mean`, `zero` or a comma separated baseline vector; repeatable.
    #[arg(long)]
    strategy: Vec<NullificationStrategy>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 50)]
    n_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_instances: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SanityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    explainer: ExplainerArgs,
    #[arg(long, default_value = "cascading")]
    mode: RandomizationMode,
    /// Keep only the first n randomization stages.
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    metric: Metric,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_instances: Option<usize>,
    #[arg(long, default_value_t = SanityThresholds::default().similarity)]
    similarity_threshold: f64,
    #[arg(long, default_value_t = SanityThresholds::default().accuracy_margin)]
    accuracy_margin: f64,
    /// Exit with status 5 when any check fails.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Exit with status 5 when any sanity check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct Figure4Args {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "explainer,measure")]
    by: Vec<GroupKey>,
    /// Rank explainers by this metric instead of aggregating.
    #[arg(long, requires = "provenance")]
    rank_metric: Option<Metric>,
    #[arg(long, value_parser = parse_serde::<GtProvenance>)]
    provenance: Option<GtProvenance>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Buffered writer to `path`, or to stdout without one.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load_data(path: &Path) -> Result<Dataset> {
    load_dataset(path, &DatasetSchema::default())
}

fn first_rows(ds: &Dataset, max: Option<usize>) -> Vec<usize> {
    (0..max.unwrap_or(usize::MAX).min(ds.n_instances())).collect()
}

fn generate(args: GenerateArgs) -> Result<()> {
    let n = args.n;
    let spec = match args.generator {
        GeneratorName::Xor => GeneratorSpec::Xor { n },
        GeneratorName::OrangeSkin => GeneratorSpec::OrangeSkin { n },
        GeneratorName::NonlinearAdditive => GeneratorSpec::NonlinearAdditive { n },
        GeneratorName::Switch => GeneratorSpec::Switch {
            n,
            mark_switch: !args.unmark_switch,
        },
        GeneratorName::SenecaRc => GeneratorSpec::SenecaRc {
            n,
            polynomial: read_json(spec_path(&args.spec, "seneca_rc")?)?,
            noise: args.noise,
            n_redundant: args.n_redundant,
        },
        GeneratorName::GaussianClusters => GeneratorSpec::GaussianClusters {
            n,
            clusters: read_json::<ClusterSpec>(spec_path(&args.spec, "gaussian_clusters")?)?,
        },
    };
    let ds = spec.generate(RunSeed::new(args.seed))?;
    save_dataset(&ds, &args.out)?;
    eprintln!("wrote {} rows x {} features to {}", ds.n_instances(), ds.n_features(), args.out.display());
    Ok(())
}

fn spec_path<'a>(spec: &'a Option<PathBuf>, generator: &str) -> Result<&'a Path> {
    spec.as_deref()
        .ok_or_else(|| Error::Config(format!("{generator} needs --spec")))
}

fn train(args: TrainArgs) -> Result<()> {
    let spec = match args.model {
        ModelKind::Logistic => ModelSpec::Logistic {
            learning_rate: args.learning_rate,
            epochs: args.epochs,
            l2: args.l2.unwrap_or(1e-3),
        },
        ModelKind::Linear => ModelSpec::Linear {
            l2: args.l2.unwrap_or(0.0),
        },
        ModelKind::GaussianNb => ModelSpec::GaussianNb {
            var_floor: args.var_floor,
        },
        ModelKind::Mlp => ModelSpec::Mlp {
            hidden: args.hidden,
            learning_rate: args.learning_rate,
            epochs: args.epochs,
        },
    };
    let ds = load_data(&args.data)?;
    let model = spec.fit(&ds, RunSeed::new(args.seed).child("train", 0))?;
    model.save(&args.out)?;
    eprintln!(
        "trained {} model, training accuracy {:.4}",
        model.kind(),
        blamebench::models::accuracy(&model, &ds)
    );
    Ok(())
}

fn explain(args: ExplainArgs) -> Result<()> {
    let model = FittedModel::load(&args.model)?;
    let ds = load_data(&args.data)?;
    let explainer = Explainer::new(args.explainer.resolve()?, &ds)?;
    let rows = first_rows(&ds, args.max_instances);
    let explained = explain_rows(&model, &explainer, &ds, &rows, RunSeed::new(args.seed).child("explain", 0))?;
    write_attributions_csv(&explained, output(args.out.as_deref())?)
}

fn ground_truth(args: GroundTruthArgs) -> Result<()> {
    let ds = load_data(&args.data)?;
    let model = match &args.model {
        Some(p) => Some(FittedModel::load(p)?),
        None => None,
    };
    let need_model = || model.as_ref().ok_or_else(|| Error::Config("this method needs --model".into()));
    let search: BoundarySearch = match &args.boundary {
        Some(p) => read_json(p)?,
        None => BoundarySearch::default(),
    };
    let polynomial: Option<PolynomialSpec> = args.polynomial.as_deref().map(read_json).transpose()?;
    let mut rows = Vec::new();
    for i in first_rows(&ds, args.max_instances) {
        let x = ds.row(i);
        let gt = match args.method {
            GroundTruthMethod::Mias => groundtruth::mias(need_model()?, x)?,
            GroundTruthMethod::Weights => match need_model()? {
                FittedModel::Logistic(m) => groundtruth::weights_ground_truth(m),
                other => {
                    return Err(Error::Config(format!(
                        "weights ground truth needs a logistic model, got {}",
                        other.kind()
                    )))
                }
            },
            GroundTruthMethod::Seneca => {
                let poly = polynomial
                    .as_ref()
                    .ok_or_else(|| Error::Config("seneca ground truth needs --polynomial".into()))?;
                groundtruth::seneca_ground_truth(need_model()?, poly, x, &ds, &search)?
            }
            GroundTruthMethod::Generator => groundtruth::generator_ground_truth(&ds, i)?,
        };
        rows.push((i, if args.normalize { gt.normalized_linf() } else { gt }));
    }
    write_ground_truth_csv(&rows, output(args.out.as_deref())?)
}

fn score(args: ScoreArgs) -> Result<()> {
    let attributions = read_attributions_csv(&args.attributions)?;
    let gts = read_ground_truth_csv(&args.gt)?;
    let mut explainers: Vec<String> = Vec::new();
    for (_, a) in &attributions {
        if !explainers.contains(&a.explainer_id) {
            explainers.push(a.explainer_id.clone());
        }
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    for name in &explainers {
        let atts: Vec<_> = attributions.iter().filter(|(_, a)| &a.explainer_id == name).cloned().collect();
        let matched = atts
            .iter()
            .map(|(i, _)| {
                gts.iter()
                    .find(|(g, _)| g == i)
                    .cloned()
                    .ok_or_else(|| Error::validation(format!("no ground truth for instance {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(
            evaluate_against_gt(&atts, &matched, &args.metrics)?
                .into_iter()
                .map(|r| r.tagged(&args.dataset_name, &args.model_name)),
        );
    }
    if let Some(path) = &args.json {
        let mut w = output(Some(path))?;
        serde_json::to_writer_pretty(&mut w, &rows)?;
        writeln!(w)?;
        w.flush()?;
    }
    write_rows_csv(&rows, output(args.out.as_deref())?)
}

/// Config for a model and dataset already on disk.
fn file_config(model: &Path, data: &Path, explainer: ExplainerConfig, seed: u64, evaluation: EvaluationSpec) -> BenchmarkConfig {
    BenchmarkConfig {
        version: CONFIG_VERSION,
        seed,
        dataset: DatasetSource::File { path: data.to_path_buf() },
        model: ModelSpec::File { path: model.to_path_buf() },
        explainers: vec![explainer],
        evaluation,
        output_dir: None,
    }
}

fn robustness(args: RobustnessArgs) -> Result<()> {
    let strategies = if args.strategy.is_empty() {
        vec![NullificationStrategy::DatasetMean]
    } else {
        args.strategy
    };
    let evaluation = EvaluationSpec {
        max_instances: args.max_instances,
        robustness: Some(RobustnessSpec {
            measures: args.measure,
            k: args.k,
            strategies,
            epsilon: args.epsilon,
            n_samples: args.n_samples,
        }),
        ..EvaluationSpec::default()
    };
    let cfg = file_config(&args.model, &args.data, args.explainer.resolve()?, args.seed, evaluation);
    let report = run_benchmark(&cfg)?;
    write_rows_csv(&report.rows, output(args.out.as_deref())?)
}

fn sanity(args: SanityArgs) -> Result<ExitCode> {
    let model = FittedModel::load(&args.model)?;
    let ds = load_data(&args.data)?;
    let explainer = Explainer::new(args.explainer.resolve()?, &ds).map_err(|e| match e {
        Error::Validation(m) => Error::Config(m),
        e => e,
    })?;
    let sample = ds.select(&first_rows(&ds, args.max_instances))?;
    let thresholds = SanityThresholds {
        similarity: args.similarity_threshold,
        accuracy_margin: args.accuracy_margin,
    };
    if args.seeds == 0 || args.stages == Some(0) {
        return Err(Error::Config("--seeds and --stages must be positive".into()));
    }
    let seed = RunSeed::new(args.seed);
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    w.write_record(["seed", "stage", "label", "instance", "similarity", "retained_accuracy", "verdict"])?;
    let mut failed = false;
    for s in 0..args.seeds {
        let mut plans = plan_stages(&model, args.mode, seed.child("randomization", 0).child("seed", s as u64));
        plans.truncate(args.stages.unwrap_or(usize::MAX));
        let report = sanity_check(&model, &explainer, &sample, &plans, &args.metric, seed.child("explain", 0), &thresholds)?;
        failed |= report.overall() == Verdict::Fail;
        for stage in &report.stages {
            for (i, v) in stage.similarities.iter().enumerate() {
                w.write_record([
                    s.to_string(),
                    stage.stage.to_string(),
                    stage.label.clone(),
                    i.to_string(),
                    format!("{v:?}"),
                    format!("{:?}", stage.retained_accuracy),
                    stage.verdict.to_string(),
                ])?;
            }
            eprintln!(
                "seed {s} stage {} ({}): mean {} {:.4}, retained accuracy {:.4} (original {:.4}) -> {}",
                stage.stage, stage.label, args.metric, stage.mean_similarity, stage.retained_accuracy,
                report.original_accuracy, stage.verdict
            );
        }
    }
    w.flush()?;
    Ok(if args.strict && failed {
        ExitCode::from(EXIT_SANITY_FAIL)
    } else {
        ExitCode::SUCCESS
    })
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = BenchmarkConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = args.out_dir {
        cfg.output_dir = Some(dir);
    }
    let report = run_benchmark(&cfg)?;
    if cfg.output_dir.is_none() {
        write_rows_csv(&report.rows, output(None)?)?;
    }
    eprintln!(
        "{} rows, config hash {}, {} ms",
        report.rows.len(),
        report.metadata.config_hash,
        report.wall_time_ms.unwrap_or_default()
    );
    let failed = report.rows.iter().any(|r| r.flags.contains("verdict=fail"));
    Ok(if args.strict && failed {
        ExitCode::from(EXIT_SANITY_FAIL)
    } else {
        ExitCode::SUCCESS
    })
}

fn figure4(args: Figure4Args) -> Result<()> {
    let result = run_figure4_experiment(RunSeed::new(args.seed))?;
    result.write_csv(output(args.out.as_deref())?)
}

fn summarize_report(args: SummarizeArgs) -> Result<()> {
    let rows = blamebench::harness::report::read_rows_csv(&args.report)?;
    match (args.rank_metric, args.provenance) {
        (Some(metric), Some(provenance)) => {
            write_ranking_csv(&compare_explainers(&rows, &metric, provenance)?, output(args.out.as_deref())?)
        }
        _ => write_summary_csv(&args.by, &summarize(&rows, &args.by)?, output(args.out.as_deref())?),
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let done = |r: Result<()>| r.map(|_| ExitCode::SUCCESS);
    match cli.command {
        Command::Generate(a) => done(generate(a)),
        Command::Train(a) => done(train(a)),
        Command::Explain(a) => done(explain(a)),
        Command::Groundtruth(a) => done(ground_truth(a)),
        Command::Score(a) => done(score(a)),
        Command::Robustness(a) => done(robustness(a)),
        Command::Sanity(a) => sanity(a),
        Command::Run(a) => run(a),
        Command::Figure4(a) => done(figure4(a)),
        Command::Summarize(a) => done(summarize_report(a)),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
