//! The `mlpac` command line: `gen-data`, `train`, `eval`, `sweep`.

pub mod config;
pub mod run;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::datagen::{
    generate_multilabel, load_dataset, mask_positives, save_dataset, Dataset, FullDataset,
};
use crate::error::{MlpacError, Result};
use crate::evalkit::{MetricsReport, TargetKind};
use crate::netcore::DenseModel;
use crate::trainer::evaluate_model;
use config::TrainArgs;
use run::{partial_view, run_experiment, Method, Split};
use sweep::{aggregate, output_paths, run_sweep, write_aggregate, write_summary, SweepPlan};

#[derive(Parser, Debug)]
#[command(
    name = "mlpac",
    version,
    about = "Multi-label positive-unlabeled training by policy gradient"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset and its masked partial-label variants.
    GenData(GenDataArgs),
    /// Train one method on one dataset.
    Train(TrainCmd),
    /// Evaluate a checkpoint against ground truth and observed labels.
    Eval(EvalArgs),
    /// Run methods x ratios x seeds (x rho x w0) and summarise.
    Sweep(SweepArgs),
}

fn parse_ratio(s: &str) -> std::result::Result<f64, String> {
    let r: f64 = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if r > 0.0 && r <= 1.0 {
        Ok(r)
    } else {
        Err(format!("annotation ratio must be in (0, 1], got {r}"))
    }
}

#[derive(Args, Debug)]
pub struct SeedArg {
    /// Global seed.
    #[arg(long, env = "MLPAC_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test_frac: f64,
}

impl SplitArgs {
    fn split(&self) -> Split {
        Split {
            val_frac: self.val_frac,
            test_frac: self.test_frac,
        }
    }
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Feature dimension.
    #[arg(long, default_value_t = 20)]
    pub d: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.1)]
    pub positive_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    /// Annotation ratios to mask at, each in (0, 1].
    #[arg(long, value_delimiter = ',', value_parser = parse_ratio, default_value = "0.1,0.3,0.5,1.0")]
    pub ratios: Vec<f64>,
    /// Collapse to "this class vs rest" before masking.
    #[arg(long)]
    pub binary_class: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainCmd {
    /// Dataset file (full or partial).
    #[arg(long)]
    pub data: PathBuf,
    /// Mask a full dataset at this ratio.
    #[arg(long, value_parser = parse_ratio)]
    pub ratio: Option<f64>,
    #[arg(long, value_enum, default_value = "mlpac")]
    pub method: Method,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Output directory for checkpoint.json, epochs.csv and metrics.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Mask a full dataset at this ratio for the observed-label report.
    #[arg(long, value_parser = parse_ratio)]
    pub ratio: Option<f64>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Full dataset to mask at every ratio.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "mlpac,negative"
    )]
    pub methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', value_parser = parse_ratio, default_value = "0.1,0.3,0.5")]
    pub ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    /// Sweep the unknown-class sampling fraction.
    #[arg(long, value_delimiter = ',')]
    pub rhos: Vec<f64>,
    /// Sweep the initial global-reward weight.
    #[arg(long, value_delimiter = ',')]
    pub w0s: Vec<f64>,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| MlpacError::io(path, e))
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<Vec<PathBuf>> {
    let seed = args.seed.seed;
    let mut full = generate_multilabel(
        args.n,
        args.d,
        args.classes,
        args.positive_rate,
        args.spread,
        seed,
    )?;
    if let Some(c) = args.binary_class {
        full = full.to_binary(c)?;
    }
    create_dir(&args.out)?;
    let mut written = Vec::new();
    let path = args.out.join("full.jsonl");
    save_dataset(&Dataset::Full(full.clone()), &path)?;
    written.push(path);
    for &r in &args.ratios {
        let partial = mask_positives(&full, r, seed)?;
        let path = args.out.join(format!("partial_{r}.jsonl"));
        save_dataset(&Dataset::Partial(partial), &path)?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_train(args: &TrainCmd) -> Result<run::RunMetrics> {
    let data = load_dataset(&args.data)?;
    let mut config = args.train.resolve()?;
    config.seed = args.seed.seed;
    let partial = partial_view(&data, args.ratio, args.seed.seed)?;
    run_experiment(
        &partial,
        args.method,
        &config,
        args.split.split(),
        &args.out,
    )
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub ground_truth: Option<MetricsReport>,
    pub observed_proxy: Option<MetricsReport>,
}

fn check_dims(model: &DenseModel, d: usize, classes: usize) -> Result<()> {
    if model.input_dim() != d || model.output_dim() != classes {
        return Err(MlpacError::Input(format!(
            "checkpoint maps {} -> {} but dataset has {d} features and {classes} classes",
            model.input_dim(),
            model.output_dim()
        )));
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let text =
        fs::read_to_string(&args.checkpoint).map_err(|e| MlpacError::io(&args.checkpoint, e))?;
    let model = DenseModel::from_json(&text)?;
    let data = load_dataset(&args.data)?;
    check_dims(&model, data.dim(), data.num_classes())?;
    let truth: Option<FullDataset> = match &data {
        Dataset::Full(f) => Some(f.clone()),
        Dataset::Partial(p) => p.truth.as_ref().map(|t| FullDataset {
            features: p.features.clone(),
            true_labels: t.clone(),
            class_names: p.class_names.clone(),
            seed: 0,
        }),
    };
    let ground_truth = truth
        .as_ref()
        .map(|f| evaluate_model(&model, &f.features, &f.true_labels, TargetKind::GroundTruth))
        .transpose()?;
    let observed = partial_view(&data, args.ratio, args.seed.seed)?;
    let observed_proxy = Some(evaluate_model(
        &model,
        &observed.features,
        &observed.observed_as_signs(),
        TargetKind::ObservedProxy,
    )?);
    Ok(EvalReport {
        ground_truth,
        observed_proxy,
    })
}

/// Runs the sweep; `Ok(false)` when at least one run failed.
pub fn cmd_sweep(args: &SweepArgs) -> Result<bool> {
    let data = load_dataset(&args.data)?;
    if let Dataset::Partial(_) = data {
        return Err(MlpacError::Config(
            "sweep needs a full dataset to mask at each ratio".into(),
        ));
    }
    for &rho in &args.rhos {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(MlpacError::Config(format!(
                "rho must be in (0, 1], got {rho}"
            )));
        }
    }
    let base = args.train.resolve()?;
    let plan = SweepPlan {
        methods: args.methods.clone(),
        ratios: args.ratios.clone(),
        seeds: args.seeds.clone(),
        rhos: args.rhos.clone(),
        w0s: args.w0s.clone(),
    };
    let cells = plan.cells(&base);
    create_dir(&args.out)?;
    let rows = run_sweep(
        &data,
        &cells,
        &base,
        args.split.split(),
        args.jobs,
        &args.out,
    )?;
    let (summary, agg) = output_paths(&args.out);
    write_summary(&rows, &summary)?;
    write_aggregate(&aggregate(&rows), &agg)?;
    let failed: Vec<_> = rows.iter().filter(|r| r.scores.is_none()).collect();
    for r in &failed {
        eprintln!(
            "run {} ratio={} seed={} failed: {}",
            r.cell.method.tag(),
            r.cell.ratio,
            r.cell.seed,
            r.status
        );
    }
    println!(
        "{} runs, {} failed; summary in {}",
        rows.len(),
        failed.len(),
        summary.display()
    );
    Ok(failed.is_empty())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| MlpacError::Input(format!("cannot encode: {e}")))
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenData(a) => {
            for p in cmd_gen_data(&a)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Train(a) => {
            println!("{}", cmd_train(&a)?.summary_line());
            Ok(true)
        }
        Command::Eval(a) => {
            let json = to_json(&cmd_eval(&a)?)? + "\n";
            match &a.out {
                Some(path) => fs::write(path, json).map_err(|e| MlpacError::io(path, e))?,
                None => print!("{json}"),
            }
            Ok(true)
        }
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
