//! Command-line interface.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use earlyclass_core::eval::{self, CurvePoint, EvalConfig, EvalReport, SeriesOutcome, TradeoffCurve};
use earlyclass_core::series::{apply_normalization, fit_normalization, split_random};
use earlyclass_core::synthetic::{self, SignalDistribution};
use earlyclass_core::training::{self, EpochMetrics, HopMode, TrainConfig, TrainOutcome};
use earlyclass_core::{Dataset, ModelBundle};
use rayon::prelude::*;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::{ResolvedConfig, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{self as dataio, LoadOptions};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "EARLYCLASS_OUT";

#[derive(Debug, Parser)]
#[command(name = "earlyclass", version, about = "Early classification of irregular time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Trace an accuracy/earliness curve across seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Signal-time distribution: uniform, early, late or bimodal.
    #[arg(long, value_parser = parse_distribution)]
    pub dist: SignalDistribution,
    /// Number of series; must be even.
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Observations per series.
    #[arg(long, default_value_t = 10)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Training options. Each flag overrides the same key in `--config`.
#[derive(Debug, Default, Args)]
pub struct TrainFlags {
    /// TOML file with training options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Hop standard deviation as a fraction of the horizon.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_hops: Option<usize>,
    #[arg(long)]
    pub min_hop_fraction: Option<f64>,
    #[arg(long)]
    pub hidden_size: Option<usize>,
    #[arg(long)]
    pub classifier_hidden: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub wait_bias: Option<f64>,
    /// Move each hop forward to the next observation time.
    #[arg(long)]
    pub snap_to_grid: bool,
    /// Evaluate with the mean hop instead of a sampled one.
    #[arg(long)]
    pub deterministic_eval_hop: bool,
    /// Treat policy inputs as constants during training.
    #[arg(long)]
    pub detach_policy_inputs: bool,
    /// Hop rule during training: sample, mean or next-observation.
    #[arg(long, value_parser = parse_hop_mode)]
    pub train_hop_mode: Option<HopMode>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Comma-separated learning rates to search.
    #[arg(long, value_delimiter = ',')]
    pub lr_grid: Option<Vec<f64>>,
    /// Comma-separated weight decays to search.
    #[arg(long, value_delimiter = ',')]
    pub wd_grid: Option<Vec<f64>>,
    /// Observation horizon of the input data.
    #[arg(long)]
    pub horizon: Option<f64>,
}

impl TrainFlags {
    fn overrides(&self) -> RunConfig {
        RunConfig {
            lambda: self.lambda,
            alpha: self.alpha,
            sigma: self.sigma,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            max_hops: self.max_hops,
            min_hop_fraction: self.min_hop_fraction,
            hidden_size: self.hidden_size,
            classifier_hidden: self.classifier_hidden.map(Some),
            seed: self.seed,
            wait_bias: self.wait_bias,
            snap_to_grid: self.snap_to_grid.then_some(true),
            deterministic_eval_hop: self.deterministic_eval_hop.then_some(true),
            detach_policy_inputs: self.detach_policy_inputs.then_some(true),
            train_hop_mode: self.train_hop_mode,
            val_fraction: self.val_fraction,
            test_fraction: None,
            split_seed: self.split_seed,
            lr_grid: self.lr_grid.clone(),
            wd_grid: self.wd_grid.clone(),
            horizon: self.horizon,
        }
    }

    fn resolve(&self, extra: RunConfig) -> Result<ResolvedConfig> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let resolved = file.merge(self.overrides()).merge(extra).resolve();
        resolved.validate()?;
        Ok(resolved)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Threads used to train grid cells.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Learned stop and hop policies.
    Stophop,
    /// Stop every series at `--fraction` of its horizon.
    Preset,
    /// Stop at the first observation where confidence exceeds `--threshold`.
    Egru,
    /// Learned stop policy, hopping to the next observation.
    NextObsHop,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::Stophop)]
    pub mode: EvalMode,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Use the mean hop instead of sampling.
    #[arg(long)]
    pub deterministic_hop: bool,
    /// Seed of the evaluation hop noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Threads used to evaluate series.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("sweep").required(true).args(["lambdas", "fractions", "thresholds"])))]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated earliness weights; trains one model per weight and seed.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Comma-separated preset stopping fractions.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Comma-separated confidence thresholds.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Threads used to train models.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub flags: TrainFlags,
}

fn parse_distribution(s: &str) -> std::result::Result<SignalDistribution, String> {
    SignalDistribution::parse(s).ok_or_else(|| format!("unknown distribution `{s}` (expected uniform, early, late or bimodal)"))
}

fn parse_hop_mode(s: &str) -> std::result::Result<HopMode, String> {
    match s {
        "sample" => Ok(HopMode::Sample),
        "mean" => Ok(HopMode::Mean),
        "next-observation" => Ok(HopMode::NextObservation),
        _ => Err(format!("unknown hop mode `{s}` (expected sample, mean or next-observation)")),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn out_dir(explicit: Option<PathBuf>, command: &str) -> Result<PathBuf> {
    let dir = explicit.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
        root.join(command)
    });
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    Ok(dir)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(CliError::Usage("--workers must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::format(path, e))?;
    writeln!(w).map_err(CliError::io(path))?;
    w.flush().map_err(CliError::io(path))
}

fn write_metrics(path: &Path, log: &[EpochMetrics]) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    for m in log {
        serde_json::to_writer(&mut w, m).map_err(|e| CliError::format(path, e))?;
        writeln!(w).map_err(CliError::io(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let ds = synthetic::generate(a.dist, a.n, a.t, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let dir = out_dir(a.out, "generate")?;
    dataio::save_dir(&ds, &dir)?;
    println!("wrote {} {} series to {}", ds.len(), a.dist, dir.display());
    Ok(())
}

fn load(dir: &Path, horizon: f64) -> Result<Dataset> {
    dataio::load_dir(
        dir,
        &LoadOptions {
            horizon,
            ..LoadOptions::default()
        },
    )
}

/// Normalizes every part with statistics fitted on the first.
fn normalize<const N: usize>(parts: [Dataset; N]) -> Result<[Dataset; N]> {
    let stats = fit_normalization(&parts[0]);
    let mut out = Vec::with_capacity(N);
    for p in &parts {
        out.push(apply_normalization(p, &stats)?);
    }
    Ok(out.try_into().expect("one output per part"))
}

fn print_epoch(m: &EpochMetrics) {
    eprintln!(
        "epoch {:>3}  eps {:.3}  loss {:.4}  train acc {:.3}  val acc {:.3}  val halt {:.3}",
        m.epoch, m.epsilon, m.loss, m.train_accuracy, m.val_accuracy, m.mean_halting_fraction
    );
}

fn train_grid(
    train_data: &Dataset,
    val_data: &Dataset,
    resolved: &ResolvedConfig,
    workers: usize,
) -> Result<(TrainOutcome, TrainConfig, Option<Vec<training::GridCell>>)> {
    let base = resolved.train_config();
    let lrs = if resolved.lr_grid.is_empty() { vec![base.learning_rate] } else { resolved.lr_grid.clone() };
    let wds = if resolved.wd_grid.is_empty() { vec![base.weight_decay] } else { resolved.wd_grid.clone() };
    let cells: Vec<(f64, f64)> = lrs.iter().flat_map(|&lr| wds.iter().map(move |&wd| (lr, wd))).collect();
    if cells.len() == 1 {
        let model = ModelBundle::new(base.model_config(train_data.num_variables, train_data.num_classes), base.seed)?;
        let outcome = training::train_model(model, train_data, val_data, &base, print_epoch)?;
        return Ok((outcome, base, None));
    }
    let outcomes = pool(workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(lr, wd)| {
                let cfg = TrainConfig {
                    learning_rate: lr,
                    weight_decay: wd,
                    ..base
                };
                training::train(train_data, val_data, &cfg)
            })
            .collect::<earlyclass_core::Result<Vec<_>>>()
    })?;
    let logs: Vec<Vec<EpochMetrics>> = outcomes.iter().map(|o| o.log.clone()).collect();
    let (chosen, summary) = training::select_grid_cell(&base, &cells, &logs)?;
    for c in &summary {
        eprintln!(
            "lr {:e}  wd {:e}  val acc {:.4}  val halt {:.4}",
            c.learning_rate, c.weight_decay, c.val_accuracy, c.mean_halting_fraction
        );
    }
    let best = cells
        .iter()
        .position(|&(lr, wd)| lr == chosen.learning_rate && wd == chosen.weight_decay)
        .expect("chosen cell is in the grid");
    let outcome = outcomes.into_iter().nth(best).expect("one outcome per cell");
    Ok((outcome, chosen, Some(summary)))
}

fn train(a: TrainArgs) -> Result<()> {
    let resolved = a.flags.resolve(RunConfig::default())?;
    let ds = load(&a.data, resolved.horizon)?;
    let (train_data, val_data) = split_random(&ds, 1.0 - resolved.val_fraction, resolved.split_seed)?;
    let [train_data, val_data] = normalize([train_data, val_data])?;
    let dir = out_dir(a.out, "train")?;

    let (outcome, chosen, grid) = train_grid(&train_data, &val_data, &resolved, a.workers)?;
    let resolved = ResolvedConfig {
        learning_rate: chosen.learning_rate,
        weight_decay: chosen.weight_decay,
        ..resolved
    };
    Checkpoint::new(outcome.model, chosen).save(&dir.join("model.ckpt"))?;
    write_metrics(&dir.join("metrics.jsonl"), &outcome.log)?;
    resolved.save(&dir.join("config.resolved"))?;
    if let Some(cells) = grid {
        write_json(&dir.join("grid.json"), &cells)?;
    }
    if let Some(m) = outcome.log.last() {
        println!(
            "val accuracy {:.4}  val auc {}  val halting fraction {:.4}",
            m.val_accuracy,
            m.val_auc.map_or("n/a".into(), |v| format!("{v:.4}")),
            m.mean_halting_fraction
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalOutput<'a> {
    mode: EvalMode,
    fraction: Option<f64>,
    threshold: Option<f64>,
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn evaluate(a: EvalArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.model)?;
    let model = &ckpt.model;
    let tc = &ckpt.train_config;
    let ds = dataio::load_dir(
        &a.data,
        &LoadOptions {
            horizon: a.horizon.unwrap_or(1.0),
            num_variables: Some(model.config.input_size),
            num_classes: Some(model.config.num_classes),
        },
    )?;
    let ds = match &model.normalization {
        Some(stats) => apply_normalization(&ds, stats)?,
        None => ds,
    };

    match (a.mode, a.fraction, a.threshold) {
        (EvalMode::Preset, Some(f), None) if (0.0..=1.0).contains(&f) => {}
        (EvalMode::Preset, ..) => return Err(CliError::Usage("preset mode needs --fraction in [0, 1]".into())),
        (EvalMode::Egru, None, Some(t)) if t > 0.5 && t < 1.0 => {}
        (EvalMode::Egru, ..) => return Err(CliError::Usage("egru mode needs --threshold in (0.5, 1)".into())),
        (_, None, None) => {}
        _ => return Err(CliError::Usage("--fraction and --threshold apply to preset and egru modes only".into())),
    }
    if matches!(a.mode, EvalMode::Preset | EvalMode::Egru) && tc.lambda > 0.0 {
        eprintln!(
            "warning: baseline mode `{:?}` on a model trained with lambda = {}; baselines expect a lambda = 0 classifier",
            a.mode, tc.lambda
        );
    }

    let hop_mode = match a.mode {
        EvalMode::NextObsHop => HopMode::NextObservation,
        _ if a.deterministic_hop || tc.deterministic_eval_hop => HopMode::Mean,
        _ => HopMode::Sample,
    };
    let cfg = EvalConfig {
        hop_mode,
        seed: a.seed,
        max_hops: tc.max_hops,
        min_hop_fraction: tc.min_hop_fraction,
        snap_to_grid: tc.snap_to_grid,
    };
    let outcomes = pool(a.workers)?.install(|| {
        ds.series
            .par_iter()
            .enumerate()
            .map(|(i, s)| match a.mode {
                EvalMode::Stophop | EvalMode::NextObsHop => eval::evaluate_series(model, s, i, &cfg),
                EvalMode::Preset => eval::preset_series(model, s, a.fraction.unwrap_or(1.0)),
                EvalMode::Egru => eval::egru_series(model, s, a.threshold.unwrap_or(0.99)),
            })
            .collect::<earlyclass_core::Result<Vec<SeriesOutcome>>>()
    })?;
    let report = EvalReport::from_outcomes(outcomes, &ds)?;
    let dir = out_dir(a.out, "eval")?;
    write_json(
        &dir.join("report.json"),
        &EvalOutput {
            mode: a.mode,
            fraction: a.fraction,
            threshold: a.threshold,
            report: &report,
        },
    )?;
    println!(
        "accuracy {:.4}  auc {}  mean halting fraction {:.4}  kolmogorov distance {}",
        report.accuracy,
        report.auc.map_or("n/a".into(), |v| format!("{v:.4}")),
        report.mean_halting_fraction,
        report.kolmogorov_distance.map_or("n/a".into(), |v| format!("{v:.4}")),
    );
    println!("wrote {}", dir.join("report.json").display());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let resolved = a.flags.resolve(RunConfig {
        test_fraction: a.test_fraction,
        ..RunConfig::default()
    })?;
    if a.seeds.is_empty() {
        return Err(CliError::Usage("--seeds must name at least one seed".into()));
    }
    for t in a.thresholds.iter().flatten() {
        if !(*t > 0.5 && *t < 1.0) {
            return Err(CliError::Usage(format!("thresholds must lie in (0.5, 1), got {t}")));
        }
    }
    for f in a.fractions.iter().flatten() {
        if !(0.0..=1.0).contains(f) {
            return Err(CliError::Usage(format!("fractions must lie in [0, 1], got {f}")));
        }
    }
    for l in a.lambdas.iter().flatten() {
        if !(*l >= 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("lambdas must be non-negative, got {l}")));
        }
    }

    let ds = load(&a.data, resolved.horizon)?;
    let (rest, test) = split_random(&ds, 1.0 - resolved.test_fraction, resolved.split_seed)?;
    let (train_data, val_data) = split_random(&rest, 1.0 - resolved.val_fraction, resolved.split_seed.wrapping_add(1))?;
    let [train_data, val_data, test] = normalize([train_data, val_data, test])?;
    let base = resolved.train_config();
    let workers = pool(a.workers)?;

    let points: Vec<CurvePoint> = if let Some(lambdas) = &a.lambdas {
        let runs: Vec<(f64, u64)> = lambdas.iter().flat_map(|&l| a.seeds.iter().map(move |&s| (l, s))).collect();
        let reports = workers.install(|| {
            runs.par_iter()
                .map(|&(lambda, seed)| {
                    let cfg = TrainConfig { lambda, seed, ..base };
                    let outcome = training::train(&train_data, &val_data, &cfg)?;
                    eval::evaluate(&outcome.model, &test, &cfg.eval_config())
                })
                .collect::<earlyclass_core::Result<Vec<_>>>()
        })?;
        lambdas
            .iter()
            .zip(reports.chunks(a.seeds.len()))
            .map(|(&l, r)| CurvePoint::aggregate(l, r))
            .collect()
    } else {
        let models = workers.install(|| {
            a.seeds
                .par_iter()
                .map(|&seed| {
                    let cfg = TrainConfig { lambda: 0.0, seed, ..base };
                    training::train(&train_data, &val_data, &cfg).map(|o| o.model)
                })
                .collect::<earlyclass_core::Result<Vec<_>>>()
        })?;
        let (values, preset) = match (&a.fractions, &a.thresholds) {
            (Some(f), _) => (f.clone(), true),
            (None, Some(t)) => (t.clone(), false),
            (None, None) => unreachable!("clap requires one sweep axis"),
        };
        values
            .iter()
            .map(|&v| {
                let reports = models
                    .iter()
                    .map(|m| if preset { eval::preset_report(m, &test, v) } else { eval::egru_report(m, &test, v) })
                    .collect::<earlyclass_core::Result<Vec<_>>>()?;
                Ok(CurvePoint::aggregate(v, &reports))
            })
            .collect::<Result<Vec<_>>>()?
    };

    let curve = TradeoffCurve::new(points);
    let dir = out_dir(a.out, "sweep")?;
    let csv = curve.to_csv();
    let path = dir.join("curve.csv");
    fs::write(&path, &csv).map_err(CliError::io(&path))?;
    resolved.save(&dir.join("config.resolved"))?;
    print!("{csv}");
    println!("wrote {}", dir.display());
    Ok(())
}
