//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for runtime, I/O or stall failures, 2 for
//! usage errors (bad flags, invalid parameter values).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::activation::{ActivationKind, EluParams, EulerMode, ModHtanParams, OffsetMode};
use crate::bench::{
    approx_bench, curve_points, curves_csv, render_report, run_experiment, CurvePreset,
    DataSource, ExperimentSpec, ReportFormat, TrainerChoice,
};
use crate::dataset::{gen_quadratic, gen_quadratic_random, load_heart, split, SplitSpec};
use crate::error::Error;
use crate::exp_approx::RnfParams;
use crate::network::{forward, nguyen_widrow_init};
use crate::trainer::{classification_accuracy, mse, train_gdm, train_lm, GdmConfig, LmConfig};

#[derive(Debug, Parser)]
#[command(
    name = "modhtan",
    version,
    about = "Modified tanh activation with an integer-calibrated exponential, plus training benchmarks"
)]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Report format for `bench`.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Markdown)]
    pub format: FormatArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write activation curve data as CSV `x,value,gradient`.
    Curves(CurvesArgs),
    /// Time the approximate exponential against the standard one.
    ApproxBench(ApproxArgs),
    /// Train a single network and report its final error or accuracy.
    Train(TrainArgs),
    /// Repeated timed runs per activation, rendered as report tables.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OffsetModeArg {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EulerModeArg {
    Constant,
    Direct,
}

/// Parameters of the activation functions.
#[derive(Debug, Clone, Args)]
pub struct ActivationArgs {
    /// MODHTAN calibration numerator k_o.
    #[arg(long = "k", default_value_t = 2.0)]
    pub k: f64,
    /// MODHTAN region threshold x_cutoff.
    #[arg(long, default_value_t = 10.0)]
    pub cutoff: f64,
    /// MODHTAN offset_1 selection.
    #[arg(long, value_enum, default_value_t = OffsetModeArg::Adaptive)]
    pub offset_mode: OffsetModeArg,
    /// offset_1 value when --offset-mode fixed.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub offset: f64,
    /// Adaptive offset margin: offset_1 = (1 + delta) * max|x| + kappa.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Adaptive offset floor.
    #[arg(long, default_value_t = 1e-6)]
    pub kappa: f64,
    /// Normalize inputs inside the cutoff band too.
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub center_normalize: OnOff,
    /// Clamp for the normalized input.
    #[arg(long, default_value_t = 50.0)]
    pub clamp: f64,
    /// Integer calibration constant a of the exponential approximation.
    #[arg(long, default_value_t = RnfParams::DEFAULT_A)]
    pub rnf_a: u64,
    /// Use the cached Euler constant or evaluate the approximation directly.
    #[arg(long, value_enum, default_value_t = EulerModeArg::Constant)]
    pub euler_mode: EulerModeArg,
    /// ELU negative-branch scale.
    #[arg(long, default_value_t = 1.0)]
    pub elu_alpha: f64,
}

impl ActivationArgs {
    fn resolve(&self, name: &str) -> Result<ActivationKind, Error> {
        let kind = match name.parse::<ActivationKind>()? {
            ActivationKind::Elu(_) => ActivationKind::Elu(EluParams::new(self.elu_alpha)?),
            ActivationKind::ModHtan(_) => ActivationKind::ModHtan(ModHtanParams {
                k_o: self.k,
                x_cutoff: self.cutoff,
                offset_mode: match self.offset_mode {
                    OffsetModeArg::Fixed => OffsetMode::Fixed(self.offset),
                    OffsetModeArg::Adaptive => OffsetMode::Adaptive {
                        delta: self.delta,
                        kappa: self.kappa,
                    },
                },
                rnf: RnfParams::with_a(self.rnf_a)?,
                x_norm_clamp: self.clamp,
                center_normalize: self.center_normalize == OnOff::On,
                euler_mode: match self.euler_mode {
                    EulerModeArg::Constant => EulerMode::Constant,
                    EulerModeArg::Direct => EulerMode::Direct,
                },
            }),
            other => other,
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// [-10, 10], step 0.01
    Within,
    /// [-1000, 1000], step 1
    Exploding,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Activation: softstep, htan, elu or modhtan.
    #[arg(long = "fn")]
    pub function: String,
    /// Range preset; explicit --lo/--hi/--step override it.
    #[arg(long, value_enum, default_value_t = PresetArg::Within)]
    pub preset: PresetArg,
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[command(flatten)]
    pub act: ActivationArgs,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// Number of evaluations timed per function.
    #[arg(long, default_value_t = 1_000_000)]
    pub count: usize,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    pub hi: f64,
    /// Integer calibration constant a.
    #[arg(long, default_value_t = RnfParams::DEFAULT_A)]
    pub a: u64,
    #[arg(long = "rnf-n", default_value_t = 1.0, allow_hyphen_values = true)]
    pub rnf_n: f64,
    #[arg(long = "rnf-m", default_value_t = 1.0, allow_hyphen_values = true)]
    pub rnf_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataArg {
    Synthetic,
    Heart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainerArg {
    Lm,
    Gdm,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, value_enum, default_value_t = DataArg::Synthetic)]
    pub data: DataArg,
    /// Synthetic sample count.
    #[arg(long, default_value_t = 50_000)]
    pub n: usize,
    /// Sample synthetic inputs uniformly instead of evenly spaced.
    #[arg(long)]
    pub random_x: bool,
    /// Statlog Heart data file (whitespace or comma separated).
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Test fraction for heart splits.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainerArgs {
    #[arg(long, value_enum, default_value_t = TrainerArg::Lm)]
    pub trainer: TrainerArg,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 2)]
    pub hidden: usize,
    /// GDM learning rate.
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// GDM momentum.
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// LM initial damping.
    #[arg(long, default_value_t = 1e-3)]
    pub mu0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu_inc: f64,
    #[arg(long, default_value_t = 0.1)]
    pub mu_dec: f64,
    #[arg(long, default_value_t = 1e10)]
    pub mu_max: f64,
}

impl TrainerArgs {
    fn resolve(&self) -> Result<TrainerChoice, Error> {
        let choice = match self.trainer {
            TrainerArg::Lm => TrainerChoice::Lm(LmConfig {
                mu0: self.mu0,
                mu_inc: self.mu_inc,
                mu_dec: self.mu_dec,
                mu_max: self.mu_max,
                epochs: self.epochs,
            }),
            TrainerArg::Gdm => TrainerChoice::Gdm(GdmConfig {
                learning_rate: self.lr,
                momentum: self.momentum,
                epochs: self.epochs,
            }),
        };
        match choice {
            TrainerChoice::Lm(c) => c.validate()?,
            TrainerChoice::Gdm(c) => c.validate()?,
        }
        if self.hidden == 0 {
            return Err(Error::InvalidParam("--hidden must be >= 1".into()));
        }
        Ok(choice)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Hidden activation: softstep, htan, elu or modhtan.
    #[arg(long = "fn", default_value = "modhtan")]
    pub function: String,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[command(flatten)]
    pub act: ActivationArgs,
    /// Write the trained model in key-value text form.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Write the loss history as CSV `epoch,loss,epoch_time_s`.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated activation list.
    #[arg(long = "fns", default_value = "htan,elu,modhtan")]
    pub functions: String,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Run concurrently without timing (runtimes reported as 0).
    #[arg(long)]
    pub parallel: bool,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[command(flatten)]
    pub act: ActivationArgs,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_or_print(out: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(runtime),
    }
}

fn data_source(args: &DataArgs) -> Result<DataSource, Failure> {
    match args.data {
        DataArg::Synthetic => {
            if args.n < 2 {
                return Err(usage("--n must be >= 2"));
            }
            Ok(DataSource::Synthetic {
                n: args.n,
                random_x: args.random_x,
            })
        }
        DataArg::Heart => {
            SplitSpec::new(args.test_fraction, 0).map_err(usage)?;
            let path = args
                .path
                .clone()
                .ok_or_else(|| usage("--data heart requires --path"))?;
            Ok(DataSource::Heart { path })
        }
    }
}

fn cmd_curves(cli: &Cli, args: &CurvesArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let kind = args.act.resolve(&args.function).map_err(usage)?;
    let preset = match args.preset {
        PresetArg::Within => CurvePreset::WithinRange,
        PresetArg::Exploding => CurvePreset::Exploding,
    };
    let (lo, hi, step) = preset.range();
    let (lo, hi, step) = (args.lo.unwrap_or(lo), args.hi.unwrap_or(hi), args.step.unwrap_or(step));
    let points = curve_points(&kind, lo, hi, step).map_err(usage)?;
    write_or_print(cli.out.as_ref(), &curves_csv(&points), stdout)
}

fn cmd_approx_bench(cli: &Cli, args: &ApproxArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let params = RnfParams::new(args.a, args.rnf_n, args.rnf_m).map_err(usage)?;
    let b = approx_bench(args.count, args.lo, args.hi, params).map_err(usage)?;
    let line = format!(
        "count={} lo={} hi={} a={} ns_per_op_rnf={:.3} ns_per_op_ref={:.3} max_rel_err={:e}\n",
        args.count, args.lo, args.hi, args.a, b.ns_per_op_rnf, b.ns_per_op_ref, b.max_rel_err
    );
    write_or_print(cli.out.as_ref(), &line, stdout)
}

fn cmd_train(cli: &Cli, args: &TrainArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let kind = args.act.resolve(&args.function).map_err(usage)?;
    let trainer = args.trainer.resolve().map_err(usage)?;
    let source = data_source(&args.data)?;

    let (train, test) = match &source {
        DataSource::Synthetic { n, random_x } => {
            let ds = if *random_x {
                gen_quadratic_random(*n, cli.seed)
            } else {
                gen_quadratic(*n)
            }
            .map_err(runtime)?;
            (ds, None)
        }
        DataSource::Heart { path } => {
            let ds = load_heart(path).map_err(runtime)?;
            let spec = SplitSpec::new(args.data.test_fraction, cli.seed).map_err(usage)?;
            let (tr, te) = split(&ds, &spec).map_err(runtime)?;
            (tr, Some(te))
        }
    };

    let model = nguyen_widrow_init(
        train.n_features(),
        args.trainer.hidden,
        train.n_outputs(),
        kind,
        cli.seed,
    );
    let start = Instant::now();
    let (trained, history) = match trainer {
        TrainerChoice::Lm(cfg) => train_lm(&model, &train.x, &train.t, &cfg),
        TrainerChoice::Gdm(cfg) => train_gdm(&model, &train.x, &train.t, &cfg),
    }
    .map_err(runtime)?;
    let elapsed = start.elapsed().as_secs_f64();

    if let Some(path) = &args.history {
        std::fs::write(path, history.to_csv()).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    history.check().map_err(runtime)?;

    let mut report = format!(
        "activation={} trainer={:?} epochs_run={} stop={:?} wall_time_s={:.4}\n",
        kind.name(),
        args.trainer.trainer,
        history.losses.len(),
        history.stop_reason,
        elapsed
    );
    let (y, _) = forward(&trained, &train.x).map_err(runtime)?;
    report.push_str(&format!("train_mse={}\n", mse(&y, &train.t)));
    if let Some(te) = &test {
        let (y, _) = forward(&trained, &te.x).map_err(runtime)?;
        let scores: Vec<f64> = y.column(0).iter().copied().collect();
        let acc = classification_accuracy(&scores, &te.labels()).map_err(runtime)?;
        report.push_str(&format!("test_accuracy_pct={acc}\n"));
    }
    stdout.write_all(report.as_bytes()).map_err(runtime)?;

    if let Some(path) = args.save_model.as_ref().or(cli.out.as_ref()) {
        std::fs::write(path, trained.to_text()).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_bench(cli: &Cli, args: &BenchArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    if args.runs == 0 {
        return Err(usage("--runs must be >= 1"));
    }
    let activations = args
        .functions
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|name| args.act.resolve(name))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let mut spec = ExperimentSpec::new(data_source(&args.data)?, activations);
    spec.trainer = args.trainer.resolve().map_err(usage)?;
    spec.runs = args.runs;
    spec.base_seed = cli.seed;
    spec.hidden = args.trainer.hidden;
    spec.test_fraction = args.data.test_fraction;
    spec.parallel = args.parallel;
    spec.validate().map_err(usage)?;

    let report = run_experiment(&spec).map_err(runtime)?;
    let format = match cli.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Markdown => ReportFormat::Markdown,
    };
    let rendered = render_report(&report, format);
    let mut summary = String::new();
    if let Some(path) = &cli.out {
        std::fs::write(path, &rendered).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    } else {
        summary.push_str(&rendered);
        summary.push('\n');
    }
    for a in &report.averages {
        summary.push_str(&format!(
            "AVERAGE {}: runtime_s={:.4} {}={} completed={}/{}\n",
            a.activation.to_uppercase(),
            a.runtime_s,
            a.metric.name(),
            a.metric_value,
            a.completed,
            spec.runs
        ));
    }
    if !spec.parallel {
        summary.push_str(&report.runtime_ordering());
        summary.push('\n');
    }
    stdout.write_all(summary.as_bytes()).map_err(runtime)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Curves(a) => cmd_curves(&cli, a, stdout),
        Command::ApproxBench(a) => cmd_approx_bench(&cli, a, stdout),
        Command::Train(a) => cmd_train(&cli, a, stdout),
        Command::Bench(a) => cmd_bench(&cli, a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}
