//! Repeated timed training runs, report tables, activation curve dumps and
//! the exponential micro-benchmark.

use std::fmt::Write as _;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;

use crate::activation::{activate, ActivationKind};
use crate::dataset::{gen_quadratic, gen_quadratic_random, load_heart, split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::exp_approx::{rnf_exp, RnfParams};
use crate::network::{forward, nguyen_widrow_init};
use crate::trainer::{classification_accuracy, mse, train_gdm, train_lm, GdmConfig, LmConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic { n: usize, random_x: bool },
    Heart { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainerChoice {
    Lm(LmConfig),
    Gdm(GdmConfig),
}

impl Default for TrainerChoice {
    fn default() -> Self {
        TrainerChoice::Lm(LmConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub data: DataSource,
    pub activations: Vec<ActivationKind>,
    pub trainer: TrainerChoice,
    pub runs: usize,
    pub base_seed: u64,
    pub hidden: usize,
    pub test_fraction: f64,
    /// Runs concurrently and skips timing; runtimes are reported as 0.
    pub parallel: bool,
}

impl ExperimentSpec {
    pub fn new(data: DataSource, activations: Vec<ActivationKind>) -> Self {
        Self {
            data,
            activations,
            trainer: TrainerChoice::default(),
            runs: 10,
            base_seed: 0,
            hidden: 2,
            test_fraction: 0.2,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParam("runs must be >= 1".into()));
        }
        if self.activations.is_empty() {
            return Err(Error::InvalidParam("activation list is empty".into()));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidParam("hidden units must be >= 1".into()));
        }
        for kind in &self.activations {
            kind.validate()?;
        }
        match self.trainer {
            TrainerChoice::Lm(c) => c.validate(),
            TrainerChoice::Gdm(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mse,
    AccuracyPct,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::AccuracyPct => "accuracy_pct",
        }
    }

    fn title(&self) -> &'static str {
        match self {
            Metric::Mse => "Error (train MSE)",
            Metric::AccuracyPct => "Test accuracy (%)",
        }
    }

    fn fmt_value(&self, v: f64) -> String {
        match self {
            Metric::Mse => format!("{v:.6}"),
            Metric::AccuracyPct => format!("{v:.5}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub run: usize,
    pub activation: String,
    pub runtime_s: f64,
    pub metric: Metric,
    pub metric_value: f64,
    /// Stall description when the run failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageRow {
    pub activation: String,
    pub runtime_s: f64,
    pub metric: Metric,
    pub metric_value: f64,
    /// Runs that completed without a stall.
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub averages: Vec<AverageRow>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl BenchReport {
    /// Builds average rows, one per activation in order of first appearance.
    /// Stalled runs are left out of the means.
    pub fn from_rows(rows: Vec<BenchRow>) -> Self {
        let mut names: Vec<&str> = Vec::new();
        for r in &rows {
            if !names.contains(&r.activation.as_str()) {
                names.push(&r.activation);
            }
        }
        let averages = names
            .iter()
            .map(|name| {
                let ok: Vec<&BenchRow> = rows
                    .iter()
                    .filter(|r| r.activation == *name && r.failure.is_none())
                    .collect();
                let metric = rows
                    .iter()
                    .find(|r| r.activation == *name)
                    .map(|r| r.metric)
                    .unwrap_or(Metric::Mse);
                AverageRow {
                    activation: name.to_string(),
                    runtime_s: mean(ok.iter().map(|r| r.runtime_s)),
                    metric,
                    metric_value: mean(ok.iter().map(|r| r.metric_value)),
                    completed: ok.len(),
                }
            })
            .collect();
        Self { rows, averages }
    }

    pub fn stall_count(&self) -> usize {
        self.rows.iter().filter(|r| r.failure.is_some()).count()
    }

    /// Activations sorted by average runtime, fastest first.
    pub fn runtime_ordering(&self) -> String {
        let mut avgs: Vec<&AverageRow> = self.averages.iter().collect();
        avgs.sort_by(|a, b| a.runtime_s.total_cmp(&b.runtime_s));
        let names: Vec<String> = avgs
            .iter()
            .map(|a| format!("{} ({:.4} s)", a.activation.to_uppercase(), a.runtime_s))
            .collect();
        format!("run-time ordering, fastest first: {}", names.join(" < "))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("run,activation,runtime_s,metric_name,metric_value\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.run,
                r.activation,
                r.runtime_s,
                r.metric.name(),
                r.metric_value
            );
        }
        for a in &self.averages {
            let _ = writeln!(
                s,
                "AVERAGE,{},{},{},{}",
                a.activation,
                a.runtime_s,
                a.metric.name(),
                a.metric_value
            );
        }
        s
    }

    /// One table per quantity, runs down the rows and activations across.
    pub fn to_markdown(&self) -> String {
        let names: Vec<&str> = self.averages.iter().map(|a| a.activation.as_str()).collect();
        let mut runs: Vec<usize> = self.rows.iter().map(|r| r.run).collect();
        runs.sort_unstable();
        runs.dedup();
        let metric = self.averages.first().map(|a| a.metric).unwrap_or(Metric::Mse);

        let header = {
            let cols: Vec<String> = names.iter().map(|n| n.to_uppercase()).collect();
            format!("| Run | {} |\n|---|{}\n", cols.join(" | "), "---|".repeat(names.len()))
        };
        let cell = |run: usize, name: &str, pick: &dyn Fn(&BenchRow) -> String| {
            self.rows
                .iter()
                .find(|r| r.run == run && r.activation == name)
                .map(|r| match r.failure {
                    Some(_) => "stall".to_string(),
                    None => pick(r),
                })
                .unwrap_or_default()
        };

        let mut s = String::new();
        let tables: [(&str, Box<dyn Fn(&BenchRow) -> String>, Box<dyn Fn(&AverageRow) -> String>); 2] = [
            (
                "Run-time (s)",
                Box::new(|r: &BenchRow| format!("{:.4}", r.runtime_s)),
                Box::new(|a: &AverageRow| format!("{:.4}", a.runtime_s)),
            ),
            (
                metric.title(),
                Box::new(move |r: &BenchRow| r.metric.fmt_value(r.metric_value)),
                Box::new(move |a: &AverageRow| a.metric.fmt_value(a.metric_value)),
            ),
        ];
        for (i, (title, row_fmt, avg_fmt)) in tables.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            let _ = writeln!(s, "### {title}\n");
            s.push_str(&header);
            for &run in &runs {
                let cells: Vec<String> = names.iter().map(|n| cell(run, n, row_fmt.as_ref())).collect();
                let _ = writeln!(s, "| {run} | {} |", cells.join(" | "));
            }
            let avgs: Vec<String> = self.averages.iter().map(avg_fmt).collect();
            let _ = writeln!(s, "| AVERAGE | {} |", avgs.join(" | "));
        }

        let failures: Vec<&BenchRow> = self.rows.iter().filter(|r| r.failure.is_some()).collect();
        if !failures.is_empty() {
            s.push_str("\nStalled runs:\n\n");
            for r in failures {
                let _ = writeln!(
                    s,
                    "- run {} {}: {}",
                    r.run,
                    r.activation.to_uppercase(),
                    r.failure.as_deref().unwrap_or("")
                );
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub fn render_report(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Markdown => report.to_markdown(),
    }
}

pub fn emit_report(report: &BenchReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

enum Prepared {
    Synthetic(Dataset),
    Heart(Dataset),
}

fn run_once(
    spec: &ExperimentSpec,
    data: &Prepared,
    kind: &ActivationKind,
    run: usize,
) -> Result<BenchRow> {
    let seed = spec.base_seed.wrapping_add(run as u64);
    let (train, test, metric) = match data {
        Prepared::Synthetic(ds) => (ds.clone(), None, Metric::Mse),
        Prepared::Heart(ds) => {
            let (tr, te) = split(ds, &SplitSpec::new(spec.test_fraction, seed)?)?;
            (tr, Some(te), Metric::AccuracyPct)
        }
    };
    let model = nguyen_widrow_init(train.n_features(), spec.hidden, train.n_outputs(), *kind, seed);

    let start = Instant::now();
    let (trained, history) = match spec.trainer {
        TrainerChoice::Lm(cfg) => train_lm(&model, &train.x, &train.t, &cfg)?,
        TrainerChoice::Gdm(cfg) => train_gdm(&model, &train.x, &train.t, &cfg)?,
    };
    let runtime_s = if spec.parallel {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    };

    let mut row = BenchRow {
        run,
        activation: kind.name().to_string(),
        runtime_s,
        metric,
        metric_value: f64::NAN,
        failure: None,
    };
    if let Some((epoch, reason)) = history.stalled() {
        row.failure = Some(format!("epoch {epoch}: {reason}"));
        return Ok(row);
    }
    let evaluated = match &test {
        None => forward(&trained, &train.x).map(|(y, _)| mse(&y, &train.t)),
        Some(te) => forward(&trained, &te.x).and_then(|(y, _)| {
            let scores: Vec<f64> = y.column(0).iter().copied().collect();
            classification_accuracy(&scores, &te.labels())
        }),
    };
    match evaluated {
        Ok(v) => row.metric_value = v,
        Err(e) => row.failure = Some(format!("evaluation: {e}")),
    }
    Ok(row)
}

/// Runs every activation `spec.runs` times with seeds `base_seed + run`
/// (runs numbered from 1). Only the training call is timed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<BenchReport> {
    spec.validate()?;
    let data = match &spec.data {
        DataSource::Synthetic { n, random_x: false } => Prepared::Synthetic(gen_quadratic(*n)?),
        DataSource::Synthetic { n, random_x: true } => {
            Prepared::Synthetic(gen_quadratic_random(*n, spec.base_seed)?)
        }
        DataSource::Heart { path } => Prepared::Heart(load_heart(path)?),
    };

    let jobs: Vec<(&ActivationKind, usize)> = spec
        .activations
        .iter()
        .flat_map(|k| (1..=spec.runs).map(move |r| (k, r)))
        .collect();

    let rows: Vec<BenchRow> = if spec.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|&(kind, run)| {
                    let data = &data;
                    scope.spawn(move || run_once(spec, data, kind, run))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("benchmark worker panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        let mut rows = Vec::with_capacity(jobs.len());
        for (kind, run) in jobs {
            let row = run_once(spec, &data, kind, run)?;
            info!(
                "{} run {}: {:.4} s, {} = {}",
                row.activation,
                row.run,
                row.runtime_s,
                row.metric.name(),
                row.metric_value
            );
            rows.push(row);
        }
        rows
    };
    Ok(BenchReport::from_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvePreset {
    /// `[-10, 10]` in steps of 0.01.
    WithinRange,
    /// `[-1000, 1000]` in steps of 1.
    Exploding,
}

impl CurvePreset {
    pub fn range(&self) -> (f64, f64, f64) {
        match self {
            CurvePreset::WithinRange => (-10.0, 10.0, 0.01),
            CurvePreset::Exploding => (-1000.0, 1000.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub value: f64,
    pub gradient: f64,
}

/// Samples `kind` on `lo, lo + step, ..` up to and including `hi`.
/// The sweep is activated as one batch.
pub fn curve_points(kind: &ActivationKind, lo: f64, hi: f64, step: f64) -> Result<Vec<CurvePoint>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParam(format!("curve range needs lo < hi, got [{lo}, {hi}]")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParam(format!("curve step must be > 0, got {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let xs: Vec<f64> = (0..count).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let out = activate(kind, &xs)?;
    Ok(xs
        .into_iter()
        .zip(out.values)
        .zip(out.gradients)
        .map(|((x, value), gradient)| CurvePoint { x, value, gradient })
        .collect())
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("x,value,gradient\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", p.x, p.value, p.gradient);
    }
    s
}

pub fn dump_curves(
    kind: &ActivationKind,
    lo: f64,
    hi: f64,
    step: f64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let points = curve_points(kind, lo, hi, step)?;
    let path = path.as_ref();
    std::fs::write(path, curves_csv(&points))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxBench {
    pub ns_per_op_rnf: f64,
    pub ns_per_op_ref: f64,
    pub max_rel_err: f64,
}

/// Times `count` evaluations of [`rnf_exp`] and of `f64::exp` over an even
/// sweep of `[lo, hi]`, then measures the worst relative error on the same sweep.
pub fn approx_bench(count: usize, lo: f64, hi: f64, params: RnfParams) -> Result<ApproxBench> {
    if count == 0 {
        return Err(Error::InvalidParam("count must be >= 1".into()));
    }
    if !(lo <= hi) {
        return Err(Error::InvalidParam(format!("range needs lo <= hi, got [{lo}, {hi}]")));
    }
    // the approximation is monotone, so the endpoints bound the domain check
    rnf_exp(lo, params)?;
    rnf_exp(hi, params)?;

    let xs: Vec<f64> = if count == 1 {
        vec![lo]
    } else {
        let step = (hi - lo) / (count - 1) as f64;
        (0..count).map(|i| lo + i as f64 * step).collect()
    };

    let start = Instant::now();
    let mut acc = 0.0;
    for &x in &xs {
        acc += rnf_exp(black_box(x), params)?;
    }
    black_box(acc);
    let rnf_ns = start.elapsed().as_nanos() as f64;

    let start = Instant::now();
    let mut acc = 0.0;
    for &x in &xs {
        acc += black_box(x).exp();
    }
    black_box(acc);
    let ref_ns = start.elapsed().as_nanos() as f64;

    let mut max_rel_err = 0.0f64;
    for &x in &xs {
        let reference = x.exp();
        let rel = ((rnf_exp(x, params)? - reference) / reference).abs();
        max_rel_err = max_rel_err.max(rel);
    }
    Ok(ApproxBench {
        ns_per_op_rnf: rnf_ns / count as f64,
        ns_per_op_ref: ref_ns / count as f64,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(run: usize, act: &str, runtime: f64, value: f64) -> BenchRow {
        BenchRow {
            run,
            activation: act.into(),
            runtime_s: runtime,
            metric: Metric::Mse,
            metric_value: value,
            failure: None,
        }
    }

    #[test]
    fn averages_are_means() {
        let r = BenchReport::from_rows(vec![row(1, "htan", 1.0, 4.0), row(2, "htan", 3.0, 6.0)]);
        assert_eq!(r.averages.len(), 1);
        assert_eq!(r.averages[0].metric_value, 5.0);
        assert_eq!(r.averages[0].runtime_s, 2.0);

        let one = BenchReport::from_rows(vec![row(1, "elu", 0.5, 0.25)]);
        assert_eq!(one.averages[0].metric_value, 0.25);
        assert_eq!(one.averages[0].runtime_s, 0.5);
    }

    #[test]
    fn stalled_rows_excluded_from_average() {
        let mut bad = row(2, "htan", 9.0, f64::NAN);
        bad.failure = Some("epoch 3: non-finite".into());
        let r = BenchReport::from_rows(vec![row(1, "htan", 1.0, 4.0), bad]);
        assert_eq!(r.averages[0].metric_value, 4.0);
        assert_eq!(r.averages[0].completed, 1);
        assert_eq!(r.stall_count(), 1);
        let md = r.to_markdown();
        assert!(md.contains("| 2 | stall |"), "{md}");
        assert!(md.contains("Stalled runs"));
    }

    #[test]
    fn csv_shapes() {
        let empty = BenchReport::from_rows(Vec::new());
        assert_eq!(empty.to_csv(), "run,activation,runtime_s,metric_name,metric_value\n");
        let one = BenchReport::from_rows(vec![row(1, "htan", 0.5, 0.25)]);
        let csv = one.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "1,htan,0.5,mse,0.25");
        assert_eq!(lines[2], "AVERAGE,htan,0.5,mse,0.25");
    }

    #[test]
    fn markdown_layout() {
        let mut rows = Vec::new();
        for act in ["htan", "elu", "modhtan"] {
            for run in 1..=10 {
                rows.push(row(run, act, run as f64, 0.01 * run as f64));
            }
        }
        let md = BenchReport::from_rows(rows).to_markdown();
        assert!(md.contains("| Run | HTAN | ELU | MODHTAN |"));
        // each table: header + separator + 10 runs + AVERAGE
        let body_rows = md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Run")).count();
        assert_eq!(body_rows, 2 * 11);
        assert!(md.contains("| AVERAGE | 5.5000 | 5.5000 | 5.5000 |"));
    }

    #[test]
    fn runtime_ordering_text() {
        let r = BenchReport::from_rows(vec![row(1, "htan", 3.0, 0.0), row(1, "modhtan", 1.0, 0.0)]);
        let s = r.runtime_ordering();
        assert!(s.find("MODHTAN").unwrap() < s.find("HTAN (").unwrap(), "{s}");
    }

    #[test]
    fn curves_inclusive_sampling() {
        let pts = curve_points(&ActivationKind::Htan, -1.0, 1.0, 1.0).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        assert_eq!(pts[1].value, 0.0);
        assert!(curve_points(&ActivationKind::Htan, 1.0, -1.0, 1.0).is_err());
        assert!(curve_points(&ActivationKind::Htan, -1.0, 1.0, 0.0).is_err());

        let (lo, hi, step) = CurvePreset::WithinRange.range();
        assert_eq!(curve_points(&ActivationKind::Htan, lo, hi, step).unwrap().len(), 2001);
    }

    #[test]
    fn exploding_presets_stay_bounded() {
        let (lo, hi, step) = CurvePreset::Exploding.range();
        let soft = curve_points(&ActivationKind::SoftStep, lo, hi, step).unwrap();
        assert_eq!(soft.len(), 2001);
        assert!(soft.iter().all(|p| p.value > 0.0 || p.x < -700.0));
        assert!(soft.iter().all(|p| p.value <= 1.0));
        assert_eq!(soft.last().unwrap().value, 1.0);

        let m = curve_points(&ActivationKind::ModHtan(Default::default()), lo, hi, step).unwrap();
        assert!(m.iter().all(|p| p.value.is_finite() && p.value.abs() < 1.0));
    }

    #[test]
    fn approx_bench_fields() {
        let b = approx_bench(1, 0.0, 0.0, RnfParams::default()).unwrap();
        assert_eq!(b.max_rel_err, 0.0);
        assert!(b.ns_per_op_rnf > 0.0 && b.ns_per_op_ref > 0.0);

        let b = approx_bench(10_000, -20.0, 20.0, RnfParams::default()).unwrap();
        assert!(b.max_rel_err <= 5e-5);
        assert!(approx_bench(10, 0.0, 1e8, RnfParams::default()).is_err());
        assert!(approx_bench(0, 0.0, 1.0, RnfParams::default()).is_err());
    }

    #[test]
    fn experiment_validation() {
        let mut spec = ExperimentSpec::new(
            DataSource::Synthetic { n: 10, random_x: false },
            vec![ActivationKind::Htan],
        );
        spec.runs = 0;
        assert!(run_experiment(&spec).is_err());
        spec.runs = 1;
        spec.activations.clear();
        assert!(run_experiment(&spec).is_err());
    }

    #[test]
    fn single_run_report() {
        let mut spec = ExperimentSpec::new(
            DataSource::Synthetic { n: 50, random_x: false },
            vec![ActivationKind::Htan],
        );
        spec.runs = 1;
        spec.trainer = TrainerChoice::Lm(LmConfig { epochs: 20, ..Default::default() });
        let r = run_experiment(&spec).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.averages[0].metric_value, r.rows[0].metric_value);
        assert!(r.rows[0].runtime_s > 0.0);
    }

    #[test]
    fn parallel_matches_sequential_metrics() {
        let mut spec = ExperimentSpec::new(
            DataSource::Synthetic { n: 40, random_x: false },
            vec![ActivationKind::Htan, ActivationKind::Elu(Default::default())],
        );
        spec.runs = 3;
        spec.trainer = TrainerChoice::Lm(LmConfig { epochs: 15, ..Default::default() });
        let seq = run_experiment(&spec).unwrap();
        spec.parallel = true;
        let par = run_experiment(&spec).unwrap();
        let metrics = |r: &BenchReport| r.rows.iter().map(|x| (x.run, x.activation.clone(), x.metric_value)).collect::<Vec<_>>();
        assert_eq!(metrics(&seq), metrics(&par));
        assert!(par.rows.iter().all(|r| r.runtime_s == 0.0));
    }
}
