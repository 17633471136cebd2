use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use histmode::densities::{sample, DensitySpec};
use histmode::estimators::{multi_mode_trace, MultiTrace};
use histmode::experiments::{
    run_trials, runtime_sweep, sublinear_demo, two_point_sweep, ExperimentReport, TwoPointRow,
};
use histmode::{mono_mode, theoretical_bandwidth, MonoParams, MultiParams, Normalization};

use crate::config::{parse_experiment, Experiment, TwoPointConfig};
use crate::points::{format_points, parse_points};
use crate::{sig6, CliError};

#[derive(Debug, Parser)]
#[command(name = "histmode", version, about = "Histogram-based global mode estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the mode of a point file.
    Estimate(EstimateArgs),
    /// Draw seeded samples from a test-bed density.
    Sample(SampleArgs),
    /// Run a Monte Carlo experiment described by a TOML file.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Mono,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    Auto,
    UnitCube,
    Identity,
}

impl From<NormalizeArg> for Normalization {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::Auto => Normalization::Auto,
            NormalizeArg::UnitCube => Normalization::UnitCube,
            NormalizeArg::Identity => Normalization::Identity,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Point file: one point per row, comma or whitespace separated.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Bin width for `mono`.
    #[arg(long, conflicts_with = "auto_h")]
    pub h: Option<f64>,
    /// Use h = c n^(-1/(d + 2 beta)) for `mono`; needs --beta.
    #[arg(long)]
    pub auto_h: bool,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Scale multiplier for `multi`.
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
    /// Neighbourhood margin for `multi`, in bins.
    #[arg(long, default_value_t = 2)]
    pub kappa: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub normalize: NormalizeArg,
    /// Also write a JSON result file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    PowerPeak,
    F1,
    F2,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Dimension; defaults to the length of --mode, else 1.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub h0: f64,
    /// Mode of a power-peak density, comma separated; a single value is
    /// repeated along every axis.
    #[arg(long)]
    pub mode: Option<String>,
    /// Peak value of a power-peak density.
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    /// Perturbation width of the f2 density.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output point file; standard output if absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads; 0 means one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving report.json and trials.csv.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub estimate: Vec<f64>,
    pub algo: &'static str,
    pub n: usize,
    pub d: usize,
    pub time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<MultiTrace>,
}

/// Writes each `(path, contents)` through a temporary file in the same
/// directory, persisting only once every file has been written.
fn write_all_or_nothing(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Data(format!("{}: {e}", p.display()));
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(path, e))?;
        tmp.write_all(bytes).map_err(|e| io(path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| io(path, e.error))?;
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn estimate(args: &EstimateArgs) -> Result<RunResult, CliError> {
    let mono_h = match (args.algo, args.h, args.auto_h, args.beta) {
        (Algo::Mono, Some(_), true, _) => unreachable!("clap rejects --h with --auto-h"),
        (Algo::Mono, None, true, None) => {
            return Err(CliError::Usage("--auto-h needs --beta".into()))
        }
        (Algo::Mono, None, false, _) => {
            return Err(CliError::Usage("mono needs --h or --auto-h with --beta".into()))
        }
        (Algo::Multi, Some(_), _, _) | (Algo::Multi, _, true, _) => {
            return Err(CliError::Usage("--h and --auto-h apply to mono only".into()))
        }
        (Algo::Mono, Some(h), false, _) => Some(Ok(h)),
        (Algo::Mono, None, true, Some(beta)) => Some(Err(beta)),
        (Algo::Multi, None, false, _) => None,
    };
    let points = parse_points(&args.input)?;
    let (n, d) = (points.len(), points.dim());

    match mono_h {
        Some(spec) => {
            let h = match spec {
                Ok(h) => h,
                Err(beta) => theoretical_bandwidth(n as u64, d, beta, args.c).map_err(CliError::from_flags)?,
            };
            let params = MonoParams::new(h).map_err(CliError::from_flags)?;
            let start = Instant::now();
            let estimate = mono_mode(&points, &params).map_err(CliError::from_data)?;
            Ok(RunResult {
                estimate: estimate.into_vec(),
                algo: "mono",
                n,
                d,
                time_s: start.elapsed().as_secs_f64(),
                h: Some(h),
                b: None,
                kappa: None,
                trace: None,
            })
        }
        None => {
            let params = MultiParams::new(args.b, args.kappa)
                .map_err(CliError::from_flags)?
                .with_normalization(args.normalize.into());
            let start = Instant::now();
            let trace = multi_mode_trace(&points, &params).map_err(CliError::from_data)?;
            Ok(RunResult {
                estimate: trace.estimate.coords().to_vec(),
                algo: "multi",
                n,
                d,
                time_s: start.elapsed().as_secs_f64(),
                h: None,
                b: Some(args.b),
                kappa: Some(args.kappa),
                trace: Some(trace),
            })
        }
    }
}

/// Estimate formatted with shortest round-trip decimals, comma separated.
pub fn format_estimate(estimate: &[f64]) -> String {
    estimate.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<String, CliError> {
    let result = estimate(args)?;
    if let Some(path) = &args.output {
        write_all_or_nothing(&[(path.clone(), to_json(&result)?)])?;
    }
    Ok(format_estimate(&result.estimate))
}

fn parse_mode(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--mode: not a number: {s:?}")))
        })
        .collect()
}

pub fn density_from_flags(args: &SampleArgs) -> Result<DensitySpec, CliError> {
    let need_h = |h: Option<f64>| h.ok_or_else(|| CliError::Usage("f2 needs --h".into()));
    let spec = match args.family {
        Family::PowerPeak => {
            let given = args.mode.as_deref().map(parse_mode).transpose()?;
            let d = args.d.or(given.as_ref().map(Vec::len)).unwrap_or(1);
            let mode = match given {
                None => vec![0.0; d],
                Some(m) if m.len() == 1 => vec![m[0]; d],
                Some(m) if m.len() == d => m,
                Some(m) => {
                    return Err(CliError::Usage(format!("--mode has {} values but --d is {d}", m.len())))
                }
            };
            if args.h.is_some() {
                return Err(CliError::Usage("--h applies to f2 only".into()));
            }
            DensitySpec::PowerPeak {
                beta: args.beta,
                h0: args.h0,
                mode,
                peak_value: args.peak,
                variation: None,
            }
        }
        Family::F1 | Family::F2 => {
            if args.mode.is_some() {
                return Err(CliError::Usage("f1 and f2 have their mode fixed near the origin; drop --mode".into()));
            }
            let dim = args.d.unwrap_or(1);
            if args.family == Family::F1 {
                if args.h.is_some() {
                    return Err(CliError::Usage("--h applies to f2 only".into()));
                }
                DensitySpec::F1 { dim, beta: args.beta, h0: args.h0 }
            } else {
                DensitySpec::F2 { dim, beta: args.beta, h0: args.h0, h: need_h(args.h)? }
            }
        }
    };
    spec.validate()
        .map_err(|e| CliError::Usage(format!("invalid density: {e}")))?;
    Ok(spec)
}

pub fn cmd_sample(args: &SampleArgs) -> Result<Option<String>, CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let spec = density_from_flags(args)?;
    let density = spec.build().map_err(CliError::from_flags)?;
    let text = format_points(&sample(density.as_ref(), args.n, args.seed));
    match &args.output {
        Some(path) => {
            write_all_or_nothing(&[(path.clone(), text.into_bytes())])?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

#[derive(Serialize)]
struct TableRow<'a> {
    series: &'a str,
    n: usize,
    rep: usize,
    error: f64,
    time_s: f64,
}

fn table(rows: impl IntoIterator<Item = (String, usize, usize, f64, f64)>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (series, n, rep, error, time_s) in rows {
        w.serialize(TableRow { series: &series, n, rep, error, time_s })
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

fn trial_rows(report: &ExperimentReport) -> Vec<(String, usize, usize, f64, f64)> {
    report
        .trials
        .iter()
        .map(|t| (report.metadata.estimator.clone(), t.n, t.rep, t.error, t.time_s))
        .collect()
}

fn summarize(report: &ExperimentReport) -> String {
    let mut out = format!("{}:\n", report.metadata.estimator);
    for s in &report.summaries {
        out.push_str(&format!(
            "  n={} median={} q90={} time={}s",
            s.n,
            sig6(s.median_error),
            sig6(s.q90_error),
            sig6(s.median_time_s)
        ));
        if !s.tail.is_empty() {
            let tail: Vec<String> = s.tail.iter().map(|(t, f)| format!("t={}:{}", sig6(*t), sig6(*f))).collect();
            out.push_str(&format!(" tail[{}]", tail.join(" ")));
        }
        out.push('\n');
    }
    match (&report.slope, &report.slope_error) {
        (Some(f), _) => out.push_str(&format!(
            "  slope={} se={} reference={}\n",
            sig6(f.slope),
            sig6(f.stderr),
            sig6(report.metadata.reference_slope)
        )),
        (None, Some(e)) => out.push_str(&format!("  slope unavailable: {e}\n")),
        _ => {}
    }
    out
}

#[derive(Serialize)]
struct TwoPointReport<'a> {
    kind: &'static str,
    dim: usize,
    beta: f64,
    h0: f64,
    seed: u64,
    reps: usize,
    version: &'static str,
    rows: &'a [TwoPointRow],
}

fn run_two_point(c: &TwoPointConfig, out_dir: &Path) -> Result<String, CliError> {
    let rows = two_point_sweep(c.dim, c.beta, c.h0, &c.c, &c.sample_sizes, c.reps, c.seed)
        .map_err(CliError::from_data)?;
    let report = TwoPointReport {
        kind: "two-point",
        dim: c.dim,
        beta: c.beta,
        h0: c.h0,
        seed: c.seed,
        reps: c.reps,
        version: env!("CARGO_PKG_VERSION"),
        rows: &rows,
    };
    let csv_rows = rows.iter().flat_map(|r| {
        let series = format!("c={}", r.c);
        r.outcome
            .wrong
            .iter()
            .enumerate()
            .map(move |(rep, &w)| (series.clone(), r.outcome.n, rep, f64::from(u8::from(w)), 0.0))
    });
    write_all_or_nothing(&[
        (out_dir.join("report.json"), to_json(&report)?),
        (out_dir.join("trials.csv"), table(csv_rows)?),
    ])?;
    let mut out = String::from("two-point likelihood-ratio error:\n");
    for r in &rows {
        out.push_str(&format!(
            "  c={} n={} h={} error={} n*chi2={}\n",
            sig6(r.c),
            r.outcome.n,
            sig6(r.outcome.h),
            sig6(r.outcome.error_rate),
            sig6(r.outcome.n_chi_squared)
        ));
    }
    Ok(out)
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<String, CliError> {
    let origin = args.config.display().to_string();
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Data(format!("{origin}: {e}")))?;
    let mut file = parse_experiment(&text, &origin)?;
    if let Some(seed) = args.seed {
        file.experiment.set_seed(seed);
    }
    file.experiment
        .validate()
        .map_err(|e| CliError::Data(format!("{origin}: {e}")))?;
    let workers = args.workers.or(file.workers).unwrap_or(0);
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out_dir.display())))?;
    let report_path = args.out_dir.join("report.json");
    let table_path = args.out_dir.join("trials.csv");

    match &file.experiment {
        Experiment::Rate(cfg) => {
            let report = run_trials(cfg, workers).map_err(CliError::from_data)?;
            write_all_or_nothing(&[
                (report_path, to_json(&report)?),
                (table_path, table(trial_rows(&report))?),
            ])?;
            Ok(summarize(&report))
        }
        Experiment::Runtime(cfg) => {
            let r = runtime_sweep(cfg).map_err(CliError::from_data)?;
            write_all_or_nothing(&[
                (report_path, to_json(&r)?),
                (table_path, table(trial_rows(&r.report))?),
            ])?;
            Ok(format!(
                "{}  time slope={} se={} overhead={}%\n",
                summarize(&r.report),
                sig6(r.fit.slope),
                sig6(r.fit.stderr),
                sig6(100.0 * r.calibration.ratio)
            ))
        }
        Experiment::Sublinear { config, gamma } => {
            let r = sublinear_demo(config, *gamma, workers).map_err(CliError::from_data)?;
            let rows = trial_rows(&r.full).into_iter().chain(trial_rows(&r.subsampled));
            write_all_or_nothing(&[(report_path, to_json(&r)?), (table_path, table(rows)?)])?;
            let gap = r.gap_z.map_or("unavailable".to_string(), sig6);
            Ok(format!("{}{}  gap={gap} combined se\n", summarize(&r.full), summarize(&r.subsampled)))
        }
        Experiment::TwoPoint(c) => run_two_point(c, &args.out_dir),
    }
}
