//! Monte Carlo harness: rate sweeps with log-log slope fits, runtime
//! scaling, the two-point likelihood-ratio experiment and the subsampling
//! degradation demo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::densities::{sample_with, Density, DensitySpec, Member, TwoPointPair};
use crate::error::{Error, Result};
use crate::estimators::{theoretical_bandwidth, EstimatorSpec, ModeEstimator, SubsampleRule, Subsampled};
use crate::lattice::{sup_dist, Point, PointSet};

/// One Monte Carlo sweep over sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub density: DensitySpec,
    pub estimator: EstimatorSpec,
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Multipliers `t` of the rate `n^(-1/(d + 2 beta))` at which tail
    /// frequencies are reported.
    #[serde(default = "default_radii")]
    pub radius_multipliers: Vec<f64>,
    /// Translate each trial's sample (and the true mode) by an independent
    /// uniform offset in `[0, 1)^d`, so the grid phase relative to the mode
    /// is random rather than tied to `n`.
    #[serde(default = "yes")]
    pub random_shift: bool,
}

fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

fn yes() -> bool {
    true
}

pub const MIN_SWEEP_SIZES: usize = 4;
pub const MIN_TAIL_REPS: usize = 100;

impl ExperimentConfig {
    pub fn new(density: DensitySpec, estimator: EstimatorSpec, sample_sizes: Vec<usize>, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            density,
            estimator,
            sample_sizes,
            reps,
            seed,
            radius_multipliers: default_radii(),
            random_shift: true,
        }
    }

    /// Checks what every run needs.
    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        self.estimator.validate()?;
        if self.reps == 0 {
            return Err(Error::invalid("reps must be ≥ 1"));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::invalid("at least one sample size required"));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sample sizes must be strictly increasing"));
        }
        if self.radius_multipliers.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::invalid("radius multipliers must be positive"));
        }
        Ok(())
    }

    /// Additionally checks the sweep shape needed for an error-rate slope
    /// fit: at least four sizes spanning two decades.
    pub fn validate_sweep(&self) -> Result<()> {
        self.validate_span(100.0)
    }

    /// Sweep shape for a runtime fit: at least four sizes spanning one decade.
    pub fn validate_timing(&self) -> Result<()> {
        self.validate_span(10.0)
    }

    fn validate_span(&self, ratio: f64) -> Result<()> {
        self.validate()?;
        if self.sample_sizes.len() < MIN_SWEEP_SIZES {
            return Err(Error::invalid("at least 4 sample sizes required"));
        }
        let (lo, hi) = (self.sample_sizes[0], *self.sample_sizes.last().unwrap());
        if (hi as f64) < ratio * lo as f64 {
            return Err(Error::invalid(format!(
                "sample sizes must span a factor of at least {ratio}, got {lo}..{hi}"
            )));
        }
        Ok(())
    }

    fn rate_exponent(&self) -> f64 {
        -1.0 / (self.density.dim() as f64 + 2.0 * self.density.beta())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub n: usize,
    pub rep: usize,
    pub error: f64,
    pub time_s: f64,
    pub estimate: Vec<f64>,
    pub mode: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub median_error: f64,
    pub q90_error: f64,
    pub median_time_s: f64,
    /// `(t, frequency of error > t n^(-1/(d + 2 beta)))`; empty below
    /// [`MIN_TAIL_REPS`] repetitions.
    pub tail: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// `hypot(residual_stderr, sampling_stderr)`.
    pub stderr: f64,
    /// Ordinary least-squares standard error from the fit residuals.
    pub residual_stderr: f64,
    /// Standard error propagated from the bootstrap variance of each
    /// ordinate; zero when the ordinates are taken as exact.
    pub sampling_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub estimator: String,
    pub seed: u64,
    pub version: String,
    /// `-1/(d + 2 beta)` for the configured density.
    pub reference_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub metadata: Metadata,
    pub summaries: Vec<SizeSummary>,
    pub slope: Option<SlopeFit>,
    /// Why `slope` is absent, when it is.
    pub slope_error: Option<String>,
    pub trials: Vec<Trial>,
}

impl ExperimentReport {
    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> ExperimentReport {
        let mut r = self.clone();
        r.trials.iter_mut().for_each(|t| t.time_s = 0.0);
        r.summaries.iter_mut().for_each(|s| s.median_time_s = 0.0);
        r
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.summaries.iter().map(|s| s.n).collect()
    }

    pub fn median_errors(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.median_error).collect()
    }

    pub fn median_times(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.median_time_s).collect()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `(n, rep)`; independent of scheduling.
pub fn trial_seed(seed: u64, n: usize, rep: usize) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ n as u64) ^ rep as u64)
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

/// Runs `work` over all items with at most `workers` threads, preserving order.
fn for_each_ordered<I, T, F>(items: &[I], workers: usize, work: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers != 1 {
        use rayon::prelude::*;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if workers > 1 {
            builder = builder.num_threads(workers);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        return pool.install(|| items.par_iter().map(&work).collect());
    }
    let _ = workers;
    items.iter().map(work).collect()
}

/// Draws one trial's sample. Returns the (possibly shifted) sample and mode.
fn draw_trial(density: &dyn Density, n: usize, seed: u64, shift: bool) -> Result<(PointSet, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = density.dim();
    let offset: Vec<f64> = if shift {
        (0..d).map(|_| rng.random::<f64>()).collect()
    } else {
        vec![0.0; d]
    };
    let points = sample_with(density, n, &mut rng);
    let mode: Vec<f64> = density.mode().iter().zip(&offset).map(|(m, o)| m + o).collect();
    let points = if shift { points.translated(&offset)? } else { points };
    Ok((points, mode))
}

/// Runs the configured estimator over the sweep.
pub fn run_trials(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentReport> {
    run_trials_with(cfg, &cfg.estimator, cfg.estimator.label(), workers)
}

/// Runs an arbitrary estimator over the sweep described by `cfg`; the
/// configured estimator spec is ignored apart from being echoed.
pub fn run_trials_with(
    cfg: &ExperimentConfig,
    estimator: &dyn ModeEstimator,
    label: &str,
    workers: usize,
) -> Result<ExperimentReport> {
    let mut reports = run_trials_many(cfg, &[(label, estimator)], workers)?;
    Ok(reports.remove(0))
}

/// Runs several estimators on the very same samples. One report per
/// estimator, in input order.
pub fn run_trials_many(
    cfg: &ExperimentConfig,
    estimators: &[(&str, &dyn ModeEstimator)],
    workers: usize,
) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    let density = cfg.density.build()?;
    let density = density.as_ref();
    let jobs: Vec<(usize, usize)> = cfg
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();

    let outcomes = for_each_ordered(&jobs, workers, |&(n, rep)| {
        let (points, mode) = draw_trial(density, n, trial_seed(cfg.seed, n, rep), cfg.random_shift)?;
        estimators
            .iter()
            .map(|(_, est)| {
                let (estimate, time_s) = timed(|| est.estimate(&points));
                let estimate = estimate?;
                Ok(Trial {
                    n,
                    rep,
                    error: sup_dist(estimate.coords(), &mode)?,
                    time_s,
                    estimate: estimate.into_vec(),
                    mode: mode.clone(),
                })
            })
            .collect::<Result<Vec<Trial>>>()
    })?;

    Ok(estimators
        .iter()
        .enumerate()
        .map(|(j, (label, _))| {
            let trials: Vec<Trial> = outcomes.iter().map(|row| row[j].clone()).collect();
            assemble(cfg, label, trials)
        })
        .collect())
}

fn assemble(cfg: &ExperimentConfig, label: &str, trials: Vec<Trial>) -> ExperimentReport {
    let exponent = cfg.rate_exponent();
    let summaries: Vec<SizeSummary> = cfg
        .sample_sizes
        .iter()
        .map(|&n| {
            let rows: Vec<&Trial> = trials.iter().filter(|t| t.n == n).collect();
            let errors: Vec<f64> = rows.iter().map(|t| t.error).collect();
            let times: Vec<f64> = rows.iter().map(|t| t.time_s).collect();
            let tail = if rows.len() >= MIN_TAIL_REPS {
                let scale = (n as f64).powf(exponent);
                cfg.radius_multipliers
                    .iter()
                    .map(|&t| (t, exceedance(&errors, t * scale)))
                    .collect()
            } else {
                Vec::new()
            };
            SizeSummary {
                n,
                median_error: quantile(&errors, 0.5),
                q90_error: quantile(&errors, 0.9),
                median_time_s: quantile(&times, 0.5),
                tail,
            }
        })
        .collect();
    let mut report = ExperimentReport {
        config: cfg.clone(),
        metadata: Metadata {
            estimator: label.to_string(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            reference_slope: exponent,
        },
        summaries,
        slope: None,
        slope_error: None,
        trials,
    };
    match fit_rate_slope(&report) {
        Ok(fit) => report.slope = Some(fit),
        Err(e) => report.slope_error = Some(e.to_string()),
    }
    report
}

/// Linear-interpolation quantile of the empirical distribution.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

/// Fraction of `values` strictly above `threshold`.
pub fn exceedance(values: &[f64], threshold: f64) -> f64 {
    values.iter().filter(|&&v| v > threshold).count() as f64 / values.len() as f64
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("fit inputs differ in length"));
    }
    if xs.len() < 3 {
        return Err(Error::invalid("a slope fit needs at least 3 points"));
    }
    if ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::Degenerate);
    }
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("abscissae must be positive"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("abscissae must not all be equal"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        residual_stderr: stderr,
        sampling_stderr: 0.0,
    })
}

fn check_fit_sizes(report: &ExperimentReport) -> Result<Vec<f64>> {
    if report.summaries.len() < MIN_SWEEP_SIZES {
        return Err(Error::invalid("at least 4 sample sizes required"));
    }
    Ok(report.sizes().iter().map(|&n| n as f64).collect())
}

/// Bootstrap resamples per sample size in [`fit_rate_slope`].
pub const BOOTSTRAP_RESAMPLES: usize = 400;

/// Slope of log median error against log n. The standard error combines
/// the residual scatter with the Monte Carlo noise of each median,
/// estimated by a seeded bootstrap over repetitions.
pub fn fit_rate_slope(report: &ExperimentReport) -> Result<SlopeFit> {
    let ns = check_fit_sizes(report)?;
    let mut fit = fit_loglog(&ns, &report.median_errors())?;

    let lx: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let mean = lx.iter().sum::<f64>() / lx.len() as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mean).powi(2)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(report.metadata.seed ^ 0xB007));
    let mut variance = 0.0;
    for (summary, x) in report.summaries.iter().zip(&lx) {
        let errors: Vec<f64> = report
            .trials
            .iter()
            .filter(|t| t.n == summary.n)
            .map(|t| t.error)
            .collect();
        let var_log_median = bootstrap_log_median_variance(&errors, &mut rng)?;
        variance += ((x - mean) / sxx).powi(2) * var_log_median;
    }
    fit.sampling_stderr = variance.sqrt();
    fit.stderr = fit.residual_stderr.hypot(fit.sampling_stderr);
    Ok(fit)
}

fn bootstrap_log_median_variance(errors: &[f64], rng: &mut ChaCha8Rng) -> Result<f64> {
    if errors.len() < 2 {
        return Ok(0.0);
    }
    let mut resample = vec![0.0; errors.len()];
    let mut logs = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for slot in resample.iter_mut() {
            *slot = errors[rng.random_range(0..errors.len())];
        }
        let m = quantile(&resample, 0.5);
        if !(m > 0.0) {
            return Err(Error::Degenerate);
        }
        logs.push(m.ln());
    }
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (logs.len() - 1) as f64)
}

/// Slope of log median wall time against log n.
pub fn runtime_scaling(report: &ExperimentReport) -> Result<SlopeFit> {
    let ns = check_fit_sizes(report)?;
    fit_loglog(&ns, &report.median_times())
}

/// Fixed per-call cost of the harness, measured against the estimator at
/// the smallest sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub overhead_s: f64,
    pub smallest_median_s: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub report: ExperimentReport,
    pub fit: SlopeFit,
    pub calibration: Calibration,
}

pub const MAX_OVERHEAD_RATIO: f64 = 0.05;

/// Sequential timing sweep. Fails if the harness overhead exceeds
/// [`MAX_OVERHEAD_RATIO`] of the estimator time at the smallest n.
pub fn runtime_sweep(cfg: &ExperimentConfig) -> Result<RuntimeReport> {
    cfg.validate_timing()?;
    let report = run_trials(cfg, 1)?;
    let calibration = calibrate(cfg, &report)?;
    if calibration.ratio > MAX_OVERHEAD_RATIO {
        return Err(Error::invalid(format!(
            "per-call overhead is {:.1}% of the smallest-n runtime; raise the smallest sample size",
            100.0 * calibration.ratio
        )));
    }
    let fit = runtime_scaling(&report)?;
    Ok(RuntimeReport { report, fit, calibration })
}

fn calibrate(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<Calibration> {
    let n = cfg.sample_sizes[0];
    let density = cfg.density.build()?;
    let (points, _) = draw_trial(density.as_ref(), n, trial_seed(cfg.seed, n, 0), false)?;
    let trivial = |p: &PointSet| Point::new(p.point(0).to_vec());
    let times: Vec<f64> = (0..cfg.reps.max(5))
        .map(|_| timed(|| std::hint::black_box(trivial(std::hint::black_box(&points)))).1)
        .collect();
    let overhead_s = quantile(&times, 0.5);
    let smallest_median_s = report.summaries[0].median_time_s;
    Ok(Calibration {
        overhead_s,
        smallest_median_s,
        ratio: if smallest_median_s > 0.0 { overhead_s / smallest_median_s } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointOutcome {
    pub n: usize,
    pub h: f64,
    pub reps: usize,
    pub mistakes: usize,
    pub error_rate: f64,
    /// Whether the test erred, per repetition.
    pub wrong: Vec<bool>,
    /// `n chi^2(f2, f1)`.
    pub n_chi_squared: f64,
}

/// Bayes error of the exact likelihood-ratio test between `f1` and `f2`
/// under a fair prior, estimated from `reps` coin flips with `n` draws each.
/// Ties are broken by a fair coin.
pub fn two_point_experiment(pair: &TwoPointPair, n: usize, reps: usize, seed: u64) -> Result<TwoPointOutcome> {
    if reps == 0 {
        return Err(Error::invalid("reps must be ≥ 1"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let f1 = pair.member(Member::F1);
    let f2 = pair.member(Member::F2);
    let reps_idx: Vec<usize> = (0..reps).collect();
    let wrong = for_each_ordered(&reps_idx, 0, |&rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, n, rep));
        let truth_is_f2 = rng.random::<bool>();
        let points = if truth_is_f2 {
            sample_with(&f2, n, &mut rng)
        } else {
            sample_with(&f1, n, &mut rng)
        };
        let llr = pair.log_likelihood_ratio(points.iter());
        let say_f2 = if llr == 0.0 { rng.random::<bool>() } else { llr > 0.0 };
        Ok(say_f2 != truth_is_f2)
    })?;
    let mistakes = wrong.iter().filter(|&&w| w).count();
    Ok(TwoPointOutcome {
        n,
        h: pair.h(),
        reps,
        mistakes,
        error_rate: mistakes as f64 / reps as f64,
        n_chi_squared: n as f64 * pair.chi_squared(),
        wrong,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointRow {
    pub c: f64,
    #[serde(flatten)]
    pub outcome: TwoPointOutcome,
}

/// Error probability over a grid of separation constants `c`, with
/// `h = c n^(-1/(d + 2 beta))` at each `n`.
pub fn two_point_sweep(
    dim: usize,
    beta: f64,
    h0: f64,
    cs: &[f64],
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<TwoPointRow>> {
    let mut rows = Vec::with_capacity(cs.len() * sizes.len());
    for &c in cs {
        for &n in sizes {
            let h = theoretical_bandwidth(n as u64, dim, beta, c)?;
            let pair = TwoPointPair::new(dim, beta, h0, h)?;
            let outcome = two_point_experiment(&pair, n, reps, splitmix(seed ^ c.to_bits()))?;
            rows.push(TwoPointRow { c, outcome });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublinearReport {
    pub gamma: f64,
    pub full: ExperimentReport,
    pub subsampled: ExperimentReport,
    /// `(full slope - subsampled slope) / sqrt(se_full^2 + se_sub^2)`.
    pub gap_z: Option<f64>,
}

/// Runs the configured estimator on the full sample and on its first
/// `floor(n^gamma)` points, using the same draws for both.
pub fn sublinear_demo(cfg: &ExperimentConfig, gamma: f64, workers: usize) -> Result<SublinearReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("subsample exponent must lie in (0, 1], got {gamma}")));
    }
    let sub = Subsampled {
        inner: cfg.estimator,
        rule: SubsampleRule::Power(gamma),
    };
    let label = format!("{}-subsampled", cfg.estimator.label());
    let mut reports = run_trials_many(
        cfg,
        &[(cfg.estimator.label(), &cfg.estimator), (label.as_str(), &sub)],
        workers,
    )?;
    let subsampled = reports.pop().unwrap();
    let full = reports.pop().unwrap();
    let gap_z = match (full.slope, subsampled.slope) {
        (Some(a), Some(b)) => Some((a.slope - b.slope) / a.stderr.hypot(b.stderr)),
        _ => None,
    };
    Ok(SublinearReport { gamma, full, subsampled, gap_z })
}
