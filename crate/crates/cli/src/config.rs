//! Experiment configuration files (TOML).

use serde::Deserialize;

use histmode::densities::DensitySpec;
use histmode::estimators::EstimatorSpec;
use histmode::experiments::ExperimentConfig;

use crate::CliError;

pub const KINDS: [&str; 4] = ["rate", "runtime", "two-point", "sublinear"];

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Rate(ExperimentConfig),
    Runtime(ExperimentConfig),
    Sublinear { config: ExperimentConfig, gamma: f64 },
    TwoPoint(TwoPointConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFile {
    pub experiment: Experiment,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointConfig {
    pub dim: usize,
    pub beta: f64,
    pub h0: f64,
    /// Separation constants: `h = c n^(-1/(d + 2 beta))`.
    pub c: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Deserialize)]
struct KindOnly {
    kind: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    #[allow(dead_code)]
    kind: String,
    workers: Option<usize>,
    gamma: Option<f64>,
    seed: Option<u64>,
    density: DensitySpec,
    estimator: EstimatorSpec,
    sample_sizes: Vec<usize>,
    reps: usize,
    radius_multipliers: Option<Vec<f64>>,
    random_shift: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoPointFile {
    #[allow(dead_code)]
    kind: String,
    workers: Option<usize>,
    dim: usize,
    beta: f64,
    h0: f64,
    c: Vec<f64>,
    sample_sizes: Vec<usize>,
    reps: usize,
    #[serde(default)]
    seed: u64,
}

fn toml_error(origin: &str, e: toml::de::Error) -> CliError {
    CliError::Data(format!("{origin}: {}", e.to_string().trim_end().replace('\n', " ")))
}

pub fn parse_experiment(text: &str, origin: &str) -> Result<ExperimentFile, CliError> {
    let kind = toml::from_str::<KindOnly>(text)
        .map_err(|e| toml_error(origin, e))?
        .kind
        .ok_or_else(|| {
            CliError::Data(format!("{origin}: missing `kind` (one of {})", KINDS.join(", ")))
        })?;
    match kind.as_str() {
        "rate" | "runtime" | "sublinear" => {
            let f: SweepFile = toml::from_str(text).map_err(|e| toml_error(origin, e))?;
            let mut config = ExperimentConfig::new(f.density, f.estimator, f.sample_sizes, f.reps, f.seed.unwrap_or(0));
            if let Some(t) = f.radius_multipliers {
                config.radius_multipliers = t;
            }
            if let Some(s) = f.random_shift {
                config.random_shift = s;
            }
            let experiment = match (kind.as_str(), f.gamma) {
                ("sublinear", Some(gamma)) => Experiment::Sublinear { config, gamma },
                ("sublinear", None) => {
                    return Err(CliError::Data(format!("{origin}: sublinear experiments need `gamma`")))
                }
                (_, Some(_)) => {
                    return Err(CliError::Data(format!("{origin}: `gamma` only applies to kind = \"sublinear\"")))
                }
                ("rate", None) => Experiment::Rate(config),
                _ => Experiment::Runtime(config),
            };
            Ok(ExperimentFile { experiment, workers: f.workers })
        }
        "two-point" => {
            let f: TwoPointFile = toml::from_str(text).map_err(|e| toml_error(origin, e))?;
            Ok(ExperimentFile {
                experiment: Experiment::TwoPoint(TwoPointConfig {
                    dim: f.dim,
                    beta: f.beta,
                    h0: f.h0,
                    c: f.c,
                    sample_sizes: f.sample_sizes,
                    reps: f.reps,
                    seed: f.seed,
                }),
                workers: f.workers,
            })
        }
        other => Err(CliError::Data(format!(
            "{origin}: unknown experiment kind {other:?}; valid kinds: {}",
            KINDS.join(", ")
        ))),
    }
}

impl Experiment {
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Experiment::Rate(c) | Experiment::Runtime(c) | Experiment::Sublinear { config: c, .. } => c.seed = seed,
            Experiment::TwoPoint(c) => c.seed = seed,
        }
    }

    /// Checks everything that can be checked before any sampling.
    pub fn validate(&self) -> histmode::Result<()> {
        match self {
            Experiment::Rate(c) | Experiment::Sublinear { config: c, .. } => c.validate_sweep(),
            Experiment::Runtime(c) => c.validate_timing(),
            Experiment::TwoPoint(c) => {
                if c.reps == 0 {
                    return Err(histmode::Error::InvalidParameter("reps must be ≥ 1".into()));
                }
                if c.c.is_empty() || c.sample_sizes.is_empty() {
                    return Err(histmode::Error::InvalidParameter(
                        "two-point experiments need at least one c and one sample size".into(),
                    ));
                }
                for &cv in &c.c {
                    for &n in &c.sample_sizes {
                        let h = histmode::theoretical_bandwidth(n as u64, c.dim, c.beta, cv)?;
                        histmode::densities::TwoPointPair::new(c.dim, c.beta, c.h0, h)?;
                    }
                }
                Ok(())
            }
        }
    }
}
