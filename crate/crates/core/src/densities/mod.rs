//! Synthetic ground-truth densities with known modes, their sampler, and
//! the numerical checks built on top of them.

mod power_peak;
mod two_point;

pub use power_peak::{normalize_radius, PowerPeakDensity, Variation};
pub use two_point::{Member, PairMember, TwoPointPair};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{sup_dist, BinKey, PointSet};
use crate::quadrature::Quadrature;

/// A bounded, compactly supported density with a known unique mode.
pub trait Density: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    fn mode(&self) -> &[f64];

    /// Upper bound on the density; the rejection envelope height.
    fn max_value(&self) -> f64;

    /// Axis-aligned box `[lo, hi)` containing the support.
    fn support(&self) -> (Vec<f64>, Vec<f64>);

    /// Coordinates along `axis` where the density may fail to be smooth.
    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let _ = axis;
        Vec::new()
    }
}

impl<D: Density + ?Sized> Density for Box<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn mode(&self) -> &[f64] {
        (**self).mode()
    }
    fn max_value(&self) -> f64 {
        (**self).max_value()
    }
    fn support(&self) -> (Vec<f64>, Vec<f64>) {
        (**self).support()
    }
    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        (**self).breakpoints(axis)
    }
}

/// `n` iid draws by rejection from the uniform envelope on the support box.
/// Deterministic given `seed`.
pub fn sample<D: Density + ?Sized>(density: &D, n: usize, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(density, n, &mut rng)
}

pub fn sample_with<D: Density + ?Sized, R: Rng>(density: &D, n: usize, rng: &mut R) -> PointSet {
    let dim = density.dim();
    let (lo, hi) = density.support();
    let extent: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
    let ceiling = density.max_value();
    let mut coords = Vec::with_capacity(n * dim);
    let mut x = vec![0.0; dim];
    let mut accepted = 0;
    while accepted < n {
        for ((xi, l), e) in x.iter_mut().zip(&lo).zip(&extent) {
            *xi = l + e * rng.random::<f64>();
        }
        if ceiling * rng.random::<f64>() < density.eval(&x) {
            coords.extend_from_slice(&x);
            accepted += 1;
        }
    }
    PointSet::from_vec_unchecked(dim, coords)
}

fn axis_breaks<D: Density + ?Sized>(density: &D) -> Vec<Vec<f64>> {
    (0..density.dim()).map(|i| density.breakpoints(i)).collect()
}

/// Integral of the density over its support box. One-dimensional densities
/// use the graded rule; higher dimensions a tensor rule with `panels`
/// panels per smooth piece.
pub fn total_mass<D: Density + ?Sized>(density: &D, panels: usize) -> f64 {
    let (lo, hi) = density.support();
    integrate_over(density, &lo, &hi, panels)
}

/// `p_k`: probability that one draw lands in the bin `[k h, (k + 1) h)`.
pub fn bin_mass<D: Density + ?Sized>(density: &D, key: &BinKey, h: f64, panels: usize) -> f64 {
    let lo: Vec<f64> = key.indices().iter().map(|&k| k as f64 * h).collect();
    let hi: Vec<f64> = key.indices().iter().map(|&k| (k + 1) as f64 * h).collect();
    integrate_over(density, &lo, &hi, panels)
}

fn integrate_over<D: Density + ?Sized>(density: &D, lo: &[f64], hi: &[f64], panels: usize) -> f64 {
    let mut breaks = axis_breaks(density);
    let (slo, shi) = density.support();
    for (b, (l, h)) in breaks.iter_mut().zip(slo.iter().zip(&shi)) {
        b.extend([*l, *h]);
    }
    if density.dim() == 1 {
        Quadrature::new(10).integrate(|x| density.eval(&[x]), lo[0], hi[0], &breaks[0])
    } else {
        Quadrature::new(8).integrate_box(|x| density.eval(x), lo, hi, &breaks, panels)
    }
}

/// Declared local shape of a density around its mode:
/// `peak - c_upper r^beta <= f <= peak - c_lower r^beta` for `r <= radius`
/// and `f <= peak - c_lower radius^beta` beyond, with `r` the sup-norm
/// distance to `mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub mode: Vec<f64>,
    pub peak: f64,
    pub beta: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub passed: bool,
    pub points_checked: usize,
    pub violations: usize,
    pub worst_violation: f64,
    pub worst_point: Option<Vec<f64>>,
}

/// Slack for rounding in the envelope comparisons.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Evaluates `density` on a regular grid over its support box (plus the mode
/// itself) and on `random_points` seeded draws, half of them concentrated in
/// the declared radius, and checks the declared envelope at each.
pub fn check_envelope<D: Density + ?Sized>(
    density: &D,
    envelope: &EnvelopeSpec,
    grid_per_axis: usize,
    random_points: usize,
    seed: u64,
) -> EnvelopeReport {
    let dim = density.dim();
    let (lo, hi) = density.support();
    let slack = ENVELOPE_SLACK * envelope.peak.abs().max(1.0);
    let mut report = EnvelopeReport {
        passed: true,
        points_checked: 0,
        violations: 0,
        worst_violation: 0.0,
        worst_point: None,
    };
    let mut visit = |x: &[f64]| {
        let v = envelope_violation(density.eval(x), x, envelope);
        report.points_checked += 1;
        if v > slack {
            report.violations += 1;
        }
        if v > report.worst_violation {
            report.worst_violation = v;
            report.worst_point = Some(x.to_vec());
        }
    };

    visit(&envelope.mode);

    let g = grid_per_axis.max(1);
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    'grid: loop {
        for i in 0..dim {
            x[i] = lo[i] + (hi[i] - lo[i]) * (idx[i] as f64 + 0.5) / g as f64;
        }
        visit(&x);
        let mut axis = 0;
        loop {
            idx[axis] += 1;
            if idx[axis] < g {
                break;
            }
            idx[axis] = 0;
            axis += 1;
            if axis == dim {
                break 'grid;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..random_points {
        for i in 0..dim {
            x[i] = if j % 2 == 0 {
                rng.random_range(lo[i]..hi[i])
            } else {
                envelope.mode[i] + envelope.radius * rng.random_range(-1.0..=1.0)
            };
        }
        visit(&x);
    }

    report.passed = report.violations == 0;
    report
}

fn envelope_violation(value: f64, x: &[f64], env: &EnvelopeSpec) -> f64 {
    let r = sup_dist(x, &env.mode).unwrap_or(f64::INFINITY);
    let v = if r <= env.radius {
        let rb = r.powf(env.beta);
        let lower = env.peak - env.c_upper * rb;
        let upper = env.peak - env.c_lower * rb;
        (lower - value).max(value - upper)
    } else {
        value - (env.peak - env.c_lower * env.radius.powf(env.beta))
    };
    v.max(0.0)
}

/// Serializable description of a test-bed density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    PowerPeak {
        beta: f64,
        h0: f64,
        mode: Vec<f64>,
        #[serde(default = "unit")]
        peak_value: f64,
        #[serde(default)]
        variation: Option<Variation>,
    },
    F1 {
        dim: usize,
        beta: f64,
        h0: f64,
    },
    F2 {
        dim: usize,
        beta: f64,
        h0: f64,
        h: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl DensitySpec {
    pub fn build(&self) -> Result<Box<dyn Density>> {
        Ok(match self {
            DensitySpec::PowerPeak {
                beta,
                h0,
                mode,
                peak_value,
                variation,
            } => match variation {
                Some(v) => Box::new(PowerPeakDensity::with_variation(*beta, *h0, mode.clone(), *peak_value, *v)?),
                None => Box::new(PowerPeakDensity::new(*beta, *h0, mode.clone(), *peak_value)?),
            },
            DensitySpec::F1 { dim, beta, h0 } => {
                // f1 needs an h only to form the pair; any admissible value works
                Box::new(TwoPointPair::new(*dim, *beta, *h0, *h0)?.member(Member::F1))
            }
            DensitySpec::F2 { dim, beta, h0, h } => {
                Box::new(TwoPointPair::new(*dim, *beta, *h0, *h)?.member(Member::F2))
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            DensitySpec::PowerPeak { mode, .. } => mode.len(),
            DensitySpec::F1 { dim, .. } | DensitySpec::F2 { dim, .. } => *dim,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            DensitySpec::PowerPeak { beta, .. }
            | DensitySpec::F1 { beta, .. }
            | DensitySpec::F2 { beta, .. } => *beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::invalid("density dimension must be at least 1"));
        }
        self.build().map(|_| ())
    }
}
