//! Browser bindings. Each exported function takes and returns JSON text so
//! the page needs no generated type glue beyond strings.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use histmode::densities::{sample, Density, Member, PowerPeakDensity, TwoPointPair};
use histmode::estimators::{Bandwidth, EstimatorSpec, Normalization};
use histmode::experiments::{run_trials_many, ExperimentConfig};
use histmode::{
    bin_origin, mono_mode, multi_mode_trace, sup_dist, theoretical_bandwidth, MonoParams,
    MultiParams, SparseHistogram,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct DemoParams {
    pub beta: f64,
    pub h0: f64,
    pub mode: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    /// Mono bin width; the rate `n^(-1/(d + 2 beta))` when absent.
    pub h: Option<f64>,
    pub b: f64,
    pub kappa: u64,
    /// Cap on the points echoed back for plotting.
    pub max_points: usize,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            beta: 2.0,
            h0: 0.5,
            mode: vec![0.3],
            n: 2000,
            seed: 1,
            h: None,
            b: 2.0,
            kappa: 2,
            max_points: 4000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Bin {
    pub corner: Vec<f64>,
    pub count: u64,
}

/// The fullest bin at one refinement scale, as a box in data coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub scale: u32,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: u64,
    pub active: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Demo {
    pub mode: Vec<f64>,
    pub support: (Vec<f64>, Vec<f64>),
    pub points: Vec<Vec<f64>>,
    pub h: f64,
    pub bins: Vec<Bin>,
    pub mono: Vec<f64>,
    pub mono_error: f64,
    pub multi: Vec<f64>,
    pub multi_error: f64,
    pub steps: Vec<Step>,
    /// `(x, f(x))` on a grid, one-dimensional densities only.
    pub curve: Vec<(f64, f64)>,
}

pub fn run_demo(p: &DemoParams) -> histmode::Result<Demo> {
    let density = PowerPeakDensity::new(p.beta, p.h0, p.mode.clone(), 1.0)?;
    let d = density.dim();
    let points = sample(&density, p.n, p.seed);
    let h = match p.h {
        Some(h) => h,
        None => theoretical_bandwidth(p.n as u64, d, p.beta, 1.0)?,
    };
    let hist = SparseHistogram::build(&points, h)?;
    let bins = hist
        .occupied_bins()
        .into_iter()
        .map(|(key, count)| Ok(Bin { corner: bin_origin(&key, h)?.into_vec(), count }))
        .collect::<histmode::Result<Vec<_>>>()?;
    let mono = mono_mode(&points, &MonoParams::new(h)?)?;

    let trace = multi_mode_trace(
        &points,
        &MultiParams::new(p.b, p.kappa)?.with_normalization(Normalization::Auto),
    )?;
    let steps = trace
        .steps
        .iter()
        .map(|s| {
            let corner = bin_origin(&s.argmax, s.width)?;
            let far: Vec<f64> = corner.coords().iter().map(|c| c + s.width).collect();
            let (lo, hi) = match &trace.affine {
                Some(map) => (map.inverse(corner.coords()).into_vec(), map.inverse(&far).into_vec()),
                None => (corner.into_vec(), far),
            };
            Ok(Step { scale: s.scale, lo, hi, count: s.argmax_count, active: s.active_after })
        })
        .collect::<histmode::Result<Vec<_>>>()?;

    let support = density.support();
    let curve = if d == 1 {
        let (lo, hi) = (support.0[0], support.1[0]);
        (0..=400)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / 400.0;
                (x, density.eval(&[x]))
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(Demo {
        mode: p.mode.clone(),
        support,
        points: points.iter().take(p.max_points).map(<[f64]>::to_vec).collect(),
        h,
        bins,
        mono_error: sup_dist(mono.coords(), &p.mode)?,
        mono: mono.into_vec(),
        multi_error: sup_dist(trace.estimate.coords(), &p.mode)?,
        multi: trace.estimate.into_vec(),
        steps,
        curve,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct TwoPointParams {
    pub beta: f64,
    pub h0: f64,
    pub h: f64,
}

impl Default for TwoPointParams {
    fn default() -> Self {
        TwoPointParams { beta: 1.0, h0: 0.5, h: 0.2 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoPointCurves {
    pub x: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub g: Vec<f64>,
    pub chi_squared: f64,
    pub integral_of_g: f64,
    pub f2_mode: f64,
}

pub fn run_two_point(p: &TwoPointParams) -> histmode::Result<TwoPointCurves> {
    let pair = TwoPointPair::new(1, p.beta, p.h0, p.h)?;
    let (lo, hi) = pair.member(Member::F1).support();
    let span = (hi[0] - lo[0]).min(6.0 * p.h0);
    let x: Vec<f64> = (0..=800).map(|i| -0.5 * span + span * i as f64 / 800.0).collect();
    Ok(TwoPointCurves {
        f1: x.iter().map(|&t| pair.eval_f1(&[t])).collect(),
        f2: x.iter().map(|&t| pair.eval_f2(&[t])).collect(),
        g: x.iter().map(|&t| pair.eval_g(&[t])).collect(),
        chi_squared: pair.chi_squared(),
        integral_of_g: pair.integral_of_g(),
        f2_mode: pair.f2_mode()[0],
        x,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    pub beta: f64,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { beta: 2.0, sizes: vec![500, 2000, 8000, 32000], reps: 30, seed: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub sizes: Vec<usize>,
    pub mono: Vec<f64>,
    pub multi: Vec<f64>,
    pub mono_slope: Option<f64>,
    pub multi_slope: Option<f64>,
    pub reference_slope: f64,
}

/// Median error against n for both estimators on a one-dimensional peak.
pub fn run_sweep(p: &SweepParams) -> histmode::Result<Sweep> {
    let density = histmode::densities::DensitySpec::PowerPeak {
        beta: p.beta,
        h0: 0.5,
        mode: vec![0.3],
        peak_value: 1.0,
        variation: None,
    };
    let mono = EstimatorSpec::Mono { bandwidth: Bandwidth::Rate { beta: p.beta, c: 1.0 } };
    let multi = EstimatorSpec::Multi { b: 2.0, kappa: 2, normalization: Normalization::Auto };
    let cfg = ExperimentConfig::new(density, mono, p.sizes.clone(), p.reps, p.seed);
    let reports = run_trials_many(&cfg, &[("mono", &mono), ("multi", &multi)], 1)?;
    Ok(Sweep {
        sizes: p.sizes.clone(),
        mono: reports[0].median_errors(),
        multi: reports[1].median_errors(),
        mono_slope: reports[0].slope.map(|f| f.slope),
        multi_slope: reports[1].slope.map(|f| f.slope),
        reference_slope: reports[0].metadata.reference_slope,
    })
}

fn json_call<P, R>(params: &str, f: impl FnOnce(&P) -> histmode::Result<R>) -> Result<String, String>
where
    P: for<'de> Deserialize<'de> + Default,
    R: Serialize,
{
    let p: P = if params.trim().is_empty() {
        P::default()
    } else {
        serde_json::from_str(params).map_err(|e| format!("bad parameters: {e}"))?
    };
    let out = f(&p).map_err(|e| e.to_string())?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Samples a power-peak density and runs both estimators on it.
#[wasm_bindgen]
pub fn demo(params: &str) -> Result<String, JsError> {
    json_call(params, run_demo).map_err(|e| JsError::new(&e))
}

/// The two-point pair `f1`, `f2 = f1 + g` in one dimension.
#[wasm_bindgen]
pub fn two_point(params: &str) -> Result<String, JsError> {
    json_call(params, run_two_point).map_err(|e| JsError::new(&e))
}

/// A small rate sweep, median error against n.
#[wasm_bindgen]
pub fn rate_sweep(params: &str) -> Result<String, JsError> {
    json_call(params, run_sweep).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_defaults() {
        let out = json_call::<DemoParams, _>("", run_demo).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 2000);
        assert_eq!(v["curve"].as_array().unwrap().len(), 401);
        assert!(v["mono_error"].as_f64().unwrap() < v["h"].as_f64().unwrap() * 3.0);
        let steps = v["steps"].as_array().unwrap();
        assert!(!steps.is_empty());
        let total: u64 = v["bins"].as_array().unwrap().iter().map(|b| b["count"].as_u64().unwrap()).sum();
        assert_eq!(total, 2000);
    }

    #[test]
    fn nested_boxes_shrink() {
        let demo = run_demo(&DemoParams { mode: vec![0.3, 0.6], n: 5000, ..Default::default() }).unwrap();
        let widths: Vec<f64> = demo.steps.iter().map(|s| s.hi[0] - s.lo[0]).collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
        assert!(demo.curve.is_empty());
    }

    #[test]
    fn two_point_curves_differ_only_near_origin() {
        let c = run_two_point(&TwoPointParams::default()).unwrap();
        assert!(c.integral_of_g.abs() < 1e-10);
        for ((x, f1), f2) in c.x.iter().zip(&c.f1).zip(&c.f2) {
            if x.abs() >= 0.2 {
                assert_eq!(f1, f2);
            }
        }
        assert!((c.f2_mode - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sweep_is_small_and_decreasing() {
        let s = run_sweep(&SweepParams { reps: 10, ..Default::default() }).unwrap();
        assert_eq!(s.mono.len(), 4);
        assert!(s.mono[3] < s.mono[0]);
        assert!(s.mono_slope.unwrap() < 0.0);
    }

    #[test]
    fn bad_parameters_are_reported() {
        assert!(json_call::<DemoParams, _>("{\"n\": \"x\"}", run_demo).unwrap_err().starts_with("bad parameters"));
        assert!(json_call::<TwoPointParams, _>("{\"h\": 0.9}", run_two_point).is_err());
    }
}
