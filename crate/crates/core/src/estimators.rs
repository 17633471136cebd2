//! Mode estimators: the mono-scale histogram maximum and its multi-scale
//! recursive refinement, plus a prefix-subsampling wrapper.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{argmax_entry, bump, SparseHistogram};
use crate::lattice::{
    bin_index_into, bin_origin, check_width, key_sup_dist, BinKey, Point, PointSet,
};

/// Anything that maps a sample to a mode estimate.
pub trait ModeEstimator: Sync {
    fn estimate(&self, points: &PointSet) -> Result<Point>;
}

impl<F> ModeEstimator for F
where
    F: Fn(&PointSet) -> Result<Point> + Sync,
{
    fn estimate(&self, points: &PointSet) -> Result<Point> {
        self(points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonoParams {
    h: f64,
}

impl MonoParams {
    pub fn new(h: f64) -> Result<Self> {
        check_width(h)?;
        Ok(MonoParams { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

impl ModeEstimator for MonoParams {
    fn estimate(&self, points: &PointSet) -> Result<Point> {
        mono_mode(points, self)
    }
}

/// How the multi-scale estimator maps data onto the unit cube before
/// refining with widths `b^-s`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Leave data already inside `[0, 1]^d` untouched, otherwise min-max rescale.
    #[default]
    Auto,
    /// Always min-max rescale each coordinate onto `[0, 1]`.
    UnitCube,
    /// Never rescale.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiParams {
    b: f64,
    kappa: u64,
    normalization: Normalization,
}

impl Default for MultiParams {
    fn default() -> Self {
        MultiParams {
            b: 2.0,
            kappa: 2,
            normalization: Normalization::Auto,
        }
    }
}

impl MultiParams {
    pub fn new(b: f64, kappa: u64) -> Result<Self> {
        if !(b >= 2.0 && b.is_finite()) {
            return Err(Error::invalid(format!("scale multiplier b must be >= 2, got {b}")));
        }
        Ok(MultiParams {
            b,
            kappa,
            normalization: Normalization::Auto,
        })
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn kappa(&self) -> u64 {
        self.kappa
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
}

impl ModeEstimator for MultiParams {
    fn estimate(&self, points: &PointSet) -> Result<Point> {
        multi_mode(points, self)
    }
}

/// Oracle bin width `c n^(-1/(d + 2 beta))`.
pub fn theoretical_bandwidth(n: u64, d: usize, beta: f64, c: f64) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("n and d must be positive"));
    }
    if !(beta > 0.0 && beta.is_finite() && c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!(
            "beta and c must be positive, got beta={beta}, c={c}"
        )));
    }
    Ok(c * (n as f64).powf(-1.0 / (d as f64 + 2.0 * beta)))
}

/// Lower corner `k h` of the fullest bin at width `h`.
pub fn mono_mode(points: &PointSet, params: &MonoParams) -> Result<Point> {
    let hist = SparseHistogram::build(points, params.h)?;
    bin_origin(&hist.argmax_bin()?, params.h)
}

/// Finest scale `floor(ln n / (d ln b))`, i.e. the largest `s` with `b^(d s) <= n`.
pub fn max_scale(n: u64, d: usize, b: f64) -> u32 {
    if n <= 1 || d == 0 {
        return 0;
    }
    let exponent = (n as f64).ln() / (d as f64 * b.ln());
    let mut s = exponent.floor().max(0.0) as u32;
    // ln-ratio rounding can land one off at exact powers of b
    let fits = |s: u32| b.powf(d as f64 * s as f64) <= n as f64;
    while fits(s + 1) {
        s += 1;
    }
    while s > 0 && !fits(s) {
        s -= 1;
    }
    s
}

/// Bin width `b^-s` used at scale `s`.
pub fn scale_width(b: f64, s: u32) -> f64 {
    b.powi(-(s as i32))
}

/// Componentwise affine map `x -> (x - offset) / span` onto the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub offset: Vec<f64>,
    pub span: Vec<f64>,
}

impl AffineMap {
    pub fn fit(points: &PointSet) -> Result<Self> {
        let d = points.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points.iter() {
            for ((l, h), &x) in lo.iter_mut().zip(hi.iter_mut()).zip(p) {
                *l = l.min(x);
                *h = h.max(x);
            }
        }
        if points.is_empty() {
            return Err(Error::NoData);
        }
        // a constant coordinate is only translated
        let span = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if h > l { h - l } else { 1.0 })
            .collect();
        Ok(AffineMap { offset: lo, span })
    }

    pub fn forward(&self, points: &PointSet) -> Result<PointSet> {
        let d = points.dim();
        let mut coords = Vec::with_capacity(points.as_flat().len());
        for p in points.iter() {
            coords.extend(
                p.iter()
                    .zip(&self.offset)
                    .zip(&self.span)
                    .map(|((x, o), s)| (x - o) / s),
            );
        }
        PointSet::new(d, coords)
    }

    pub fn inverse(&self, x: &[f64]) -> Point {
        Point::from_vec_unchecked(
            x.iter()
                .zip(&self.offset)
                .zip(&self.span)
                .map(|((x, o), s)| o + x * s)
                .collect(),
        )
    }
}

fn resolve_normalization(points: &PointSet, mode: Normalization) -> Result<Option<AffineMap>> {
    match mode {
        Normalization::Identity => Ok(None),
        Normalization::UnitCube => AffineMap::fit(points).map(Some),
        Normalization::Auto => {
            if points.as_flat().iter().all(|x| (0.0..=1.0).contains(x)) {
                Ok(None)
            } else {
                AffineMap::fit(points).map(Some)
            }
        }
    }
}

/// What happened at one refinement scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleStep {
    pub scale: u32,
    pub width: f64,
    pub argmax: BinKey,
    pub argmax_count: u64,
    pub active_before: usize,
    pub active_after: usize,
}

/// Full record of a multi-scale run. Bin keys and widths are in the
/// normalized frame when `affine` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTrace {
    pub estimate: Point,
    pub s_max: u32,
    pub steps: Vec<ScaleStep>,
    pub affine: Option<AffineMap>,
}

pub fn multi_mode(points: &PointSet, params: &MultiParams) -> Result<Point> {
    multi_scale(points, params, |_, _| {}).map(|t| t.estimate)
}

pub fn multi_mode_trace(points: &PointSet, params: &MultiParams) -> Result<MultiTrace> {
    multi_scale(points, params, |_, _| {})
}

/// Recursive refinement: at each scale bin the active points at width
/// `b^-s`, find the fullest bin, and keep only points whose bin lies within
/// `kappa` (sup-norm on keys) of it. When `s_max = 0` a single pass at
/// `s = 1` is made so the estimator is defined for every `n >= 1`.
///
/// `observe` sees each step together with the surviving active indices.
pub(crate) fn multi_scale<F>(points: &PointSet, params: &MultiParams, mut observe: F) -> Result<MultiTrace>
where
    F: FnMut(&ScaleStep, &[usize]),
{
    if points.is_empty() {
        return Err(Error::NoData);
    }
    let n = points.len();
    let d = points.dim();
    let s_max = max_scale(n as u64, d, params.b);
    let last = s_max.max(1);

    let affine = resolve_normalization(points, params.normalization)?;
    let rescaled;
    let data = match &affine {
        Some(map) => {
            rescaled = map.forward(points)?;
            &rescaled
        }
        None => points,
    };

    let mut active: Vec<usize> = (0..n).collect();
    let mut keys: Vec<i64> = Vec::with_capacity(n * d);
    let mut steps = Vec::with_capacity(last as usize);

    for s in 1..=last {
        let h = scale_width(params.b, s);
        check_width(h)?;
        keys.clear();
        keys.resize(active.len() * d, 0);
        for (slot, &i) in keys.chunks_exact_mut(d).zip(&active) {
            bin_index_into(data.point(i), h, slot)?;
        }

        let mut counts = FxHashMap::default();
        for key in keys.chunks_exact(d) {
            bump(&mut counts, key, 1);
        }
        let (argmax, argmax_count) = argmax_entry(&counts)
            .map(|(k, c)| (k.clone(), c))
            .ok_or_else(|| Error::Internal(format!("no active points at scale {s}")))?;

        let before = active.len();
        let mut kept = 0;
        for j in 0..before {
            if key_sup_dist(&keys[j * d..(j + 1) * d], argmax.indices()) <= params.kappa {
                active[kept] = active[j];
                kept += 1;
            }
        }
        active.truncate(kept);
        if active.is_empty() {
            return Err(Error::Internal(format!("active set emptied at scale {s}")));
        }

        let step = ScaleStep {
            scale: s,
            width: h,
            argmax,
            argmax_count,
            active_before: before,
            active_after: kept,
        };
        observe(&step, &active);
        steps.push(step);
    }

    let final_step = steps
        .last()
        .ok_or_else(|| Error::Internal("no refinement steps".into()))?;
    let corner = bin_origin(&final_step.argmax, final_step.width)?;
    let estimate = match &affine {
        Some(map) => map.inverse(corner.coords()),
        None => corner,
    };
    Ok(MultiTrace {
        estimate,
        s_max,
        steps,
        affine,
    })
}

/// Applies `estimator` to the first `k` points only.
pub fn subsampled<E: ModeEstimator + ?Sized>(estimator: &E, points: &PointSet, k: usize) -> Result<Point> {
    if k == 0 || k > points.len() {
        return Err(Error::invalid(format!(
            "subsample size {k} outside 1..={}",
            points.len()
        )));
    }
    if k == points.len() {
        return estimator.estimate(points);
    }
    estimator.estimate(&points.prefix(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsampleRule {
    /// Exactly `k` points.
    Fixed(usize),
    /// `floor(n^gamma)` points.
    Power(f64),
}

impl SubsampleRule {
    pub fn size(&self, n: usize) -> usize {
        match *self {
            SubsampleRule::Fixed(k) => k,
            // the epsilon keeps exact powers such as 10000^0.5 from flooring to 99
            SubsampleRule::Power(gamma) => ((n as f64).powf(gamma) + 1e-9).floor().max(1.0) as usize,
        }
    }
}

/// An estimator that only ever looks at a prefix of its input.
#[derive(Debug, Clone)]
pub struct Subsampled<E> {
    pub inner: E,
    pub rule: SubsampleRule,
}

impl<E: ModeEstimator> ModeEstimator for Subsampled<E> {
    fn estimate(&self, points: &PointSet) -> Result<Point> {
        subsampled(&self.inner, points, self.rule.size(points.len()))
    }
}

/// Bin-width rule for the mono-scale estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Bandwidth {
    Fixed { h: f64 },
    /// `c n^(-1/(d + 2 beta))` with `n` the size of the sample actually seen.
    Rate {
        beta: f64,
        #[serde(default = "one")]
        c: f64,
    },
}

impl Bandwidth {
    pub fn width(&self, n: usize, d: usize) -> Result<f64> {
        match *self {
            Bandwidth::Fixed { h } => check_width(h).map(|_| h),
            Bandwidth::Rate { beta, c } => theoretical_bandwidth(n as u64, d, beta, c),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_b() -> f64 {
    2.0
}

fn default_kappa() -> u64 {
    2
}

/// Serializable choice of estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EstimatorSpec {
    Mono {
        bandwidth: Bandwidth,
    },
    Multi {
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default = "default_kappa")]
        kappa: u64,
        #[serde(default)]
        normalization: Normalization,
    },
}

impl EstimatorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorSpec::Mono { bandwidth } => match bandwidth {
                Bandwidth::Fixed { h } => check_width(h),
                Bandwidth::Rate { beta, c } => theoretical_bandwidth(1, 1, beta, c).map(|_| ()),
            },
            EstimatorSpec::Multi { b, kappa, .. } => MultiParams::new(b, kappa).map(|_| ()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EstimatorSpec::Mono { .. } => "mono",
            EstimatorSpec::Multi { .. } => "multi",
        }
    }
}

impl ModeEstimator for EstimatorSpec {
    fn estimate(&self, points: &PointSet) -> Result<Point> {
        match *self {
            EstimatorSpec::Mono { bandwidth } => {
                let h = bandwidth.width(points.len(), points.dim())?;
                mono_mode(points, &MonoParams::new(h)?)
            }
            EstimatorSpec::Multi {
                b,
                kappa,
                normalization,
            } => multi_mode(
                points,
                &MultiParams::new(b, kappa)?.with_normalization(normalization),
            ),
        }
    }
}
