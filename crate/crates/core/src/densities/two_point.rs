use serde::{Deserialize, Serialize};

use super::power_peak::{shell, PowerPeakDensity};
use super::{Density, EnvelopeSpec};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// A pair of densities with modes `h/2` apart per axis that are nearly
/// indistinguishable from `n ~ h^-(d + 2 beta)` samples.
///
/// `f1` is the exact-power peak at the origin with peak value 1. `f2` equals
/// `f1` outside the open box `(-h, h)^d`, is flat at `1 - h^beta` on
/// `(-h, h)^d \ (0, h)^d`, and carries a sharper peak
/// `1 + (2^d - 1) h^beta - 2^(d + beta) ||t - h/2||^beta` on `(0, h)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointPair {
    f1: PowerPeakDensity,
    h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Member {
    F1,
    F2,
}

impl TwoPointPair {
    pub fn new(dim: usize, beta: f64, h0: f64, h: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let f1 = PowerPeakDensity::new(beta, h0, vec![0.0; dim], 1.0)?;
        if !(h > 0.0 && h <= h0) {
            return Err(Error::invalid(format!(
                "perturbation width h must lie in (0, h0 = {h0}], got {h}"
            )));
        }
        Ok(TwoPointPair { f1, h })
    }

    pub fn dim(&self) -> usize {
        self.f1.dim()
    }

    pub fn beta(&self) -> f64 {
        self.f1.beta()
    }

    pub fn h0(&self) -> f64 {
        self.f1.h0()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn f1(&self) -> &PowerPeakDensity {
        &self.f1
    }

    pub fn member(&self, which: Member) -> PairMember {
        PairMember::new(self.clone(), which)
    }

    /// `(2^d - 1) h^beta`, the height gained by `f2` at its mode.
    fn lift(&self) -> f64 {
        (2f64.powi(self.dim() as i32) - 1.0) * self.h.powf(self.beta())
    }

    fn sharpness(&self) -> f64 {
        2f64.powf(self.dim() as f64 + self.beta())
    }

    pub fn f2_mode(&self) -> Vec<f64> {
        vec![0.5 * self.h; self.dim()]
    }

    pub fn f2_peak(&self) -> f64 {
        1.0 + self.lift()
    }

    fn in_outer_box(&self, t: &[f64]) -> bool {
        t.iter().all(|&x| -self.h < x && x < self.h)
    }

    fn in_inner_box(&self, t: &[f64]) -> bool {
        t.iter().all(|&x| 0.0 < x && x < self.h)
    }

    fn centered_power(&self, t: &[f64]) -> f64 {
        let half = 0.5 * self.h;
        t.iter()
            .map(|x| (x - half).abs())
            .fold(0.0, f64::max)
            .powf(self.beta())
    }

    pub fn eval_f1(&self, t: &[f64]) -> f64 {
        self.f1.eval(t)
    }

    pub fn eval_f2(&self, t: &[f64]) -> f64 {
        if !self.in_outer_box(t) {
            self.f1.eval(t)
        } else if !self.in_inner_box(t) {
            1.0 - self.h.powf(self.beta())
        } else {
            1.0 + self.lift() - self.sharpness() * self.centered_power(t)
        }
    }

    /// `f2 - f1`, supported on `(-h, h)^d`.
    pub fn eval_g(&self, t: &[f64]) -> f64 {
        if !self.in_outer_box(t) {
            return 0.0;
        }
        let beta = self.beta();
        let norm = t.iter().map(|x| x.abs()).fold(0.0, f64::max).powf(beta);
        if !self.in_inner_box(t) {
            norm - self.h.powf(beta)
        } else {
            norm + self.lift() - self.sharpness() * self.centered_power(t)
        }
    }

    fn perturbation_breaks(&self) -> Vec<f64> {
        vec![0.0, 0.5 * self.h]
    }

    /// Integral of an integrand supported on `(-h, h)^d`.
    fn integrate_perturbation<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let quad = Quadrature::new(12);
        let breaks = self.perturbation_breaks();
        if self.dim() == 1 {
            quad.integrate(|x| f(&[x]), -self.h, self.h, &breaks)
        } else {
            let d = self.dim();
            let panels = if d == 2 { 24 } else { 6 };
            quad.integrate_box(
                f,
                &vec![-self.h; d],
                &vec![self.h; d],
                &vec![breaks; d],
                panels,
            )
        }
    }

    /// Numerical `int g`, zero up to quadrature error. Each term of `g` is
    /// either constant on its box or a power of the sup-distance to the
    /// box centre, so it reduces to a one-dimensional shell integral.
    pub fn integral_of_g(&self) -> f64 {
        let (d, beta, h) = (self.dim(), self.beta(), self.h);
        let quad = Quadrature::new(12);
        let radial = |radius: f64| quad.integrate(|r| r.powf(beta) * shell(d, r), 0.0, radius, &[]);
        let inner_volume = h.powi(d as i32);
        let outer_volume = (2.0 * h).powi(d as i32);
        radial(h) - h.powf(beta) * (outer_volume - inner_volume) + self.lift() * inner_volume
            - self.sharpness() * radial(0.5 * h)
    }

    /// `int g` by tensor-product quadrature of `g` itself. Slower and less
    /// accurate than [`Self::integral_of_g`] in `d >= 2`.
    pub fn integral_of_g_direct(&self) -> f64 {
        self.integrate_perturbation(|t| self.eval_g(t))
    }

    /// Chi-squared divergence `int f2^2 / f1 - 1`, computed as `int g^2 / f1`.
    pub fn chi_squared(&self) -> f64 {
        self.integrate_perturbation(|t| {
            let g = self.eval_g(t);
            g * g / self.f1.eval(t)
        })
    }

    /// Sandwich constants that `f2` satisfies around `h/2`:
    /// `c0 = 2^-beta`, `C0 = 2^(d + beta)`, radius `h0 - h/2`.
    pub fn f2_envelope(&self) -> EnvelopeSpec {
        EnvelopeSpec {
            mode: self.f2_mode(),
            peak: self.f2_peak(),
            beta: self.beta(),
            c_lower: 2f64.powf(-self.beta()),
            c_upper: self.sharpness(),
            radius: self.h0() - 0.5 * self.h,
        }
    }

    /// Log-likelihood ratio `sum log f2(x_i) / f1(x_i)`; only points inside
    /// `(-h, h)^d` contribute.
    pub fn log_likelihood_ratio(&self, points: impl IntoIterator<Item = impl AsRef<[f64]>>) -> f64 {
        points
            .into_iter()
            .filter(|p| self.in_outer_box(p.as_ref()))
            .map(|p| {
                let p = p.as_ref();
                (self.eval_f2(p) / self.f1.eval(p)).ln()
            })
            .sum()
    }
}

/// One member of a [`TwoPointPair`] viewed as a standalone density.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMember {
    pair: TwoPointPair,
    which: Member,
    mode: Vec<f64>,
}

impl PairMember {
    fn new(pair: TwoPointPair, which: Member) -> Self {
        let mode = match which {
            Member::F1 => vec![0.0; pair.dim()],
            Member::F2 => pair.f2_mode(),
        };
        PairMember { pair, which, mode }
    }

    pub fn pair(&self) -> &TwoPointPair {
        &self.pair
    }

    pub fn which(&self) -> Member {
        self.which
    }

    pub fn envelope(&self) -> EnvelopeSpec {
        match self.which {
            Member::F1 => self.pair.f1.envelope(),
            Member::F2 => self.pair.f2_envelope(),
        }
    }
}

impl Density for PairMember {
    fn dim(&self) -> usize {
        self.pair.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self.which {
            Member::F1 => self.pair.eval_f1(x),
            Member::F2 => self.pair.eval_f2(x),
        }
    }

    fn mode(&self) -> &[f64] {
        &self.mode
    }

    fn max_value(&self) -> f64 {
        match self.which {
            Member::F1 => 1.0,
            Member::F2 => self.pair.f2_peak(),
        }
    }

    fn support(&self) -> (Vec<f64>, Vec<f64>) {
        self.pair.f1.support()
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let mut b = self.pair.f1.breakpoints(axis);
        if self.which == Member::F2 {
            b.extend([-self.pair.h, 0.5 * self.pair.h, self.pair.h]);
        }
        b
    }
}
