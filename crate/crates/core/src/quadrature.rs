//! Composite Gauss-Legendre quadrature for piecewise-smooth integrands with
//! known breakpoints.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

pub struct Quadrature {
    rule: GaussLegendre,
}

impl Quadrature {
    pub fn new(degree: usize) -> Self {
        let degree = NonZeroUsize::new(degree.max(2)).expect("degree is at least 2");
        Quadrature {
            rule: GaussLegendre::new(degree),
        }
    }

    fn pairs(&self) -> &[(f64, f64)] {
        self.rule.as_node_weight_pairs()
    }

    /// Integral over one panel `[a, b]`.
    pub fn panel<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self
            .pairs()
            .iter()
            .map(|&(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Integral over `[a, b]`, split at `breaks`, with every piece graded
    /// geometrically toward both of its ends so that algebraic endpoint
    /// singularities such as `|t|^0.5` converge.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
        const LEVELS: i32 = 40;
        pieces(a, b, breaks)
            .windows(2)
            .map(|w| {
                let (p, q) = (w[0], w[1]);
                let m = 0.5 * (p + q);
                let half = m - p;
                let mut total = 0.0;
                for k in 0..LEVELS {
                    let outer = half * 2f64.powi(-k);
                    let inner = half * 2f64.powi(-k - 1);
                    total += self.panel(p + inner, p + outer, &mut f);
                    total += self.panel(q - outer, q - inner, &mut f);
                }
                let tip = half * 2f64.powi(-LEVELS);
                total += self.panel(p, p + tip, &mut f);
                total += self.panel(q - tip, q, &mut f);
                total
            })
            .sum()
    }

    /// Node/weight list for `[a, b]` with `panels` equal panels per piece.
    pub fn axis_rule(&self, a: f64, b: f64, breaks: &[f64], panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let mut out = Vec::new();
        for w in pieces(a, b, breaks).windows(2) {
            let step = (w[1] - w[0]) / panels as f64;
            for j in 0..panels {
                let lo = w[0] + j as f64 * step;
                let mid = lo + 0.5 * step;
                for &(x, wt) in self.pairs() {
                    out.push((mid + 0.5 * step * x, 0.5 * step * wt));
                }
            }
        }
        out
    }

    /// Tensor-product integral over the box `[lo, hi]` with per-axis breakpoints.
    pub fn integrate_box<F: FnMut(&[f64]) -> f64>(
        &self,
        mut f: F,
        lo: &[f64],
        hi: &[f64],
        breaks: &[Vec<f64>],
        panels: usize,
    ) -> f64 {
        let d = lo.len();
        let axes: Vec<Vec<(f64, f64)>> = (0..d)
            .map(|i| {
                let b = breaks.get(i).map(Vec::as_slice).unwrap_or(&[]);
                self.axis_rule(lo[i], hi[i], b, panels)
            })
            .collect();
        if axes.iter().any(Vec::is_empty) {
            return 0.0;
        }
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for i in 0..d {
                let (xi, wi) = axes[i][idx[i]];
                x[i] = xi;
                w *= wi;
            }
            total += w * f(&x);
            let mut axis = 0;
            loop {
                idx[axis] += 1;
                if idx[axis] < axes[axis].len() {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
                if axis == d {
                    return total;
                }
            }
        }
    }
}

/// Sorted, deduplicated piece boundaries of `[a, b]`.
fn pieces(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if b <= a {
        pts.clear();
    }
    pts
}
