//! Sup-norm geometry and the mapping between points of `R^d` and integer
//! lattice bins `[k h, (k + 1) h)`.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Quotients must land in [-2^63, 2^63) to be representable as i64.
const INDEX_LOWER: f64 = -9_223_372_036_854_775_808.0;
const INDEX_UPPER: f64 = 9_223_372_036_854_775_808.0;

/// A point of `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        check_finite(&coords)?;
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            // Debug formatting of f64 is the shortest round-trip representation.
            write!(f, "{c:?}")?;
        }
        Ok(())
    }
}

/// Integer index vector `k` of the bin `[k h, (k + 1) h)`.
///
/// Ordering is lexicographic on the index vector; the histogram uses it to
/// break ties between equally full bins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinKey(Vec<i64>);

impl BinKey {
    pub fn new(indices: Vec<i64>) -> Self {
        BinKey(indices)
    }

    pub fn indices(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Sup-norm distance between two keys, in bins.
    pub fn sup_dist(&self, other: &BinKey) -> u64 {
        key_sup_dist(&self.0, &other.0)
    }
}

impl Borrow<[i64]> for BinKey {
    fn borrow(&self) -> &[i64] {
        &self.0
    }
}

impl From<&[i64]> for BinKey {
    fn from(indices: &[i64]) -> Self {
        BinKey(indices.to_vec())
    }
}

pub(crate) fn key_sup_dist(a: &[i64], b: &[i64]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.abs_diff(*y))
        .max()
        .unwrap_or(0)
}

/// A dataset of `n` points in `R^d`, stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Wraps a row-major coordinate buffer. Every coordinate must be finite.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        check_finite(&coords)?;
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::NoData)?.as_ref().len();
        let mut coords = Vec::with_capacity(first * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != first {
                return Err(Error::DimensionMismatch {
                    expected: first,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        PointSet::new(first, coords)
    }

    pub(crate) fn from_vec_unchecked(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && coords.len() % dim == 0);
        PointSet { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// The first `k` points, in order.
    pub fn prefix(&self, k: usize) -> PointSet {
        let k = k.min(self.len());
        PointSet {
            dim: self.dim,
            coords: self.coords[..k * self.dim].to_vec(),
        }
    }

    /// Translates every point by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<PointSet> {
        check_dims(self.dim, offset.len())?;
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(offset).map(|(x, o)| x + o))
            .collect();
        PointSet::new(self.dim, coords)
    }
}

fn check_finite(coords: &[f64]) -> Result<()> {
    match coords.iter().position(|c| !c.is_finite()) {
        Some(i) => Err(Error::NonFinite {
            axis: i,
            value: coords[i],
        }),
        None => Ok(()),
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_width(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWidth(h))
    }
}

/// `max_i |a_i - b_i|`.
pub fn sup_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Componentwise `floor(x / h)`.
pub fn bin_index(x: &[f64], h: f64) -> Result<BinKey> {
    check_width(h)?;
    let mut out = vec![0; x.len()];
    bin_index_into(x, h, &mut out)?;
    Ok(BinKey(out))
}

/// Writes `floor(x / h)` into `out`; `h` must already be validated.
#[inline]
pub(crate) fn bin_index_into(x: &[f64], h: f64, out: &mut [i64]) -> Result<()> {
    for (axis, (&xi, slot)) in x.iter().zip(out.iter_mut()).enumerate() {
        let q = (xi / h).floor();
        if !(INDEX_LOWER..INDEX_UPPER).contains(&q) {
            return Err(if xi.is_finite() {
                Error::IndexOverflow(xi / h)
            } else {
                Error::NonFinite { axis, value: xi }
            });
        }
        *slot = q as i64;
    }
    Ok(())
}

/// Lower corner `k h` of bin `k`.
pub fn bin_origin(k: &BinKey, h: f64) -> Result<Point> {
    check_width(h)?;
    Ok(Point(k.0.iter().map(|&i| i as f64 * h).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sup_dist_examples() {
        assert_eq!(sup_dist(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(sup_dist(&[1.0, 2.0], &[3.0, 1.0]).unwrap(), 2.0);
        assert!((sup_dist(&[0.1], &[-0.4]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            sup_dist(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bin_index_examples() {
        assert_eq!(bin_index(&[2.5], 1.0).unwrap().indices(), &[2]);
        assert_eq!(bin_index(&[-0.3], 0.5).unwrap().indices(), &[-1]);
        assert_eq!(bin_index(&[0.9, 1.5], 0.5).unwrap().indices(), &[1, 3]);
    }

    #[test]
    fn bin_index_rejects_bad_input() {
        assert_eq!(bin_index(&[1.0], 0.0), Err(Error::InvalidWidth(0.0)));
        assert_eq!(bin_index(&[1.0], -1.0), Err(Error::InvalidWidth(-1.0)));
        assert!(matches!(
            bin_index(&[f64::NAN], 1.0),
            Err(Error::NonFinite { axis: 0, .. })
        ));
        assert!(matches!(
            bin_index(&[0.0, f64::INFINITY], 1.0),
            Err(Error::NonFinite { axis: 1, .. })
        ));
        assert!(matches!(
            bin_index(&[1e300], 1e-10),
            Err(Error::IndexOverflow(_))
        ));
        // -2^63 itself is representable
        assert_eq!(
            bin_index(&[-9_223_372_036_854_775_808.0], 1.0).unwrap().indices(),
            &[i64::MIN]
        );
        assert!(bin_index(&[9_223_372_036_854_775_808.0], 1.0).is_err());
    }

    #[test]
    fn bin_origin_examples() {
        assert_eq!(
            bin_origin(&BinKey::new(vec![0]), 0.25).unwrap().coords(),
            &[0.0]
        );
        assert_eq!(
            bin_origin(&BinKey::new(vec![2, -1]), 0.5).unwrap().coords(),
            &[1.0, -0.5]
        );
        assert!(bin_origin(&BinKey::new(vec![1]), 0.0).is_err());
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(PointSet::from_rows::<Vec<f64>>(&[]).is_err());
        assert!(PointSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
        let ps = PointSet::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps.point(1), &[3.0, 4.0]);
        assert_eq!(ps.prefix(1).len(), 1);
    }

    proptest! {
        #[test]
        fn round_trip_through_corner(
            k in proptest::collection::vec(-1_000_000i64..1_000_000, 1..4),
            e in -10i32..10,
        ) {
            let h = 2f64.powi(e);
            let key = BinKey::new(k);
            let corner = bin_origin(&key, h).unwrap();
            prop_assert_eq!(bin_index(corner.coords(), h).unwrap(), key);
        }

        #[test]
        fn point_lies_within_h_of_its_corner(
            x in proptest::collection::vec(-1e6f64..1e6, 1..4),
            h in 1e-3f64..1e2,
        ) {
            let corner = bin_origin(&bin_index(&x, h).unwrap(), h).unwrap();
            prop_assert!(sup_dist(&x, corner.coords()).unwrap() < h);
        }

        // Dyadic coordinates and widths keep x + m h and the quotient exact.
        #[test]
        fn grid_shift_equivariance(
            xi in proptest::collection::vec(-(1i64 << 20)..(1i64 << 20), 1..4),
            m in proptest::collection::vec(-1000i64..1000, 3),
            e in -8i32..8,
        ) {
            let h = 2f64.powi(e);
            let x: Vec<f64> = xi.iter().map(|&v| v as f64 / 1024.0).collect();
            let shifted: Vec<f64> = x.iter().zip(&m).map(|(xv, mv)| xv + *mv as f64 * h).collect();
            let base = bin_index(&x, h).unwrap();
            let moved = bin_index(&shifted, h).unwrap();
            for ((b, s), mv) in base.indices().iter().zip(moved.indices()).zip(&m) {
                prop_assert_eq!(*s, b + mv);
            }
        }

        #[test]
        fn scale_invariance_under_powers_of_two(
            x in proptest::collection::vec(-1e6f64..1e6, 1..4),
            h in 1e-3f64..1e2,
            e in -20i32..20,
        ) {
            let lambda = 2f64.powi(e);
            let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
            prop_assert_eq!(bin_index(&scaled, h * lambda).unwrap(), bin_index(&x, h).unwrap());
        }
    }
}
