//! Sparse bin counting at a fixed width and deterministic argmax extraction.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::{bin_index_into, check_width, BinKey, PointSet};

/// Occupancy counts of the non-empty bins of a point set at width `h`.
///
/// Empty bins are never stored, so memory is proportional to the number of
/// occupied bins rather than to the extent of the data.
#[derive(Debug, Clone)]
pub struct SparseHistogram {
    width: f64,
    dim: usize,
    counts: FxHashMap<BinKey, u64>,
    total: u64,
}

impl SparseHistogram {
    /// Single pass over the points: `O(n d)` with expected-constant-time map updates.
    pub fn build(points: &PointSet, h: f64) -> Result<Self> {
        check_width(h)?;
        if points.is_empty() {
            return Err(Error::NoData);
        }
        let dim = points.dim();
        let mut counts = FxHashMap::default();
        let mut key = vec![0i64; dim];
        for x in points.iter() {
            bin_index_into(x, h, &mut key)?;
            bump(&mut counts, &key, 1);
        }
        Ok(SparseHistogram {
            width: h,
            dim,
            counts,
            total: points.len() as u64,
        })
    }

    /// Builds per-shard histograms concurrently and merges them. The result is
    /// identical to [`SparseHistogram::build`].
    #[cfg(feature = "parallel")]
    pub fn build_parallel(points: &PointSet, h: f64, shards: usize) -> Result<Self> {
        use rayon::prelude::*;

        if points.is_empty() {
            return Err(Error::NoData);
        }
        let dim = points.dim();
        let per_shard = points.len().div_ceil(shards.max(1)).max(1);
        points
            .as_flat()
            .par_chunks(per_shard * dim)
            .map(|chunk| SparseHistogram::build(&PointSet::from_vec_unchecked(dim, chunk.to_vec()), h))
            .try_reduce_with(|a, b| a.merge(b))
            .unwrap_or(Err(Error::NoData))
    }

    /// Adds the counts of `other` into `self`. Associative and commutative.
    pub fn merge(mut self, other: SparseHistogram) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.width != other.width {
            return Err(Error::invalid(format!(
                "cannot merge histograms of widths {} and {}",
                self.width, other.width
            )));
        }
        for (key, count) in other.counts {
            *self.counts.entry(key).or_insert(0) += count;
        }
        self.total += other.total;
        Ok(self)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of occupied bins.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, key: &[i64]) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// The fullest bin; among equally full bins the lexicographically
    /// smallest key wins, so the answer does not depend on input order.
    pub fn argmax_bin(&self) -> Result<BinKey> {
        argmax_entry(&self.counts)
            .map(|(k, _)| k.clone())
            .ok_or(Error::NoData)
    }

    /// All occupied bins sorted by key.
    pub fn occupied_bins(&self) -> Vec<(BinKey, u64)> {
        let mut bins: Vec<_> = self.counts.iter().map(|(k, &c)| (k.clone(), c)).collect();
        bins.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        bins
    }
}

pub fn build_histogram(points: &PointSet, h: f64) -> Result<SparseHistogram> {
    SparseHistogram::build(points, h)
}

#[inline]
pub(crate) fn bump(counts: &mut FxHashMap<BinKey, u64>, key: &[i64], by: u64) {
    match counts.get_mut(key) {
        Some(c) => *c += by,
        None => {
            counts.insert(BinKey::from(key), by);
        }
    }
}

pub(crate) fn argmax_entry(counts: &FxHashMap<BinKey, u64>) -> Option<(&BinKey, u64)> {
    let mut best: Option<(&BinKey, u64)> = None;
    for (key, &count) in counts {
        best = match best {
            Some((bk, bc)) if bc > count || (bc == count && bk <= key) => Some((bk, bc)),
            _ => Some((key, count)),
        };
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts1(xs: &[f64]) -> PointSet {
        PointSet::new(1, xs.to_vec()).unwrap()
    }

    fn map(entries: &[(&[i64], u64)]) -> FxHashMap<BinKey, u64> {
        entries.iter().map(|(k, c)| (BinKey::from(*k), *c)).collect()
    }

    #[test]
    fn three_point_example() {
        let h = SparseHistogram::build(&pts1(&[0.1, 0.15, 0.9]), 0.5).unwrap();
        assert_eq!(
            h.occupied_bins(),
            vec![(BinKey::new(vec![0]), 2), (BinKey::new(vec![1]), 1)]
        );
        assert_eq!(h.total(), 3);
        assert_eq!(h.argmax_bin().unwrap(), BinKey::new(vec![0]));
    }

    #[test]
    fn singleton_and_mass_point() {
        let h = SparseHistogram::build(&pts1(&[-3.7]), 0.3).unwrap();
        assert_eq!(h.occupied_bins().len(), 1);
        assert_eq!(h.count(crate::lattice::bin_index(&[-3.7], 0.3).unwrap().indices()), 1);

        let h = SparseHistogram::build(&pts1(&[0.42; 17]), 0.1).unwrap();
        assert_eq!(h.occupied_bins(), vec![(BinKey::new(vec![4]), 17)]);
    }

    #[test]
    fn argmax_rules() {
        let counts = map(&[(&[3], 5)]);
        assert_eq!(argmax_entry(&counts).unwrap().0.indices(), &[3]);
        let counts = map(&[(&[1], 2), (&[-2], 2)]);
        assert_eq!(argmax_entry(&counts).unwrap().0.indices(), &[-2]);
        let counts = map(&[(&[0, 5], 2), (&[0, -1], 2), (&[-1, 9], 1)]);
        assert_eq!(argmax_entry(&counts).unwrap().0.indices(), &[0, -1]);
    }

    #[test]
    fn sorted_output_and_distinct_points() {
        let h = SparseHistogram::build(&pts1(&[0.6, 0.1, 0.2]), 0.5).unwrap();
        assert_eq!(
            h.occupied_bins(),
            vec![(BinKey::new(vec![0]), 2), (BinKey::new(vec![1]), 1)]
        );
        let h = SparseHistogram::build(&pts1(&[0.0, 10.0, 20.0, 30.0]), 1.0).unwrap();
        assert!(h.occupied_bins().iter().all(|(_, c)| *c == 1));
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn errors() {
        let empty = PointSet::new(1, vec![]).unwrap();
        assert_eq!(SparseHistogram::build(&empty, 1.0).unwrap_err(), Error::NoData);
        assert!(SparseHistogram::build(&pts1(&[1.0]), -1.0).is_err());
        let a = SparseHistogram::build(&pts1(&[1.0]), 1.0).unwrap();
        let b = SparseHistogram::build(&pts1(&[1.0]), 0.5).unwrap();
        assert!(a.merge(b).is_err());
    }

    /// Quadratic-time reference: for each point, count the points sharing its bin.
    fn brute_force_argmax(points: &PointSet, h: f64) -> BinKey {
        let keys: Vec<BinKey> = points
            .iter()
            .map(|p| crate::lattice::bin_index(p, h).unwrap())
            .collect();
        let mut best: Option<(usize, &BinKey)> = None;
        for k in &keys {
            let c = keys.iter().filter(|o| *o == k).count();
            best = match best {
                Some((bc, bk)) if bc > c || (bc == c && bk <= k) => Some((bc, bk)),
                _ => Some((c, k)),
            };
        }
        best.unwrap().1.clone()
    }

    fn point_set_strategy() -> impl Strategy<Value = PointSet> {
        (1usize..=3, 1usize..=200).prop_flat_map(|(d, n)| {
            proptest::collection::vec(-2.0f64..2.0, d * n)
                .prop_map(move |c| PointSet::new(d, c).unwrap())
        })
    }

    proptest! {
        #[test]
        fn counts_are_conserved(points in point_set_strategy(), h in 0.05f64..2.0) {
            let hist = SparseHistogram::build(&points, h).unwrap();
            let sum: u64 = hist.occupied_bins().iter().map(|(_, c)| c).sum();
            prop_assert_eq!(sum, points.len() as u64);
            prop_assert_eq!(hist.total(), points.len() as u64);
            prop_assert!(hist.occupied_bins().iter().all(|(_, c)| *c >= 1));
        }

        #[test]
        fn argmax_matches_brute_force(points in point_set_strategy(), h in 0.05f64..2.0) {
            let hist = SparseHistogram::build(&points, h).unwrap();
            prop_assert_eq!(hist.argmax_bin().unwrap(), brute_force_argmax(&points, h));
        }

        #[test]
        fn argmax_is_permutation_invariant(points in point_set_strategy(), h in 0.05f64..2.0, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rows: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
            rows.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = PointSet::from_rows(&rows).unwrap();
            prop_assert_eq!(
                SparseHistogram::build(&points, h).unwrap().argmax_bin().unwrap(),
                SparseHistogram::build(&shuffled, h).unwrap().argmax_bin().unwrap()
            );
        }

        #[cfg(feature = "parallel")]
        #[test]
        fn sharded_build_matches_sequential(points in point_set_strategy(), h in 0.05f64..2.0, shards in 1usize..8) {
            let seq = SparseHistogram::build(&points, h).unwrap();
            let par = SparseHistogram::build_parallel(&points, h, shards).unwrap();
            prop_assert_eq!(seq.occupied_bins(), par.occupied_bins());
            prop_assert_eq!(seq.total(), par.total());
        }
    }
}
