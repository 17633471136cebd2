//! Histogram-based estimation of the global mode of a density.
//!
//! * [`estimators::mono_mode`] bins the sample once at width `h` and returns
//!   the corner of the fullest bin.
//! * [`estimators::multi_mode`] refines recursively at widths `b^-s`,
//!   keeping only points near the current fullest bin, and needs no
//!   knowledge of how sharply the density peaks.
//!
//! Both run in time linear in the sample size. The [`densities`] and
//! [`experiments`] modules provide a synthetic test bed with known modes
//! and a Monte Carlo harness for rate and runtime measurements.

pub mod densities;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod histogram;
pub mod lattice;
pub mod quadrature;

pub use error::{Error, Result};
pub use estimators::{
    mono_mode, multi_mode, multi_mode_trace, subsampled, theoretical_bandwidth, EstimatorSpec,
    ModeEstimator, MonoParams, MultiParams, Normalization,
};
pub use histogram::{build_histogram, SparseHistogram};
pub use lattice::{bin_index, bin_origin, sup_dist, BinKey, Point, PointSet};
