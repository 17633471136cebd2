//! Command-line front end: point-file ingestion, estimator dispatch,
//! seeded sampling and experiment runs with plot-ready output.

pub mod commands;
pub mod config;
pub mod points;

pub use commands::{Cli, Command};
pub use points::{format_points, parse_points, parse_points_str};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    /// Core errors raised while acting on user-supplied flags.
    pub(crate) fn from_flags(e: histmode::Error) -> Self {
        match e {
            histmode::Error::Internal(m) => CliError::Internal(m),
            histmode::Error::InvalidParameter(_)
            | histmode::Error::InvalidWidth(_)
            | histmode::Error::PeakTooHeavy(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }

    /// Core errors raised while acting on file contents.
    pub(crate) fn from_data(e: histmode::Error) -> Self {
        match e {
            histmode::Error::Internal(m) => CliError::Internal(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Six significant digits, for summary statistics.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.123456789), "0.123457");
        assert_eq!(sig6(-0.2), "-0.2");
        assert_eq!(sig6(1234.56789), "1234.57");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
        assert_eq!(sig6(0.0), "0");
    }
}
