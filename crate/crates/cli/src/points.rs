//! Delimiter-separated point files.

use std::fmt::Write as _;
use std::path::Path;

use histmode::PointSet;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delimiter {
    Comma,
    Whitespace,
}

impl Delimiter {
    fn detect(line: &str) -> Self {
        if line.contains(',') {
            Delimiter::Comma
        } else {
            Delimiter::Whitespace
        }
    }

    fn fields<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

fn data_error(origin: &str, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{origin}:{line}: {msg}"))
}

/// Parses points from text. The delimiter is taken from the first
/// non-blank line, which is skipped as a header when it is not numeric.
/// Blank lines are ignored.
pub fn parse_points_str(text: &str, origin: &str) -> Result<PointSet, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let Some(&(_, first)) = lines.peek() else {
        return Err(CliError::Data(format!("{origin}: empty file")));
    };
    let delim = Delimiter::detect(first);
    let is_header = delim.fields(first).iter().any(|f| f.parse::<f64>().is_err())
        && !delim.fields(first).iter().any(|f| f.parse::<f64>().is_ok());
    if is_header {
        lines.next();
    }

    let mut dim = None;
    let mut coords = Vec::new();
    for (line_no, line) in lines {
        let fields = delim.fields(line);
        match dim {
            None => dim = Some(fields.len()),
            Some(d) if d != fields.len() => {
                return Err(data_error(
                    origin,
                    line_no,
                    format!("expected {d} columns, found {}", fields.len()),
                ))
            }
            _ => {}
        }
        for (col, field) in fields.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                data_error(origin, line_no, format!("column {}: not a number: {field:?}", col + 1))
            })?;
            if !value.is_finite() {
                return Err(data_error(origin, line_no, format!("column {}: not finite", col + 1)));
            }
            coords.push(value);
        }
    }
    let dim = dim.ok_or_else(|| CliError::Data(format!("{origin}: no data rows")))?;
    PointSet::new(dim, coords).map_err(|e| CliError::Data(format!("{origin}: {e}")))
}

pub fn parse_points(path: &Path) -> Result<PointSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_points_str(&text, &path.display().to_string())
}

/// One comma-separated row per point, shortest round-trip decimals.
pub fn format_points(points: &PointSet) -> String {
    let mut out = String::with_capacity(points.len() * points.dim() * 20);
    for p in points.iter() {
        for (i, x) in p.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:?}");
        }
        out.push('\n');
    }
    out
}
