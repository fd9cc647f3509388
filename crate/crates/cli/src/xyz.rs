//! ASCII XYZ point clouds: one whitespace-separated `x y z` triple per line.

use std::fmt::{self, Write as _};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XyzError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for XyzError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed XYZ at line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for XyzError {}

/// Parses a cloud; blank lines and lines starting with `#` are skipped.
pub fn parse(text: &str) -> Result<Vec<[f64; 3]>, XyzError> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| XyzError {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(fail(format!(
                "expected 3 coordinates, found {}",
                fields.len()
            )));
        }
        let mut p = [0.0; 3];
        for (slot, field) in p.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(format!("{field:?} is not a finite number")))?;
        }
        points.push(p);
    }
    Ok(points)
}

/// Shortest round-trip formatting, so `parse(&format(p)) == p`.
pub fn format(points: &[[f64; 3]]) -> String {
    let mut out = String::with_capacity(points.len() * 40);
    for p in points {
        writeln!(out, "{} {} {}", p[0], p[1], p[2]).expect("writing to a String");
    }
    out
}

/// Keeps the first point falling into each cubic voxel of side `size`, in input order.
pub fn voxel_downsample(points: &[[f64; 3]], size: f64) -> Vec<[f64; 3]> {
    assert!(size > 0.0, "voxel size must be positive");
    let mut seen = std::collections::HashSet::new();
    points
        .iter()
        .filter(|p| seen.insert(p.map(|c| (c / size).floor() as i64)))
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let pts = vec![[0.1, -2.5e-9, 1e300], [1.0 / 3.0, 7.0, -0.0]];
        assert_eq!(parse(&format(&pts)).unwrap(), pts);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse("1 2 3\n\n# note\n4 5\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = parse("1 2 3\n1 nan 3\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse("1 2 x").unwrap_err().message.contains("\"x\""));
    }

    #[test]
    fn voxel_keeps_first_per_cell() {
        let pts = [
            [0.1, 0.1, 0.1],
            [0.2, 0.3, 0.4],
            [1.5, 0.0, 0.0],
            [-0.1, 0.0, 0.0],
        ];
        assert_eq!(voxel_downsample(&pts, 1.0), vec![pts[0], pts[2], pts[3]]);
    }
}
