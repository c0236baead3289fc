use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};

/// Parses whitespace-separated `x y z` lines. Blank lines and `#` comments are
/// skipped; line numbers in errors are 1-based.
pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut coords = [0.0; 3];
        let mut tokens = line.split_whitespace();
        for c in &mut coords {
            let tok = tokens.next().ok_or_else(|| Error::ParseLine {
                line: line_no,
                message: "expected three coordinates".into(),
            })?;
            *c = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ParseLine {
                    line: line_no,
                    message: format!("'{tok}' is not a finite number"),
                })?;
        }
        if let Some(extra) = tokens.next() {
            return Err(Error::ParseLine {
                line: line_no,
                message: format!("unexpected trailing token '{extra}'"),
            });
        }
        points.push(Point3::from(coords));
    }
    PointCloud::new(points)
}

pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 32);
    for p in cloud.points() {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    out
}
