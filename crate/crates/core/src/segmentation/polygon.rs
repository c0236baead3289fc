use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::occupancy::GridSpec;

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let scale = (b[0] - a[0]).abs().max((b[1] - a[1]).abs()).max(1.0);
    cross(a, b, p).abs() <= 1e-12 * scale * scale
        && p[0] >= a[0].min(b[0]) - 1e-12 * scale
        && p[0] <= a[0].max(b[0]) + 1e-12 * scale
        && p[1] >= a[1].min(b[1]) - 1e-12 * scale
        && p[1] <= a[1].max(b[1]) + 1e-12 * scale
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

fn check_simple(vertices: &[[f64; 2]]) -> Result<()> {
    let n = vertices.len();
    for a in 0..n {
        for b in a + 1..n {
            let adjacent = b == a + 1 || (a == 0 && b == n - 1);
            if adjacent {
                continue;
            }
            let (p1, p2) = (vertices[a], vertices[(a + 1) % n]);
            let (q1, q2) = (vertices[b], vertices[(b + 1) % n]);
            if segments_intersect(p1, p2, q1, q2) {
                return Err(Error::invalid(format!("polygon edges {a} and {b} intersect")));
            }
        }
    }
    Ok(())
}

/// Even-odd containment with points on the boundary counted as inside.
pub fn point_in_polygon(p: [f64; 2], vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_at = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x_at {
                inside = !inside;
            }
        }
    }
    inside
}

/// Rasterizes a simple polygon in world meters: a cell is set when its center
/// lies inside the polygon or on its boundary.
pub fn polygon_to_mask(vertices: &[[f64; 2]], spec: &GridSpec) -> Result<BinaryGrid> {
    if vertices.len() < 3 {
        return Err(Error::invalid(format!("polygon needs at least 3 vertices, got {}", vertices.len())));
    }
    if vertices.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("polygon has non-finite vertices"));
    }
    check_simple(vertices)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in vertices {
        for a in 0..2 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    let mut mask = spec.empty_binary();
    for j in 0..spec.height {
        for i in 0..spec.width {
            let (x, y) = spec.grid_to_world(i, j);
            if x < lo[0] || x > hi[0] || y < lo[1] || y > hi[1] {
                continue;
            }
            if point_in_polygon([x, y], vertices) {
                *mask.get_mut(i, j) = true;
            }
        }
    }
    Ok(mask)
}
