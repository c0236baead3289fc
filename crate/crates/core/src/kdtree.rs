//! Static 2D k-d tree with exact nearest-neighbor queries.
//!
//! Points are reordered into an implicit balanced layout: the median of each
//! range (split axis alternating with depth) is the node, its halves the
//! subtrees. Distances are squared Euclidean and computed as `dx*dx + dy*dy`.

#[derive(Debug, Clone)]
pub struct KdTree2 {
    points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub point: [f64; 2],
    pub dist_sq: f64,
}

#[inline]
pub fn dist_sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

impl KdTree2 {
    pub fn build(mut points: Vec<[f64; 2]>) -> Self {
        let len = points.len();
        build_range(&mut points, 0, len, 0);
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn nearest(&self, q: [f64; 2]) -> Option<Nearest> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, 0usize);
        self.search(q, 0, self.points.len(), 0, &mut best);
        Some(Nearest {
            point: self.points[best.1],
            dist_sq: best.0,
        })
    }

    fn search(&self, q: [f64; 2], lo: usize, hi: usize, depth: usize, best: &mut (f64, usize)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.points[mid];
        let d = dist_sq(q, p);
        if d < best.0 {
            *best = (d, mid);
        }
        let axis = depth % 2;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(q, near.0, near.1, depth + 1, best);
        if diff * diff < best.0 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build_range(points: &mut [[f64; 2]], lo: usize, hi: usize, depth: usize) {
    if hi - lo <= 1 {
        return;
    }
    let axis = depth % 2;
    let mid = lo + (hi - lo) / 2;
    points[lo..hi].select_nth_unstable_by(mid - lo, |a, b| a[axis].total_cmp(&b[axis]));
    build_range(points, lo, mid, depth + 1);
    build_range(points, mid + 1, hi, depth + 1);
}
