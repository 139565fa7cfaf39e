//! Nearest-center lookup on a uniform bucket grid.
//!
//! Results are identical to a linear scan that compares squared distances and keeps
//! the lowest index on ties: buckets are searched in Chebyshev rings until the next
//! ring provably cannot hold anything at or below the current best distance.

use crate::points::Point;

#[derive(Debug, Clone)]
pub struct NearestCenter<'a> {
    points: &'a [Point],
    cell: f64,
    rows: usize,
    cols: usize,
    // CSR layout: bucket b holds `indices[starts[b]..starts[b + 1]]`, ascending.
    starts: Vec<usize>,
    indices: Vec<usize>,
}

/// Index and squared distance of the nearest center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub index: usize,
    pub dist2: f64,
}

impl<'a> NearestCenter<'a> {
    /// `points` must be non-empty and lie inside `[0, height) x [0, width)`.
    pub fn new(points: &'a [Point], height: usize, width: usize) -> Self {
        assert!(!points.is_empty(), "nearest-center index needs at least one point");
        let area = (height * width) as f64;
        let cell = (area / points.len() as f64).sqrt().max(1.0);
        let rows = ((height as f64 / cell).ceil() as usize).max(1);
        let cols = ((width as f64 / cell).ceil() as usize).max(1);

        let bucket_of = |p: &Point| {
            let r = ((p.row / cell) as usize).min(rows - 1);
            let c = ((p.col / cell) as usize).min(cols - 1);
            r * cols + c
        };
        let mut counts = vec![0usize; rows * cols + 1];
        for p in points {
            counts[bucket_of(p) + 1] += 1;
        }
        for b in 0..rows * cols {
            counts[b + 1] += counts[b];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut indices = vec![0usize; points.len()];
        for (i, p) in points.iter().enumerate() {
            let b = bucket_of(p);
            indices[fill[b]] = i;
            fill[b] += 1;
        }

        Self {
            points,
            cell,
            rows,
            cols,
            starts,
            indices,
        }
    }

    pub fn points(&self) -> &'a [Point] {
        self.points
    }

    pub fn nearest(&self, q: Point) -> Nearest {
        let qr = ((q.row.max(0.0) / self.cell) as usize).min(self.rows - 1) as isize;
        let qc = ((q.col.max(0.0) / self.cell) as usize).min(self.cols - 1) as isize;

        let mut best = Nearest {
            index: usize::MAX,
            dist2: f64::INFINITY,
        };
        let max_ring = self.rows.max(self.cols) as isize;
        for ring in 0..=max_ring {
            self.scan_ring(q, qr, qc, ring, &mut best);
            if best.index != usize::MAX {
                let bound = ring as f64 * self.cell;
                // Margin keeps rounding in dist2 from hiding an equal-distance tie.
                if bound * bound > best.dist2 * (1.0 + 1e-9) + 1e-9 {
                    break;
                }
            }
        }
        best
    }

    fn scan_ring(&self, q: Point, qr: isize, qc: isize, ring: isize, best: &mut Nearest) {
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        let r0 = (qr - ring).max(0);
        let r1 = (qr + ring).min(rows - 1);
        for r in r0..=r1 {
            let on_edge_row = (r - qr).abs() == ring;
            let step = if on_edge_row { 1 } else { 2 * ring.max(1) };
            let mut c = qc - ring;
            while c <= qc + ring {
                if c >= 0 && c < cols {
                    self.scan_bucket(q, (r * cols + c) as usize, best);
                }
                if ring == 0 {
                    break;
                }
                c += step;
            }
        }
    }

    #[inline]
    fn scan_bucket(&self, q: Point, bucket: usize, best: &mut Nearest) {
        for &i in &self.indices[self.starts[bucket]..self.starts[bucket + 1]] {
            let d2 = self.points[i].dist2(&q);
            if d2 < best.dist2 || (d2 == best.dist2 && i < best.index) {
                *best = Nearest { index: i, dist2: d2 };
            }
        }
    }
}

/// Linear scan reference: lowest index wins on equal squared distance.
pub fn nearest_linear(points: &[Point], q: Point) -> Nearest {
    let mut best = Nearest {
        index: usize::MAX,
        dist2: f64::INFINITY,
    };
    for (i, p) in points.iter().enumerate() {
        let d2 = p.dist2(&q);
        if d2 < best.dist2 {
            best = Nearest { index: i, dist2: d2 };
        }
    }
    best
}
