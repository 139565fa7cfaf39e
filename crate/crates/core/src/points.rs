use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sub-pixel location, `row` vertical and `col` horizontal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub row: f64,
    pub col: f64,
}

impl Point {
    pub const fn new(row: f64, col: f64) -> Self {
        Self { row, col }
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dr = self.row - other.row;
        let dc = self.col - other.col;
        dr * dr + dc * dc
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Object centers within one `height x width` image.
///
/// Order is significant: nearest-center ties resolve to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    height: usize,
    width: usize,
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(height: usize, width: usize, points: Vec<Point>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDims { height, width });
        }
        for (index, p) in points.iter().enumerate() {
            if !p.row.is_finite() || !p.col.is_finite() {
                return Err(Error::NonFinitePoint {
                    index,
                    row: p.row,
                    col: p.col,
                });
            }
            let inside = p.row >= 0.0
                && p.row < height as f64
                && p.col >= 0.0
                && p.col < width as f64;
            if !inside {
                return Err(Error::PointOutOfBounds {
                    index,
                    row: p.row,
                    col: p.col,
                    height,
                    width,
                });
            }
        }
        Ok(Self {
            height,
            width,
            points,
        })
    }

    pub fn from_coords(height: usize, width: usize, coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            height,
            width,
            coords.iter().map(|&(r, c)| Point::new(r, c)).collect(),
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Shift every point; fails if a shifted point leaves the grid.
    pub fn translated(&self, d_row: f64, d_col: f64) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.points
                .iter()
                .map(|p| Point::new(p.row + d_row, p.col + d_col))
                .collect(),
        )
    }

    /// Mirror columns: `col -> width - 1 - col`.
    pub fn flip_horizontal(&self) -> Result<Self> {
        let w = self.width as f64 - 1.0;
        Self::new(
            self.height,
            self.width,
            self.points
                .iter()
                .map(|p| Point::new(p.row, w - p.col))
                .collect(),
        )
    }

    /// Mirror rows: `row -> height - 1 - row`.
    pub fn flip_vertical(&self) -> Result<Self> {
        let h = self.height as f64 - 1.0;
        Self::new(
            self.height,
            self.width,
            self.points
                .iter()
                .map(|p| Point::new(h - p.row, p.col))
                .collect(),
        )
    }

    /// Smallest pairwise distance, `None` with fewer than two points.
    pub fn min_separation(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, p) in self.points.iter().enumerate() {
            for q in &self.points[a + 1..] {
                let d = p.dist(q);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_points() {
        assert!(matches!(
            PointSet::from_coords(4, 4, &[(f64::NAN, 1.0)]),
            Err(Error::NonFinitePoint { .. })
        ));
        assert!(matches!(
            PointSet::from_coords(4, 4, &[(4.0, 1.0)]),
            Err(Error::PointOutOfBounds { .. })
        ));
        assert!(matches!(
            PointSet::from_coords(0, 4, &[]),
            Err(Error::InvalidDims { .. })
        ));
        assert!(PointSet::from_coords(4, 4, &[(3.99, 0.0)]).is_ok());
    }

    #[test]
    fn min_separation() {
        let p = PointSet::from_coords(10, 10, &[(0., 0.), (3., 4.), (9., 9.)]).unwrap();
        assert_eq!(p.min_separation(), Some(5.0));
    }
}
