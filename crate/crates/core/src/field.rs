//! Center-direction encoding and the foreground/background loss weights.
//!
//! Rows (`i`, `n`) are vertical and columns (`j`, `m`) horizontal. For pixel
//! `x = (i, j)` with nearest center `y = (n, m)` at distance `r`, the field stores
//! `sin = (m - j) / r` and `cos = (n - i) / r`, so the angle is `atan2(m - j, n - i)`.
//! A pixel sitting exactly on a center has no direction and stores `(0, 0)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{compensated_sum, Grid};
use crate::nearest::NearestCenter;
use crate::points::{Point, PointSet};

/// Two-channel center-direction field.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionField {
    sin: Grid,
    cos: Grid,
}

impl DirectionField {
    pub fn new(sin: Grid, cos: Grid) -> Result<Self> {
        sin.check_same_dims(&cos)?;
        Ok(Self { sin, cos })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            sin: Grid::zeros(height, width),
            cos: Grid::zeros(height, width),
        }
    }

    pub fn height(&self) -> usize {
        self.sin.height()
    }

    pub fn width(&self) -> usize {
        self.sin.width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.sin.dims()
    }

    pub fn sin(&self) -> &Grid {
        &self.sin
    }

    pub fn cos(&self) -> &Grid {
        &self.cos
    }

    pub fn sin_mut(&mut self) -> &mut Grid {
        &mut self.sin
    }

    pub fn cos_mut(&mut self) -> &mut Grid {
        &mut self.cos
    }

    pub fn into_planes(self) -> (Grid, Grid) {
        (self.sin, self.cos)
    }

    pub fn all_finite(&self) -> bool {
        self.sin.all_finite() && self.cos.all_finite()
    }

    /// Zero both channels wherever `mask` is set (row-major, `height * width` long).
    pub fn apply_mask(&mut self, mask: &[bool]) {
        assert_eq!(mask.len(), self.sin.len());
        for (k, &m) in mask.iter().enumerate() {
            if m {
                self.sin.as_mut_slice()[k] = 0.0;
                self.cos.as_mut_slice()[k] = 0.0;
            }
        }
    }
}

/// Encodes the direction to the nearest center at every pixel.
pub fn encode_direction_field(points: &PointSet) -> Result<DirectionField> {
    encode_direction_field_with(points, Exec::default())
}

pub fn encode_direction_field_with(points: &PointSet, exec: Exec) -> Result<DirectionField> {
    if points.is_empty() {
        return Err(Error::NoCenters);
    }
    let (h, w) = points.dims();
    let index = NearestCenter::new(points.points(), h, w);
    let centers = points.points();

    let mut interleaved = vec![0.0; 2 * h * w];
    exec.for_each_row(&mut interleaved, 2 * w, |i, row| {
        let (sin_row, cos_row) = row.split_at_mut(w);
        for j in 0..w {
            let x = Point::new(i as f64, j as f64);
            let near = index.nearest(x);
            if near.dist2 > 0.0 {
                let y = centers[near.index];
                let r = near.dist2.sqrt();
                sin_row[j] = (y.col - x.col) / r;
                cos_row[j] = (y.row - x.row) / r;
            }
        }
    });

    let mut sin = Vec::with_capacity(h * w);
    let mut cos = Vec::with_capacity(h * w);
    for row in interleaved.chunks_exact(2 * w) {
        sin.extend_from_slice(&row[..w]);
        cos.extend_from_slice(&row[w..]);
    }
    DirectionField::new(Grid::from_vec(h, w, sin)?, Grid::from_vec(h, w, cos)?)
}

/// Per-pixel `atan2(sin, cos)` in `(-pi, pi]`; `(0, 0)` decodes to 0.
pub fn decode_angle(field: &DirectionField) -> Grid {
    let (h, w) = field.dims();
    Grid::from_fn(h, w, |i, j| angle_of(field.sin.get(i, j), field.cos.get(i, j)))
}

#[inline]
pub fn angle_of(sin: f64, cos: f64) -> f64 {
    if sin == 0.0 && cos == 0.0 {
        return 0.0;
    }
    let a = sin.atan2(cos);
    // atan2(-0, negative) is -pi; the range is half-open at -pi.
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Loss weights balancing pixels near centers against distant ones.
///
/// `F_k` holds the pixels whose nearest center is `k` and that lie strictly within
/// `epsilon` of it; everything else is background `B`. Each non-empty `F_k` carries a
/// total weight of `1/K` (with `K` the number of non-empty sets) and `B` carries 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    weights: Grid,
    owner: Vec<Option<u32>>,
    epsilon: f64,
}

impl WeightMap {
    pub fn weights(&self) -> &Grid {
        &self.weights
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Center index owning pixel `(i, j)`, `None` for background.
    pub fn owner(&self, i: usize, j: usize) -> Option<usize> {
        self.owner[i * self.weights.width() + j].map(|k| k as usize)
    }

    pub fn is_foreground(&self, i: usize, j: usize) -> bool {
        self.owner(i, j).is_some()
    }

    pub fn foreground_sum(&self) -> f64 {
        self.partial_sum(true)
    }

    pub fn background_sum(&self) -> f64 {
        self.partial_sum(false)
    }

    pub fn foreground_count(&self) -> usize {
        self.owner.iter().filter(|o| o.is_some()).count()
    }

    fn partial_sum(&self, foreground: bool) -> f64 {
        compensated_sum(
            self.weights
                .as_slice()
                .iter()
                .zip(&self.owner)
                .filter(|(_, o)| o.is_some() == foreground)
                .map(|(&w, _)| w),
        )
    }

    /// Weight map with every pixel at `value`, for tests and ad-hoc losses.
    pub fn uniform(height: usize, width: usize, value: f64) -> Self {
        Self {
            weights: Grid::filled(height, width, value),
            owner: vec![None; height * width],
            epsilon: 0.0,
        }
    }

    pub fn from_weights(weights: Grid) -> Result<Self> {
        if weights.as_slice().iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let n = weights.len();
        Ok(Self {
            weights,
            owner: vec![None; n],
            epsilon: 0.0,
        })
    }
}

/// Builds the weight map for cutoff radius `epsilon` (pixels).
pub fn weight_map(points: &PointSet, epsilon: f64) -> Result<WeightMap> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    let (h, w) = points.dims();
    let mut owner: Vec<Option<u32>> = vec![None; h * w];
    if !points.is_empty() && epsilon > 0.0 {
        let index = NearestCenter::new(points.points(), h, w);
        let eps2 = epsilon * epsilon;
        for i in 0..h {
            for j in 0..w {
                let near = index.nearest(Point::new(i as f64, j as f64));
                if near.dist2 < eps2 {
                    owner[i * w + j] = Some(near.index as u32);
                }
            }
        }
    }

    let mut set_sizes = vec![0usize; points.len()];
    for k in owner.iter().flatten() {
        set_sizes[*k as usize] += 1;
    }
    let background = owner.iter().filter(|o| o.is_none()).count();
    if background == 0 {
        return Err(Error::DegenerateBackground);
    }
    let non_empty = set_sizes.iter().filter(|&&s| s > 0).count();

    let data = owner
        .iter()
        .map(|o| match o {
            Some(k) => 1.0 / (non_empty * set_sizes[*k as usize]) as f64,
            None => 1.0 / background as f64,
        })
        .collect();
    Ok(WeightMap {
        weights: Grid::from_vec(h, w, data)?,
        owner,
        epsilon,
    })
}
