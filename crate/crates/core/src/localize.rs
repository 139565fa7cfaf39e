//! Hand-crafted localizer and local-maximum peak extraction.
//!
//! Object centers are sinks of the direction field: above a center `cos` is +1 and
//! below it -1, left of a center `sin` is +1 and right of it -1. A banked edge filter
//! along rows on `cos` and along columns on `sin`, negated, therefore peaks at centers.
//! Each kernel is normalized so an ideal +1/-1 flip scores 1, and scales are averaged,
//! so an isolated center on a clean field scores close to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::DirectionField;
use crate::filter::{block_edge_1d, Axis};
use crate::grid::Grid;
use crate::points::Point;

pub const DEFAULT_KERNEL_SIZES: [usize; 7] = [3, 9, 15, 21, 31, 51, 65];
pub const DEFAULT_NMS_RADIUS: usize = 2;
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizerConfig {
    pub kernel_sizes: Vec<usize>,
    pub nms_radius: usize,
    pub score_threshold: f64,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        Self {
            kernel_sizes: DEFAULT_KERNEL_SIZES.to_vec(),
            nms_radius: DEFAULT_NMS_RADIUS,
            score_threshold: DEFAULT_SCORE_THRESHOLD,
        }
    }
}

impl LocalizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_sizes.is_empty() {
            return Err(Error::InvalidParameter("no kernel sizes".into()));
        }
        for &k in &self.kernel_sizes {
            check_kernel_size(k)?;
        }
        if self.nms_radius < 1 {
            return Err(Error::InvalidParameter("nms radius must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_kernel_size(k: usize) -> Result<()> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "kernel size must be odd and >= 3, got {k}"
        )));
    }
    Ok(())
}

/// `[-1; (k-1)/2] ++ [0] ++ [+1; (k-1)/2]`, scaled by `1 / (k - 1)`.
pub fn edge_kernel(k: usize) -> Result<Vec<f64>> {
    check_kernel_size(k)?;
    let half = (k - 1) / 2;
    let scale = 1.0 / (k - 1) as f64;
    Ok((0..k)
        .map(|t| match t.cmp(&half) {
            std::cmp::Ordering::Less => -scale,
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => scale,
        })
        .collect())
}

/// Which axis each channel is differentiated along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelAxes {
    /// `cos` along rows, `sin` along columns: the axis on which each channel flips sign
    /// across a center.
    Standard,
    /// Transposed assignment, kept for comparison.
    Swapped,
}

pub fn handcrafted_response(field: &DirectionField, config: &LocalizerConfig) -> Result<Grid> {
    handcrafted_response_with(field, config, ChannelAxes::Standard, Exec::default())
}

pub fn handcrafted_response_with(
    field: &DirectionField,
    config: &LocalizerConfig,
    axes: ChannelAxes,
    exec: Exec,
) -> Result<Grid> {
    config.validate()?;
    if !field.all_finite() {
        return Err(Error::NonFinite("direction field"));
    }
    let (cos_axis, sin_axis) = match axes {
        ChannelAxes::Standard => (Axis::Vertical, Axis::Horizontal),
        ChannelAxes::Swapped => (Axis::Horizontal, Axis::Vertical),
    };
    let (h, w) = field.dims();
    let mut acc = Grid::zeros(h, w);
    for &k in &config.kernel_sizes {
        let half = (k - 1) / 2;
        let dc = block_edge_1d(field.cos(), half, cos_axis, exec);
        let ds = block_edge_1d(field.sin(), half, sin_axis, exec);
        for ((a, c), s) in acc
            .as_mut_slice()
            .iter_mut()
            .zip(dc.as_slice())
            .zip(ds.as_slice())
        {
            *a -= c + s;
        }
    }
    let norm = 1.0 / (2 * config.kernel_sizes.len()) as f64;
    Ok(acc.map(|v| v * norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub row: f64,
    pub col: f64,
    pub score: f64,
}

impl Detection {
    pub fn point(&self) -> Point {
        Point::new(self.row, self.col)
    }
}

/// Detections ordered by score descending, then `(row, col)` ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionList {
    detections: Vec<Detection>,
}

impl DetectionList {
    pub fn new(mut detections: Vec<Detection>) -> Self {
        detections.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.row.total_cmp(&b.row))
                .then(a.col.total_cmp(&b.col))
        });
        Self { detections }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn as_slice(&self) -> &[Detection] {
        &self.detections
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Detection> {
        self.detections.iter()
    }

    pub fn points(&self) -> Vec<Point> {
        self.detections.iter().map(Detection::point).collect()
    }

    /// Detections with `score >= threshold`, order preserved.
    pub fn above(&self, threshold: f64) -> Vec<Point> {
        self.detections
            .iter()
            .take_while(|d| d.score >= threshold)
            .map(Detection::point)
            .collect()
    }

    pub fn into_vec(self) -> Vec<Detection> {
        self.detections
    }
}

/// Window-maximum peak extraction.
///
/// A pixel is a peak when its score is at least `threshold` and no pixel in its
/// `(2 r + 1)^2` window scores higher. Equal scores in the window suppress the pixel
/// unless it is the lexicographically smallest `(row, col)` among them.
pub fn find_peaks(score: &Grid, threshold: f64, nms_radius: usize) -> Result<DetectionList> {
    if nms_radius < 1 {
        return Err(Error::InvalidParameter("nms radius must be >= 1".into()));
    }
    let (h, w) = score.dims();
    let r = nms_radius as isize;
    let mut out = Vec::new();
    for i in 0..h {
        'pixel: for j in 0..w {
            let s = score.get(i, j);
            if !(s >= threshold) {
                continue;
            }
            for di in -r..=r {
                let y = i as isize + di;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for dj in -r..=r {
                    let x = j as isize + dj;
                    if x < 0 || x >= w as isize || (di == 0 && dj == 0) {
                        continue;
                    }
                    let v = score.get(y as usize, x as usize);
                    let earlier = di < 0 || (di == 0 && dj < 0);
                    if v > s || (v == s && earlier) {
                        continue 'pixel;
                    }
                }
            }
            out.push(Detection {
                row: i as f64,
                col: j as f64,
                score: s,
            });
        }
    }
    Ok(DetectionList::new(out))
}

/// Hand-crafted response followed by peak extraction at the configured threshold.
pub fn localize(field: &DirectionField, config: &LocalizerConfig) -> Result<DetectionList> {
    localize_with(field, config, Exec::default())
}

pub fn localize_with(field: &DirectionField, config: &LocalizerConfig, exec: Exec) -> Result<DetectionList> {
    let response = handcrafted_response_with(field, config, ChannelAxes::Standard, exec)?;
    find_peaks(&response, config.score_threshold, config.nms_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::encode_direction_field;
    use crate::filter::correlate_1d;
    use crate::points::PointSet;

    #[test]
    fn kernels() {
        assert_eq!(edge_kernel(3).unwrap(), vec![-0.5, 0.0, 0.5]);
        assert_eq!(edge_kernel(5).unwrap(), vec![-0.25, -0.25, 0.0, 0.25, 0.25]);
        assert!(edge_kernel(4).is_err());
        assert!(edge_kernel(1).is_err());
        let flat = Grid::filled(1, 9, 0.7);
        let r = correlate_1d(&flat, &edge_kernel(3).unwrap(), Axis::Horizontal, Exec::Sequential).unwrap();
        assert!(r.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_flip_scores_one() {
        for k in DEFAULT_KERNEL_SIZES {
            let half = (k - 1) / 2;
            let line = Grid::from_fn(1, 2 * half + 1, |_, j| match j.cmp(&half) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => -1.0,
            });
            let r = correlate_1d(&line, &edge_kernel(k).unwrap(), Axis::Horizontal, Exec::Sequential)
                .unwrap();
            assert!((r.get(0, half) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_center_peaks_at_center() {
        let pts = PointSet::from_coords(64, 64, &[(32.0, 32.0)]).unwrap();
        let field = encode_direction_field(&pts).unwrap();
        let resp = handcrafted_response(&field, &LocalizerConfig::default()).unwrap();
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for i in 0..64 {
            for j in 0..64 {
                if resp.get(i, j) > best {
                    best = resp.get(i, j);
                    at = (i, j);
                }
            }
        }
        assert_eq!(at, (32, 32));
        assert!((best - 1.0).abs() < 1e-12, "{best}");
    }

    #[test]
    fn constant_field_gives_zero() {
        let f = DirectionField::new(Grid::filled(20, 30, 0.5), Grid::filled(20, 30, 0.5)).unwrap();
        let resp = handcrafted_response(&f, &LocalizerConfig::default()).unwrap();
        assert!(resp.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_separated_centers() {
        let pts = PointSet::from_coords(64, 96, &[(30.0, 20.0), (34.0, 70.0)]).unwrap();
        let field = encode_direction_field(&pts).unwrap();
        let resp = handcrafted_response(&field, &LocalizerConfig::default()).unwrap();
        let peaks = find_peaks(&resp, 0.5, DEFAULT_NMS_RADIUS).unwrap();
        assert_eq!(peaks.len(), 2, "{peaks:?}");
        let got: Vec<(f64, f64)> = peaks.iter().map(|d| (d.row, d.col)).collect();
        assert!(got.contains(&(30.0, 20.0)) && got.contains(&(34.0, 70.0)), "{got:?}");
    }

    #[test]
    fn axis_assignment_matters() {
        let pts = PointSet::from_coords(64, 64, &[(32.0, 32.0)]).unwrap();
        let field = encode_direction_field(&pts).unwrap();
        let cfg = LocalizerConfig::default();
        let good = handcrafted_response_with(&field, &cfg, ChannelAxes::Standard, Exec::Sequential).unwrap();
        let bad = handcrafted_response_with(&field, &cfg, ChannelAxes::Swapped, Exec::Sequential).unwrap();
        assert!(good.get(32, 32) > bad.get(32, 32) + 0.5);
    }

    #[test]
    fn peaks_single_spike() {
        let mut g = Grid::zeros(7, 7);
        g.set(3, 4, 1.0);
        let p = find_peaks(&g, 0.5, 2).unwrap();
        assert_eq!(p.as_slice(), &[Detection { row: 3.0, col: 4.0, score: 1.0 }]);
    }

    #[test]
    fn peaks_plateau_keeps_top_left() {
        let mut g = Grid::zeros(6, 6);
        for (i, j) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
            g.set(i, j, 0.8);
        }
        let p = find_peaks(&g, 0.5, 2).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!((p.as_slice()[0].row, p.as_slice()[0].col), (2.0, 2.0));
    }

    #[test]
    fn peaks_respect_threshold() {
        let mut g = Grid::zeros(10, 10);
        g.set(2, 2, 0.9);
        g.set(7, 7, 0.3);
        let p = find_peaks(&g, 0.5, 2).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.as_slice()[0].score, 0.9);
        assert!(find_peaks(&g, 0.5, 0).is_err());
    }

    #[test]
    fn detection_order() {
        let l = DetectionList::new(vec![
            Detection { row: 5.0, col: 1.0, score: 0.5 },
            Detection { row: 1.0, col: 1.0, score: 0.9 },
            Detection { row: 2.0, col: 0.0, score: 0.5 },
        ]);
        let rows: Vec<f64> = l.iter().map(|d| d.row).collect();
        assert_eq!(rows, vec![1.0, 2.0, 5.0]);
        assert_eq!(l.above(0.6).len(), 1);
    }
}
