//! Seeded synthetic scenes for training and stress-testing localizers.
//!
//! A scene is a random point set (drawn inside the pixel-center hull
//! `[0, H - 1] x [0, W - 1]`), its clean direction field, a corrupted copy
//! (blurred Gaussian noise and circular occlusions around centers) and the Gaussian
//! localization target. All randomness comes from one `u64` seed split into keyed
//! SplitMix64 child streams, so scenes are reproducible bit for bit.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{encode_direction_field, DirectionField};
use crate::filter::gaussian_blur;
use crate::grid::Grid;
use crate::losses::{localization_target, DEFAULT_TARGET_SIGMA, DEFAULT_TARGET_XI};
use crate::points::{Point, PointSet};
use crate::rng::{derive_seed, SplitMix64};

const STREAM_COUNT: u64 = 0;
const STREAM_PLACE: u64 = 1;
const STREAM_CLUSTER: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_OCCLUDE: u64 = 4;

/// Blur applied to uniform noise before thresholding it into an occlusion mask.
pub const OCCLUSION_NOISE_BLUR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    /// Inclusive range for the number of primary points.
    pub n_points_range: (u64, u64),
    pub cluster_prob: f64,
    /// Inclusive range for the number of extra points around a clustered point.
    pub cluster_count_range: (u64, u64),
    pub cluster_radius: f64,
    pub noise_prob: f64,
    pub noise_sigma_range: (f64, f64),
    pub noise_blur_sigma: f64,
    pub occl_prob: f64,
    pub occl_perturb_prob: f64,
    pub occl_radius_min: f64,
    /// Maximum occlusion radius as a fraction of the image diagonal.
    pub occl_radius_frac: f64,
    /// Minimum distance between primary points.
    pub min_separation: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            height: 512,
            width: 512,
            n_points_range: (5, 50),
            cluster_prob: 0.25,
            cluster_count_range: (2, 5),
            cluster_radius: 15.0,
            noise_prob: 0.25,
            noise_sigma_range: (0.1, 2.0),
            noise_blur_sigma: 3.0,
            occl_prob: 0.75,
            occl_perturb_prob: 0.5,
            occl_radius_min: 5.0,
            occl_radius_frac: 0.025,
            min_separation: 10.0,
        }
    }
}

impl SynthConfig {
    /// Clean, well-separated scenes: no clusters, no corruption.
    pub fn separated(size: usize, min_separation: f64) -> Self {
        Self {
            height: size,
            width: size,
            cluster_prob: 0.0,
            noise_prob: 0.0,
            occl_prob: 0.0,
            min_separation,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidDims {
                height: self.height,
                width: self.width,
            });
        }
        for (name, p) in [
            ("cluster_prob", self.cluster_prob),
            ("noise_prob", self.noise_prob),
            ("occl_prob", self.occl_prob),
            ("occl_perturb_prob", self.occl_perturb_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must be in [0, 1], got {p}"));
            }
        }
        let (lo, hi) = self.n_points_range;
        if lo < 1 || lo > hi {
            return bad("n_points_range must be a non-empty range starting at >= 1");
        }
        let (lo, hi) = self.cluster_count_range;
        if lo > hi {
            return bad("cluster_count_range is empty");
        }
        let (lo, hi) = self.noise_sigma_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return bad("noise_sigma_range must satisfy 0 <= lo <= hi");
        }
        if !(self.noise_blur_sigma > 0.0) {
            return bad("noise_blur_sigma must be positive");
        }
        for (name, v) in [
            ("cluster_radius", self.cluster_radius),
            ("occl_radius_min", self.occl_radius_min),
            ("occl_radius_frac", self.occl_radius_frac),
            ("min_separation", self.min_separation),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    pub fn diagonal(&self) -> f64 {
        (self.height as f64).hypot(self.width as f64)
    }

    /// `(r_min, r_max)` for center occlusions; `r_max` never drops below `r_min`.
    pub fn occlusion_radius_range(&self) -> (f64, f64) {
        let r_max = self.occl_radius_frac * self.diagonal();
        (self.occl_radius_min, r_max.max(self.occl_radius_min))
    }

    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams {
            prob: self.noise_prob,
            sigma_range: self.noise_sigma_range,
            blur_sigma: self.noise_blur_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub points: PointSet,
    pub clean_field: DirectionField,
    pub corrupted_field: DirectionField,
    pub target: Grid,
    pub seed: u64,
}

/// Last pixel-center coordinate along an axis of `n` pixels.
///
/// Points are kept within the pixel-center hull so that every center has pixels on
/// both sides of it along each axis.
fn last_pixel(n: usize) -> f64 {
    n.saturating_sub(1) as f64
}

fn sample_points(config: &SynthConfig, seed: u64) -> Result<Vec<Point>> {
    let root = SplitMix64::new(seed);
    let (h, w) = (last_pixel(config.height), last_pixel(config.width));

    let mut count_rng = root.child(STREAM_COUNT);
    let (lo, hi) = config.n_points_range;
    let n = count_rng.range_inclusive(lo, hi) as usize;

    let mut place = root.child(STREAM_PLACE);
    let min2 = config.min_separation * config.min_separation;
    let attempts = 10 * n;
    let mut primary: Vec<Point> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut placed = false;
        for _ in 0..attempts {
            let p = Point::new(place.uniform(0.0, h), place.uniform(0.0, w));
            if primary.iter().all(|q| q.dist2(&p) >= min2) {
                primary.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::CannotPlacePoints {
                placed: primary.len(),
                requested: n,
            });
        }
    }

    let cluster_root = root.child(STREAM_CLUSTER);
    let mut all = primary.clone();
    for (k, p) in primary.iter().enumerate() {
        let mut rng = cluster_root.child(k as u64);
        if !rng.bernoulli(config.cluster_prob) {
            continue;
        }
        let (lo, hi) = config.cluster_count_range;
        let extra = rng.range_inclusive(lo, hi);
        for _ in 0..extra {
            let mut q = *p;
            for _ in 0..64 {
                let rho = config.cluster_radius * rng.next_f64().sqrt();
                let theta = TAU * rng.next_f64();
                q = Point::new(p.row + rho * theta.sin(), p.col + rho * theta.cos());
                if q.row >= 0.0 && q.row <= h && q.col >= 0.0 && q.col <= w {
                    break;
                }
            }
            q.row = q.row.clamp(0.0, h);
            q.col = q.col.clamp(0.0, w);
            all.push(q);
        }
    }
    Ok(all)
}

/// Generates one scene; the same `(config, seed)` always yields the same scene.
pub fn generate_scene(config: &SynthConfig, seed: u64) -> Result<SynthScene> {
    config.validate()?;
    let points = PointSet::new(config.height, config.width, sample_points(config, seed)?)?;
    let clean_field = encode_direction_field(&points)?;
    let target = localization_target(&points, DEFAULT_TARGET_SIGMA, DEFAULT_TARGET_XI)?;
    let noisy = add_gaussian_noise(&clean_field, derive_seed(seed, STREAM_NOISE), &config.noise_params())?;
    let corrupted_field = add_occlusions(&noisy, &points, derive_seed(seed, STREAM_OCCLUDE), config)?;
    Ok(SynthScene {
        points,
        clean_field,
        corrupted_field,
        target,
        seed,
    })
}

/// Seed of scene `index` in a batch started from `base_seed`.
pub fn scene_seed(base_seed: u64, index: u64) -> u64 {
    derive_seed(base_seed, index)
}

/// Generates `count` scenes with seeds `scene_seed(base_seed, 0..count)`.
pub fn generate_scenes(config: &SynthConfig, base_seed: u64, count: usize, exec: Exec) -> Result<Vec<SynthScene>> {
    exec.map_range(count, |k| generate_scene(config, scene_seed(base_seed, k as u64)))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub prob: f64,
    pub sigma_range: (f64, f64),
    pub blur_sigma: f64,
}

/// With probability `prob`, adds blurred zero-mean Gaussian noise to both channels
/// (independent planes), noise sigma drawn from `sigma_range`. Values are not clamped.
pub fn add_gaussian_noise(field: &DirectionField, seed: u64, params: &NoiseParams) -> Result<DirectionField> {
    if !(params.blur_sigma > 0.0) {
        return Err(Error::InvalidParameter("blur sigma must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    if !rng.bernoulli(params.prob) {
        return Ok(field.clone());
    }
    let (lo, hi) = params.sigma_range;
    let sigma = rng.uniform(lo, hi);
    let (h, w) = field.dims();
    let noise_plane = |tag: u64| -> Result<Grid> {
        let mut r = rng.child(tag);
        let raw = Grid::from_fn(h, w, |_, _| sigma * r.normal());
        gaussian_blur(&raw, params.blur_sigma, Exec::Sequential)
    };
    let ns = noise_plane(1)?;
    let nc = noise_plane(2)?;
    let add = |a: &Grid, b: &Grid| -> Result<Grid> {
        Grid::from_vec(h, w, a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + y).collect())
    };
    DirectionField::new(add(field.sin(), &ns)?, add(field.cos(), &nc)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    #[inline]
    pub fn contains(&self, row: f64, col: f64) -> bool {
        self.center.dist2(&Point::new(row, col)) <= self.radius * self.radius
    }
}

/// Occlusion disks drawn for `points`: each point independently with probability
/// `occl_prob`, radius `r_min + (r_max - r_min) sqrt(u)`, and with probability
/// `occl_perturb_prob` the disk center is moved uniformly within `r / 2`.
pub fn occlusion_disks(points: &PointSet, seed: u64, config: &SynthConfig) -> Vec<Disk> {
    let root = SplitMix64::new(seed);
    let (r_min, r_max) = config.occlusion_radius_range();
    let mut disks = Vec::new();
    for (k, p) in points.points().iter().enumerate() {
        let mut rng = root.child(k as u64);
        if !rng.bernoulli(config.occl_prob) {
            continue;
        }
        let radius = r_min + (r_max - r_min) * rng.next_f64().sqrt();
        let mut center = *p;
        if rng.bernoulli(config.occl_perturb_prob) {
            let rho = 0.5 * radius * rng.next_f64().sqrt();
            let theta = TAU * rng.next_f64();
            center = Point::new(p.row + rho * theta.sin(), p.col + rho * theta.cos());
        }
        disks.push(Disk { center, radius });
    }
    disks
}

/// Zeroes both channels inside every disk.
pub fn apply_disks(field: &mut DirectionField, disks: &[Disk]) {
    let (h, w) = field.dims();
    for d in disks {
        let i0 = (d.center.row - d.radius).floor().max(0.0) as usize;
        let i1 = ((d.center.row + d.radius).ceil().max(0.0) as usize).min(h.saturating_sub(1));
        let j0 = (d.center.col - d.radius).floor().max(0.0) as usize;
        let j1 = ((d.center.col + d.radius).ceil().max(0.0) as usize).min(w.saturating_sub(1));
        for i in i0..=i1 {
            for j in j0..=j1 {
                if d.contains(i as f64, j as f64) {
                    field.sin_mut().set(i, j, 0.0);
                    field.cos_mut().set(i, j, 0.0);
                }
            }
        }
    }
}

pub fn add_occlusions(
    field: &DirectionField,
    points: &PointSet,
    seed: u64,
    config: &SynthConfig,
) -> Result<DirectionField> {
    config.validate()?;
    if field.dims() != points.dims() {
        return Err(Error::ShapeMismatch {
            expected: field.dims(),
            found: points.dims(),
        });
    }
    let mut out = field.clone();
    apply_disks(&mut out, &occlusion_disks(points, seed, config));
    Ok(out)
}

/// Blurred uniform noise ranked once, so masks for any fraction can be cut from it.
///
/// Masks from the same noise are nested: a larger fraction occludes a superset.
#[derive(Debug, Clone)]
pub struct OcclusionNoise {
    height: usize,
    width: usize,
    /// Pixel indices by blurred value, descending (ties by index).
    order: Vec<usize>,
}

impl OcclusionNoise {
    pub fn new(height: usize, width: usize, seed: u64, exec: Exec) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let raw = Grid::from_fn(height, width, |_, _| rng.next_f64());
        let blurred = gaussian_blur(&raw, OCCLUSION_NOISE_BLUR, exec)?;
        let v = blurred.as_slice();
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
        Ok(Self {
            height,
            width,
            order,
        })
    }

    /// Row-major mask with exactly `round(fraction * H * W)` pixels set.
    pub fn mask(&self, fraction: f64) -> Result<Vec<bool>> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidParameter(format!(
                "occlusion fraction must be in [0, 1], got {fraction}"
            )));
        }
        let n = self.height * self.width;
        let count = ((fraction * n as f64).round() as usize).min(n);
        let mut mask = vec![false; n];
        for &k in &self.order[..count] {
            mask[k] = true;
        }
        Ok(mask)
    }
}

/// Blob-shaped occlusion mask covering `fraction` of the image.
pub fn occlusion_noise_mask(height: usize, width: usize, fraction: f64, seed: u64) -> Result<Vec<bool>> {
    OcclusionNoise::new(height, width, seed, Exec::default())?.mask(fraction)
}
