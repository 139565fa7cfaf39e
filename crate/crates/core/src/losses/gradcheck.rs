//! Central finite-difference verification of the analytic loss gradients.

use super::{
    focal_loss, localization_l1_loss, localization_target, regression_loss, FocalParams,
    DEFAULT_TARGET_SIGMA, DEFAULT_TARGET_XI, DEFAULT_W_FG, FOCAL_CLAMP,
};
use crate::error::Result;
use crate::field::{encode_direction_field, weight_map, DirectionField, WeightMap};
use crate::grid::Grid;
use crate::points::{Point, PointSet};
use crate::rng::SplitMix64;

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Regression,
    LocalizationL1,
    Focal,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Regression, LossKind::LocalizationL1, LossKind::Focal];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Regression => "regression",
            LossKind::LocalizationL1 => "localization_l1",
            LossKind::Focal => "focal",
        }
    }
}

/// A loss evaluation point: prediction, target and loss parameters.
#[derive(Debug, Clone)]
pub enum Instance {
    Regression {
        pred: DirectionField,
        gt: DirectionField,
        weights: WeightMap,
    },
    LocalizationL1 {
        pred: Grid,
        target: Grid,
        w_fg: f64,
    },
    Focal {
        pred: Grid,
        target: Grid,
        params: FocalParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

fn random_points(rng: &mut SplitMix64, h: usize, w: usize) -> PointSet {
    let n = rng.range_inclusive(1, 3) as usize;
    let pts = (0..n)
        .map(|_| Point::new(rng.uniform(0.0, h as f64), rng.uniform(0.0, w as f64)))
        .collect();
    PointSet::new(h, w, pts).expect("in-bounds by construction")
}

impl Instance {
    pub fn kind(&self) -> LossKind {
        match self {
            Instance::Regression { .. } => LossKind::Regression,
            Instance::LocalizationL1 { .. } => LossKind::LocalizationL1,
            Instance::Focal { .. } => LossKind::Focal,
        }
    }

    /// Random `h x w` instance built from 1-3 random centers.
    pub fn random(kind: LossKind, h: usize, w: usize, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let points = random_points(&mut rng, h, w);
        Ok(match kind {
            LossKind::Regression => {
                let gt = encode_direction_field(&points)?;
                let jitter = |g: &Grid, rng: &mut SplitMix64| {
                    Grid::from_fn(h, w, |i, j| g.get(i, j) + 0.3 * rng.normal())
                };
                let pred = DirectionField::new(jitter(gt.sin(), &mut rng), jitter(gt.cos(), &mut rng))?;
                let eps = ((h.min(w)) as f64 / 4.0).max(1.0);
                let weights = weight_map(&points, eps)?;
                Instance::Regression { pred, gt, weights }
            }
            LossKind::LocalizationL1 => {
                let target = localization_target(&points, DEFAULT_TARGET_SIGMA, DEFAULT_TARGET_XI)?;
                let pred = Grid::from_fn(h, w, |_, _| rng.next_f64());
                Instance::LocalizationL1 {
                    pred,
                    target,
                    w_fg: DEFAULT_W_FG,
                }
            }
            LossKind::Focal => {
                let target = localization_target(&points, DEFAULT_TARGET_SIGMA, DEFAULT_TARGET_XI)?;
                let pred = Grid::from_fn(h, w, |_, _| rng.uniform(0.02, 0.98));
                Instance::Focal {
                    pred,
                    target,
                    params: FocalParams::default(),
                }
            }
        })
    }

    fn num_coords(&self) -> usize {
        match self {
            Instance::Regression { pred, .. } => 2 * pred.sin().len(),
            Instance::LocalizationL1 { pred, .. } | Instance::Focal { pred, .. } => pred.len(),
        }
    }

    /// Loss value and flattened gradient (sin plane then cos plane for fields).
    pub fn evaluate(&self) -> Result<(f64, Vec<f64>)> {
        Ok(match self {
            Instance::Regression { pred, gt, weights } => {
                let r = regression_loss(pred, gt, weights)?;
                let mut g = r.grad.sin().as_slice().to_vec();
                g.extend_from_slice(r.grad.cos().as_slice());
                (r.value, g)
            }
            Instance::LocalizationL1 { pred, target, w_fg } => {
                let r = localization_l1_loss(pred, target, *w_fg)?;
                (r.value, r.grad.into_vec())
            }
            Instance::Focal {
                pred,
                target,
                params,
            } => {
                let r = focal_loss(pred, target, params)?;
                (r.value, r.grad.into_vec())
            }
        })
    }

    fn pred_and_target(&self, coord: usize) -> (f64, f64) {
        match self {
            Instance::Regression { pred, gt, .. } => {
                let n = pred.sin().len();
                if coord < n {
                    (pred.sin().as_slice()[coord], gt.sin().as_slice()[coord])
                } else {
                    (pred.cos().as_slice()[coord - n], gt.cos().as_slice()[coord - n])
                }
            }
            Instance::LocalizationL1 { pred, target, .. } | Instance::Focal { pred, target, .. } => {
                (pred.as_slice()[coord], target.as_slice()[coord])
            }
        }
    }

    fn perturbed(&self, coord: usize, delta: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Instance::Regression { pred, .. } => {
                let n = pred.sin().len();
                if coord < n {
                    pred.sin_mut().as_mut_slice()[coord] += delta;
                } else {
                    pred.cos_mut().as_mut_slice()[coord - n] += delta;
                }
            }
            Instance::LocalizationL1 { pred, .. } | Instance::Focal { pred, .. } => {
                pred.as_mut_slice()[coord] += delta;
            }
        }
        out
    }

    /// True when a +-`step` perturbation of `coord` crosses a non-differentiable point.
    fn near_kink(&self, coord: usize, step: f64) -> bool {
        let (p, t) = self.pred_and_target(coord);
        match self {
            Instance::Regression { .. } | Instance::LocalizationL1 { .. } => (p - t).abs() <= 2.0 * step,
            Instance::Focal { .. } => p <= FOCAL_CLAMP + 2.0 * step || p >= 1.0 - FOCAL_CLAMP - 2.0 * step,
        }
    }
}

/// Max over all non-kink coordinates of `|analytic - central| / max(1, |central|)`.
pub fn finite_difference_check(instance: &Instance, step: f64) -> Result<GradCheck> {
    let (_, analytic) = instance.evaluate()?;
    let mut out = GradCheck {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (coord, &a) in analytic.iter().enumerate().take(instance.num_coords()) {
        if instance.near_kink(coord, step) {
            out.skipped += 1;
            continue;
        }
        let (plus, _) = instance.perturbed(coord, step).evaluate()?;
        let (minus, _) = instance.perturbed(coord, -step).evaluate()?;
        let central = (plus - minus) / (2.0 * step);
        let rel = (a - central).abs() / central.abs().max(1.0);
        out.max_rel_error = out.max_rel_error.max(rel);
        out.checked += 1;
    }
    Ok(out)
}

/// Summary of a gradient-check suite over one loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteResult {
    pub kind: LossKind,
    pub instances: usize,
    pub worst: f64,
    pub passed: bool,
}

/// Checks `instances` random `size x size` instances of `kind` against `tolerance`.
pub fn run_suite(
    kind: LossKind,
    instances: usize,
    size: usize,
    seed: u64,
    tolerance: f64,
) -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    for k in 0..instances {
        let inst = Instance::random(kind, size, size, crate::rng::derive_seed(seed, k as u64))?;
        worst = worst.max(finite_difference_check(&inst, DEFAULT_STEP)?.max_rel_error);
    }
    Ok(SuiteResult {
        kind,
        instances,
        worst,
        passed: worst < tolerance,
    })
}
