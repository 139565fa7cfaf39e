//! Losses for center-direction regression and center localization.
//!
//! Every loss returns its value together with the analytic gradient with respect to
//! the prediction. L1 terms use the subgradient `sign(0) = 0`. All arithmetic is `f64`.

pub mod gradcheck;

use crate::error::{Error, Result};
use crate::field::{DirectionField, WeightMap};
use crate::grid::Grid;
use crate::nearest::NearestCenter;
use crate::points::{Point, PointSet};

pub const DEFAULT_TARGET_SIGMA: f64 = 2.5;
pub const DEFAULT_TARGET_XI: f64 = 1.0;
pub const DEFAULT_W_FG: f64 = 50.0;
/// Predictions are clamped to `[FOCAL_CLAMP, 1 - FOCAL_CLAMP]` before the focal loss.
pub const FOCAL_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult<G> {
    pub value: f64,
    /// d value / d prediction, same shape as the prediction.
    pub grad: G,
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Weighted per-pixel L1 distance between predicted and target direction fields,
/// summed over both channels.
pub fn regression_loss(
    pred: &DirectionField,
    gt: &DirectionField,
    weights: &WeightMap,
) -> Result<LossResult<DirectionField>> {
    let w = weights.weights();
    pred.sin().check_same_dims(gt.sin())?;
    pred.sin().check_same_dims(w)?;

    let (h, wd) = pred.dims();
    let mut value = 0.0;
    let mut g_sin = Grid::zeros(h, wd);
    let mut g_cos = Grid::zeros(h, wd);
    let channels = [
        (pred.sin(), gt.sin(), &mut g_sin),
        (pred.cos(), gt.cos(), &mut g_cos),
    ];
    for (p, t, g) in channels {
        for (k, ((&pv, &tv), &wv)) in p
            .as_slice()
            .iter()
            .zip(t.as_slice())
            .zip(w.as_slice())
            .enumerate()
        {
            let d = pv - tv;
            value += wv * d.abs();
            g.as_mut_slice()[k] = wv * sign(d);
        }
    }
    Ok(LossResult {
        value,
        grad: DirectionField::new(g_sin, g_cos)?,
    })
}

/// Localization target `min(1, exp(-(d - xi) / (2 sigma^2)))`, `d` the distance to the
/// nearest center.
pub fn localization_target(points: &PointSet, sigma: f64, xi: f64) -> Result<Grid> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !xi.is_finite() {
        return Err(Error::InvalidParameter("xi must be finite".into()));
    }
    if points.is_empty() {
        return Err(Error::NoCenters);
    }
    let (h, w) = points.dims();
    let index = NearestCenter::new(points.points(), h, w);
    Ok(Grid::from_fn(h, w, |i, j| {
        let d = index.nearest(Point::new(i as f64, j as f64)).dist2.sqrt();
        target_value(d, sigma, xi)
    }))
}

#[inline]
pub fn target_value(distance: f64, sigma: f64, xi: f64) -> f64 {
    (-(distance - xi) / (2.0 * sigma * sigma)).exp().min(1.0)
}

/// Mean L1 error with foreground pixels (`target > 0`) weighted by `w_fg`.
pub fn localization_l1_loss(pred: &Grid, target: &Grid, w_fg: f64) -> Result<LossResult<Grid>> {
    if !(w_fg >= 1.0) || !w_fg.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "w_fg must be >= 1, got {w_fg}"
        )));
    }
    pred.check_same_dims(target)?;
    let norm = 1.0 / pred.len() as f64;
    let mut value = 0.0;
    let mut grad = Grid::zeros(pred.height(), pred.width());
    for (k, (&p, &t)) in pred.as_slice().iter().zip(target.as_slice()).enumerate() {
        let wc = if t > 0.0 { w_fg } else { 1.0 };
        let d = p - t;
        value += wc * d.abs();
        grad.as_mut_slice()[k] = wc * sign(d) * norm;
    }
    Ok(LossResult {
        value: value * norm,
        grad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalParams {
    pub w_cent: f64,
    pub a: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self {
            w_cent: 1.0,
            a: 1.0 / 16.0,
            delta: 4.0,
            gamma: 5.0,
        }
    }
}

impl FocalParams {
    fn validate(&self) -> Result<()> {
        let ok = self.w_cent >= 0.0
            && self.a > 0.0
            && self.delta >= 0.0
            && self.gamma >= 0.0
            && [self.w_cent, self.a, self.delta, self.gamma]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("focal params {self:?}")))
        }
    }
}

/// Per-pixel focal term and its derivative in the (clamped) prediction.
#[inline]
fn focal_term(p: f64, t: f64, fp: &FocalParams) -> (f64, f64) {
    let g = fp.gamma;
    if t == 1.0 {
        let q = 1.0 - p;
        let v = -q.powf(g) * p.ln();
        let d = g * q.powf(g - 1.0) * p.ln() - q.powf(g) / p;
        (v, d)
    } else {
        let scale = fp.a * (1.0 - t).powf(fp.delta);
        let l = (1.0 - p).ln();
        let v = -scale * p.powf(g) * l;
        let d = -scale * (g * p.powf(g - 1.0) * l - p.powf(g) / (1.0 - p));
        (v, d)
    }
}

/// Focal-loss variant of the localization loss.
///
/// Pixels with target exactly 1 use the positive branch, all others the down-weighted
/// negative branch. Outside the clamp range the gradient is 0.
pub fn focal_loss(pred: &Grid, target: &Grid, params: &FocalParams) -> Result<LossResult<Grid>> {
    params.validate()?;
    pred.check_same_dims(target)?;
    if !pred.all_finite() {
        return Err(Error::NonFinite("focal prediction"));
    }
    if !target.all_finite() {
        return Err(Error::NonFinite("focal target"));
    }
    let scale = params.w_cent / pred.len() as f64;
    let mut value = 0.0;
    let mut grad = Grid::zeros(pred.height(), pred.width());
    for (k, (&raw, &t)) in pred.as_slice().iter().zip(target.as_slice()).enumerate() {
        let p = raw.clamp(FOCAL_CLAMP, 1.0 - FOCAL_CLAMP);
        let (v, d) = focal_term(p, t, params);
        value += v;
        let inside = raw > FOCAL_CLAMP && raw < 1.0 - FOCAL_CLAMP;
        grad.as_mut_slice()[k] = if inside { scale * d } else { 0.0 };
    }
    Ok(LossResult {
        value: value * scale,
        grad,
    })
}
