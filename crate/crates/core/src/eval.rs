//! Counting and localization metrics.
//!
//! Predictions are matched one-to-one to ground truth by a minimum-total-distance
//! linear sum assignment; an assigned pair is a true positive only when its distance
//! is strictly below `tau`, otherwise it splits into one false positive and one false
//! negative. Per-image precision, recall and F1 are averaged over images, with the
//! vacuous `0/0` cases scored as 1.

use serde::ser::{Serialize, SerializeMap, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Grid;
use crate::localize::DetectionList;
use crate::points::Point;

pub const DEFAULT_TAUS: [f64; 5] = [5.0, 15.0, 20.0, 30.0, 40.0];

/// Minimum-cost assignment of `min(rows, cols)` pairs, sorted by row.
///
/// Shortest augmenting path with dual potentials, `O(n^2 m)` for `n <= m`. The result
/// is deterministic; among several optimal assignments the one reached by augmenting
/// rows in index order is returned.
pub fn hungarian_assign(cost: &Grid) -> Result<Vec<(usize, usize)>> {
    if !cost.all_finite() {
        return Err(Error::NonFinite("cost matrix"));
    }
    let (n, m) = cost.dims();
    if n == 0 || m == 0 {
        return Ok(Vec::new());
    }
    if n > m {
        let mut pairs: Vec<(usize, usize)> = solve_rows_le_cols(&cost.transpose())
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        return Ok(pairs);
    }
    Ok(solve_rows_le_cols(cost))
}

fn solve_rows_le_cols(cost: &Grid) -> Vec<(usize, usize)> {
    let (n, m) = cost.dims();
    debug_assert!(n <= m);
    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let crow = cost.row(i0 - 1);
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = crow[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| row_of[j] != 0)
        .map(|j| (row_of[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Sum of `cost[r][c]` over the pairs, accumulated in row order.
pub fn assignment_cost(cost: &Grid, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| cost.get(r, c)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `(pred_index, gt_index, distance)` with `distance < tau`.
    pub tp_pairs: Vec<(usize, usize, f64)>,
    pub fp_indices: Vec<usize>,
    pub fn_indices: Vec<usize>,
    pub tau: f64,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.tp_pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.fp_indices.len()
    }

    pub fn fn_(&self) -> usize {
        self.fn_indices.len()
    }
}

fn distance_matrix(preds: &[Point], gts: &[Point]) -> Grid {
    Grid::from_fn(preds.len(), gts.len(), |i, j| preds[i].dist(&gts[j]))
}

/// Distance-assigned pairs; independent of `tau`.
fn assign_points(preds: &[Point], gts: &[Point]) -> Result<Vec<(usize, usize, f64)>> {
    let cost = distance_matrix(preds, gts);
    Ok(hungarian_assign(&cost)?
        .into_iter()
        .map(|(p, g)| (p, g, cost.get(p, g)))
        .collect())
}

fn classify(pairs: &[(usize, usize, f64)], n_pred: usize, n_gt: usize, tau: f64) -> MatchResult {
    let mut pred_hit = vec![false; n_pred];
    let mut gt_hit = vec![false; n_gt];
    let tp_pairs: Vec<(usize, usize, f64)> = pairs.iter().copied().filter(|&(_, _, d)| d < tau).collect();
    for &(p, g, _) in &tp_pairs {
        pred_hit[p] = true;
        gt_hit[g] = true;
    }
    MatchResult {
        tp_pairs,
        fp_indices: (0..n_pred).filter(|&p| !pred_hit[p]).collect(),
        fn_indices: (0..n_gt).filter(|&g| !gt_hit[g]).collect(),
        tau,
    }
}

pub fn match_at_tau(preds: &[Point], gts: &[Point], tau: f64) -> Result<MatchResult> {
    check_tau(tau)?;
    let pairs = assign_points(preds, gts)?;
    Ok(classify(&pairs, preds.len(), gts.len(), tau))
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[inline]
fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn prf_from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
    Prf {
        precision: ratio_or_one(tp, tp + fp),
        recall: ratio_or_one(tp, tp + fn_),
        f1: ratio_or_one(2 * tp, 2 * tp + fp + fn_),
    }
}

pub fn image_metrics(m: &MatchResult) -> Prf {
    prf_from_counts(m.tp(), m.fp(), m.fn_())
}

/// `(MAE, RMSE)` of per-image counts.
pub fn count_errors(gt_counts: &[usize], pred_counts: &[usize]) -> Result<(f64, f64)> {
    if gt_counts.len() != pred_counts.len() {
        return Err(Error::LengthMismatch(gt_counts.len(), pred_counts.len()));
    }
    if gt_counts.is_empty() {
        return Err(Error::Empty("count lists"));
    }
    let n = gt_counts.len() as f64;
    let (abs, sq) = gt_counts
        .iter()
        .zip(pred_counts)
        .fold((0.0, 0.0), |(a, s), (&g, &p)| {
            let e = g as f64 - p as f64;
            (a + e.abs(), s + e * e)
        });
    Ok((abs / n, (sq / n).sqrt()))
}

/// Aggregated metrics over a set of images.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n_images: usize,
    pub mae: f64,
    pub rmse: f64,
    /// `(tau, image-averaged metrics)` in the order requested.
    pub per_tau: Vec<(f64, Prf)>,
}

impl MetricsReport {
    pub fn at(&self, tau: f64) -> Option<Prf> {
        self.per_tau.iter().find(|(t, _)| *t == tau).map(|(_, p)| *p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct PerTau<'a>(&'a [(f64, Prf)]);

impl Serialize for PerTau<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (tau, prf) in self.0 {
            map.serialize_entry(&tau.to_string(), prf)?;
        }
        map.end()
    }
}

impl Serialize for MetricsReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MetricsReport", 4)?;
        st.serialize_field("n_images", &self.n_images)?;
        st.serialize_field("mae", &self.mae)?;
        st.serialize_field("rmse", &self.rmse)?;
        st.serialize_field("per_tau", &PerTau(&self.per_tau))?;
        st.end()
    }
}

/// Predictions and ground truth for one image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImagePair {
    pub preds: Vec<Point>,
    pub gts: Vec<Point>,
}

pub fn evaluate(images: &[ImagePair], taus: &[f64]) -> Result<MetricsReport> {
    evaluate_with(images, taus, Exec::default())
}

pub fn evaluate_with(images: &[ImagePair], taus: &[f64], exec: Exec) -> Result<MetricsReport> {
    if images.is_empty() {
        return Err(Error::Empty("image list"));
    }
    for &t in taus {
        check_tau(t)?;
    }
    let per_image: Vec<Result<Vec<Prf>>> = exec.map(images, |img| {
        let pairs = assign_points(&img.preds, &img.gts)?;
        Ok(taus
            .iter()
            .map(|&t| image_metrics(&classify(&pairs, img.preds.len(), img.gts.len(), t)))
            .collect())
    });
    let per_image: Vec<Vec<Prf>> = per_image.into_iter().collect::<Result<_>>()?;

    let n = images.len() as f64;
    let per_tau = taus
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let (p, r, f) = per_image.iter().fold((0.0, 0.0, 0.0), |(p, r, f), m| {
                (p + m[k].precision, r + m[k].recall, f + m[k].f1)
            });
            (
                t,
                Prf {
                    precision: p / n,
                    recall: r / n,
                    f1: f / n,
                },
            )
        })
        .collect();
    let gt_counts: Vec<usize> = images.iter().map(|i| i.gts.len()).collect();
    let pred_counts: Vec<usize> = images.iter().map(|i| i.preds.len()).collect();
    let (mae, rmse) = count_errors(&gt_counts, &pred_counts)?;
    Ok(MetricsReport {
        n_images: images.len(),
        mae,
        rmse,
        per_tau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SweepResult {
    pub tau: f64,
    pub best_threshold: f64,
    pub best_f1: f64,
    pub mae: f64,
}

/// Per-image F1 and |count error| as a function of how many detections are kept.
struct ImageCurve {
    /// Distinct own scores, descending.
    levels: Vec<f64>,
    /// `f1[k]`, `abs_err[k]`: keeping detections with score >= `levels[k - 1]`; k = 0 keeps none.
    f1: Vec<f64>,
    abs_err: Vec<f64>,
}

fn image_curve(dets: &DetectionList, gts: &[Point], tau: f64) -> Result<ImageCurve> {
    let mut levels: Vec<f64> = dets.iter().map(|d| d.score).collect();
    levels.dedup();
    let mut f1 = Vec::with_capacity(levels.len() + 1);
    let mut abs_err = Vec::with_capacity(levels.len() + 1);
    let mut push = |kept: &[Point]| -> Result<()> {
        let m = match_at_tau(kept, gts, tau)?;
        f1.push(image_metrics(&m).f1);
        abs_err.push((kept.len() as f64 - gts.len() as f64).abs());
        Ok(())
    };
    push(&[])?;
    for &l in &levels {
        push(&dets.above(l))?;
    }
    Ok(ImageCurve { levels, f1, abs_err })
}

/// Picks the score threshold maximizing image-averaged F1 at `tau`.
///
/// Candidates are every distinct detection score plus one value just above the
/// maximum (keep nothing). Ties go to the higher threshold, then the lower MAE.
pub fn threshold_sweep(scored: &[DetectionList], gts: &[Vec<Point>], tau: f64) -> Result<SweepResult> {
    threshold_sweep_with(scored, gts, tau, Exec::default())
}

pub fn threshold_sweep_with(
    scored: &[DetectionList],
    gts: &[Vec<Point>],
    tau: f64,
    exec: Exec,
) -> Result<SweepResult> {
    check_tau(tau)?;
    if scored.len() != gts.len() {
        return Err(Error::LengthMismatch(scored.len(), gts.len()));
    }
    let mut candidates: Vec<f64> = scored.iter().flat_map(|d| d.iter().map(|x| x.score)).collect();
    if candidates.is_empty() {
        return Err(Error::NoDetections);
    }
    if candidates.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("detection scores"));
    }
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();
    candidates.insert(0, candidates[0].next_up());

    let idx: Vec<usize> = (0..scored.len()).collect();
    let curves: Vec<ImageCurve> = exec
        .map(&idx, |&k| image_curve(&scored[k], &gts[k], tau))
        .into_iter()
        .collect::<Result<_>>()?;

    let n = scored.len() as f64;
    let mut best: Option<SweepResult> = None;
    for &t in &candidates {
        let (mut f1, mut err) = (0.0, 0.0);
        for c in &curves {
            let kept = c.levels.partition_point(|&l| l >= t);
            f1 += c.f1[kept];
            err += c.abs_err[kept];
        }
        let cand = SweepResult {
            tau,
            best_threshold: t,
            best_f1: f1 / n,
            mae: err / n,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                cand.best_f1 > b.best_f1
                    || (cand.best_f1 == b.best_f1
                        && (cand.best_threshold > b.best_threshold
                            || (cand.best_threshold == b.best_threshold && cand.mae < b.mae)))
            }
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one candidate"))
}
