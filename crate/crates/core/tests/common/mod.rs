#![allow(dead_code)]

use std::path::PathBuf;

use cedir_core::io::{self, detection_records, point_records, FieldData};
use cedir_core::localize::localize;
use cedir_core::synth::{generate_scene, SynthConfig};
use cedir_core::rng::SplitMix64;
use cedir_core::{Grid, LocalizerConfig, PointSet};

/// Independent nearest-center oracle: plain scan, first strict minimum wins.
pub fn brute_force_field(points: &PointSet) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = points.dims();
    let mut sin = vec![0.0; h * w];
    let mut cos = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (k, p) in points.points().iter().enumerate() {
                let d2 = (p.row - i as f64).powi(2) + (p.col - j as f64).powi(2);
                if d2 < best {
                    best = d2;
                    arg = k;
                }
            }
            let p = points.points()[arg];
            let dr = p.row - i as f64;
            let dc = p.col - j as f64;
            let r = (dr * dr + dc * dc).sqrt();
            if r > 0.0 {
                sin[i * w + j] = dc / r;
                cos[i * w + j] = dr / r;
            }
        }
    }
    (sin, cos)
}

/// Minimum assignment cost over all injective maps from the smaller side.
pub fn exhaustive_min_cost(cost: &Grid) -> f64 {
    let (n, m) = cost.dims();
    let c = if n <= m { cost.clone() } else { cost.transpose() };
    let (n, m) = c.dims();
    let mut used = vec![false; m];
    let mut best = f64::INFINITY;
    fn rec(c: &Grid, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == c.height() {
            *best = best.min(acc);
            return;
        }
        for j in 0..c.width() {
            if !used[j] {
                used[j] = true;
                rec(c, row + 1, used, acc + c.get(row, j), best);
                used[j] = false;
            }
        }
    }
    if n == 0 || m == 0 {
        return 0.0;
    }
    rec(&c, 0, &mut used, 0.0, &mut best);
    best
}

/// Random `n x m` cost matrix, `n, m <= 7`, with dyadic entries so every partial
/// sum is exact and optima compare with `==`.
pub fn random_cost(rng: &mut SplitMix64) -> Grid {
    let n = rng.range_inclusive(1, 7) as usize;
    let m = rng.range_inclusive(1, 7) as usize;
    let coarse = rng.bernoulli(0.5);
    Grid::from_fn(n, m, |_, _| {
        if coarse {
            rng.below(8) as f64
        } else {
            rng.below(1 << 20) as f64 / 1024.0
        }
    })
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Fixed-seed artifacts whose serialized bytes are committed under `tests/golden`.
pub fn golden_artifacts() -> Vec<(&'static str, Vec<u8>)> {
    let config = SynthConfig {
        height: 24,
        width: 32,
        n_points_range: (3, 6),
        min_separation: 6.0,
        noise_prob: 1.0,
        ..SynthConfig::default()
    };
    let scene = generate_scene(&config, 20240917).unwrap();
    let field = io::encode_field(&FieldData::Direction(scene.clean_field.clone())).unwrap();
    let corrupted = io::encode_field(&FieldData::Direction(scene.corrupted_field.clone())).unwrap();
    let target = io::encode_field(&FieldData::Score(scene.target.clone())).unwrap();

    let mut points = Vec::new();
    io::write_points_csv(&mut points, &point_records("golden", scene.points.points())).unwrap();

    let dets = localize(&scene.clean_field, &LocalizerConfig::default()).unwrap();
    let mut detections = Vec::new();
    io::write_points_csv(&mut detections, &detection_records("golden", &dets)).unwrap();

    vec![
        ("scene.field.cdf", field),
        ("scene.corrupted.cdf", corrupted),
        ("scene.target.cdf", target),
        ("scene.points.csv", points),
        ("scene.detections.csv", detections),
    ]
}

/// Compares each artifact with its committed file; `UPDATE_GOLDEN=1` rewrites them.
pub fn check_golden() -> Result<usize, String> {
    let dir = golden_dir();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let artifacts = golden_artifacts();
    for (name, bytes) in &artifacts {
        let path = dir.join(name);
        if update {
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
            continue;
        }
        let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        if &expected != bytes {
            return Err(format!("{name} differs from committed golden file"));
        }
    }
    Ok(artifacts.len())
}
