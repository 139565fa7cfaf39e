use cedir_core::filter::gaussian_blur;
use cedir_core::rng::SplitMix64;
use cedir_core::synth::{
    add_gaussian_noise, generate_scene, occlusion_noise_mask, NoiseParams, OcclusionNoise, SynthConfig,
};
use cedir_core::{DirectionField, Exec, Grid};
use proptest::prelude::*;

fn small() -> SynthConfig {
    SynthConfig {
        height: 64,
        width: 80,
        n_points_range: (3, 12),
        ..SynthConfig::default()
    }
}

/// 4-connected components of set pixels.
fn count_blobs(mask: &[bool], h: usize, w: usize) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut blobs = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        blobs += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k / w, k % w);
            let mut visit = |n: usize| {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(k - w);
            }
            if i + 1 < h {
                visit(k + w);
            }
            if j > 0 {
                visit(k - 1);
            }
            if j + 1 < w {
                visit(k + 1);
            }
        }
    }
    blobs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scenes_are_deterministic(seed in any::<u64>()) {
        let a = generate_scene(&small(), seed).unwrap();
        let b = generate_scene(&small(), seed).unwrap();
        prop_assert_eq!(a.points.points(), b.points.points());
        prop_assert_eq!(&a.clean_field, &b.clean_field);
        prop_assert_eq!(&a.corrupted_field, &b.corrupted_field);
        prop_assert_eq!(&a.target, &b.target);
    }

    #[test]
    fn points_stay_in_bounds_and_separated(seed in any::<u64>()) {
        let config = SynthConfig { cluster_prob: 0.0, ..small() };
        let s = generate_scene(&config, seed).unwrap();
        let (lo, hi) = config.n_points_range;
        prop_assert!((lo as usize..=hi as usize).contains(&s.points.len()));
        if let Some(d) = s.points.min_separation() {
            prop_assert!(d >= config.min_separation);
        }
        for p in s.points.points() {
            prop_assert!(p.row >= 0.0 && p.row <= 63.0 && p.col >= 0.0 && p.col <= 79.0);
        }
    }

    #[test]
    fn mask_fraction_is_exact(seed in any::<u64>(), fraction in 0.0..=1.0f64) {
        let m = occlusion_noise_mask(40, 50, fraction, seed).unwrap();
        let set = m.iter().filter(|&&b| b).count();
        prop_assert_eq!(set, (fraction * 2000.0).round() as usize);
    }

    #[test]
    fn masks_from_one_noise_are_nested(seed in any::<u64>(), f1 in 0.0..1.0f64, df in 0.0..1.0f64) {
        let noise = OcclusionNoise::new(32, 32, seed, Exec::Sequential).unwrap();
        let small = noise.mask(f1).unwrap();
        let large = noise.mask((f1 + df).min(1.0)).unwrap();
        prop_assert!(small.iter().zip(&large).all(|(&s, &l)| !s || l));
    }
}

#[test]
fn cluster_points_appear_near_their_parent() {
    let config = SynthConfig { cluster_prob: 1.0, min_separation: 40.0, ..small() };
    let s = generate_scene(&config, 5).unwrap();
    assert!(s.points.len() >= 3 * 3);
}

#[test]
fn occlusions_zero_both_channels() {
    let config = SynthConfig { occl_prob: 1.0, noise_prob: 0.0, ..small() };
    let s = generate_scene(&config, 12).unwrap();
    let zeros = |f: &DirectionField| {
        f.sin().as_slice().iter().zip(f.cos().as_slice()).filter(|(a, b)| **a == 0.0 && **b == 0.0).count()
    };
    assert!(zeros(&s.corrupted_field) > zeros(&s.clean_field));
    for p in s.points.points() {
        let (i, j) = (p.row.round() as usize, p.col.round() as usize);
        assert_eq!(s.corrupted_field.sin().get(i, j), 0.0);
    }
}

#[test]
fn blurred_noise_has_lower_variance_than_raw_noise() {
    let n = 512;
    let mut rng = SplitMix64::new(42);
    let raw = Grid::from_fn(n, n, |_, _| rng.normal());
    let blurred = gaussian_blur(&raw, 3.0, Exec::default()).unwrap();
    let var = |g: &Grid| {
        let m = g.sum() / g.len() as f64;
        g.as_slice().iter().map(|v| (v - m).powi(2)).sum::<f64>() / g.len() as f64
    };
    let (vr, vb) = (var(&raw), var(&blurred));
    assert!(vb < vr, "blurred {vb} raw {vr}");
    assert!((vr - 1.0).abs() < 0.02);
}

#[test]
fn noise_is_zero_mean_and_unclamped() {
    let field = DirectionField::zeros(128, 128);
    let params = NoiseParams { prob: 1.0, sigma_range: (2.0, 2.0), blur_sigma: 0.5 };
    let noisy = add_gaussian_noise(&field, 8, &params).unwrap();
    let s = noisy.sin();
    assert!((s.sum() / s.len() as f64).abs() < 0.05);
    assert!(s.min_max().unwrap().1 > 1.0);
    assert_ne!(noisy.sin(), noisy.cos());
}

#[test]
fn blob_count_falls_as_fraction_approaches_one() {
    let (h, w) = (128, 128);
    let fractions = [0.5, 0.7, 0.85, 0.95, 1.0];
    let mut means = vec![0.0; fractions.len()];
    for seed in 0..8 {
        let noise = OcclusionNoise::new(h, w, seed, Exec::default()).unwrap();
        for (k, &f) in fractions.iter().enumerate() {
            means[k] += count_blobs(&noise.mask(f).unwrap(), h, w) as f64 / 8.0;
        }
    }
    for k in 1..means.len() {
        assert!(means[k] <= means[k - 1], "blob means {means:?}");
    }
    assert!(means[0] > 2.0 * means[2], "blob means {means:?}");
    assert_eq!(means[fractions.len() - 1], 1.0);
}

#[test]
fn low_fraction_masks_form_several_blobs() {
    let noise = OcclusionNoise::new(128, 128, 1, Exec::default()).unwrap();
    let blobs = count_blobs(&noise.mask(0.1).unwrap(), 128, 128);
    assert!(blobs > 1 && blobs < 200, "{blobs}");
}
