//! Separable 1D filtering with replicate (clamp-to-edge) padding.
//!
//! Filters are applied as correlations: `out[i] = sum_t taps[t] * x[i + t - r]` with
//! `r = taps.len() / 2`, so an antisymmetric kernel `[-1, 0, 1]` yields a forward
//! difference oriented along increasing index.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along rows index `i` (top to bottom).
    Vertical,
    /// Along column index `j` (left to right).
    Horizontal,
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Correlates every line of `grid` along `axis` with odd-length `taps`.
pub fn correlate_1d(grid: &Grid, taps: &[f64], axis: Axis, exec: Exec) -> Result<Grid> {
    if taps.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "kernel length must be odd, got {}",
            taps.len()
        )));
    }
    let (h, w) = grid.dims();
    let r = (taps.len() / 2) as isize;
    let mut out = Grid::zeros(h, w);
    if grid.is_empty() {
        return Ok(out);
    }
    match axis {
        Axis::Horizontal => exec.for_each_row(out.as_mut_slice(), w, |i, row| {
            let src = grid.row(i);
            for (j, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (t, &k) in taps.iter().enumerate() {
                    acc += k * src[clamp_index(j as isize + t as isize - r, w)];
                }
                *o = acc;
            }
        }),
        Axis::Vertical => exec.for_each_row(out.as_mut_slice(), w, |i, row| {
            for (t, &k) in taps.iter().enumerate() {
                let src = grid.row(clamp_index(i as isize + t as isize - r, h));
                for (o, &s) in row.iter_mut().zip(src) {
                    *o += k * s;
                }
            }
        }),
    }
    Ok(out)
}

/// Normalized Gaussian taps truncated at `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "blur sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / total).collect())
}

/// Separable Gaussian blur, horizontal pass first.
pub fn gaussian_blur(grid: &Grid, sigma: f64, exec: Exec) -> Result<Grid> {
    let taps = gaussian_kernel(sigma)?;
    let tmp = correlate_1d(grid, &taps, Axis::Horizontal, exec)?;
    correlate_1d(&tmp, &taps, Axis::Vertical, exec)
}

/// Block-edge response with half-width `half`: `(sum of the `half` samples after
/// minus sum of the `half` samples before) / (2 half)`, evaluated with running sums.
///
/// Equal to [`correlate_1d`] with taps `[-1; half] ++ [0] ++ [1; half]` scaled by
/// `1 / (2 half)`, in O(1) per sample regardless of `half`.
pub fn block_edge_1d(grid: &Grid, half: usize, axis: Axis, exec: Exec) -> Grid {
    assert!(half >= 1);
    let (h, w) = grid.dims();
    let (lines, len) = match axis {
        Axis::Horizontal => (h, w),
        Axis::Vertical => (w, h),
    };
    let fetch = |line: usize, k: usize| match axis {
        Axis::Horizontal => grid.get(line, k),
        Axis::Vertical => grid.get(k, line),
    };
    let scale = 1.0 / (2 * half) as f64;

    let per_line: Vec<Vec<f64>> = exec.map_range(lines, |line| {
        // prefix[p] = sum of padded[0..p]; padded[p] = x[clamp(p - half)].
        let padded_len = len + 2 * half;
        let mut prefix = Vec::with_capacity(padded_len + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for p in 0..padded_len {
            acc += fetch(line, clamp_index(p as isize - half as isize, len));
            prefix.push(acc);
        }
        (0..len)
            .map(|k| {
                // Sample k sits at padded index k + half.
                let c = k + half;
                let after = prefix[c + half + 1] - prefix[c + 1];
                let before = prefix[c] - prefix[c - half];
                (after - before) * scale
            })
            .collect()
    });

    let mut out = Grid::zeros(h, w);
    for (line, values) in per_line.into_iter().enumerate() {
        for (k, v) in values.into_iter().enumerate() {
            match axis {
                Axis::Horizontal => out.set(line, k, v),
                Axis::Vertical => out.set(k, line, v),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_grid(h: usize, w: usize, seed: u64) -> Grid {
        let mut r = SplitMix64::new(seed);
        Grid::from_fn(h, w, |_, _| r.uniform(-1.0, 1.0))
    }

    #[test]
    fn replicate_padding() {
        let g = Grid::from_vec(1, 3, vec![1.0, 2.0, 4.0]).unwrap();
        let out = correlate_1d(&g, &[-1.0, 0.0, 1.0], Axis::Horizontal, Exec::Sequential).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 3.0, 2.0]);
        let out = correlate_1d(&g.transpose(), &[-1.0, 0.0, 1.0], Axis::Vertical, Exec::Sequential)
            .unwrap();
        assert_eq!(out.as_slice(), &[1.0, 3.0, 2.0]);
    }

    #[test]
    fn even_kernel_rejected() {
        let g = Grid::zeros(2, 2);
        assert!(correlate_1d(&g, &[1.0, 1.0], Axis::Horizontal, Exec::Sequential).is_err());
    }

    #[test]
    fn gaussian_taps() {
        let k = gaussian_kernel(3.0).unwrap();
        assert_eq!(k.len(), 19);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(k.windows(2).take(9).all(|p| p[0] < p[1]));
        assert!(gaussian_kernel(0.0).is_err());
    }

    #[test]
    fn blur_preserves_constants() {
        let g = Grid::filled(7, 11, 0.25);
        let b = gaussian_blur(&g, 2.0, Exec::Sequential).unwrap();
        assert!(b.as_slice().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn block_edge_matches_direct_correlation() {
        let g = random_grid(23, 17, 3);
        for half in [1usize, 2, 4, 7, 15, 30] {
            let mut taps = vec![-1.0; half];
            taps.push(0.0);
            taps.extend(std::iter::repeat_n(1.0, half));
            let taps: Vec<f64> = taps.iter().map(|t| t / (2 * half) as f64).collect();
            for axis in [Axis::Horizontal, Axis::Vertical] {
                let fast = block_edge_1d(&g, half, axis, Exec::Sequential);
                let direct = correlate_1d(&g, &taps, axis, Exec::Sequential).unwrap();
                for (a, b) in fast.as_slice().iter().zip(direct.as_slice()) {
                    assert!((a - b).abs() < 1e-12, "half {half} {axis:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let g = random_grid(40, 33, 8);
        let a = gaussian_blur(&g, 1.5, Exec::Sequential).unwrap();
        let b = gaussian_blur(&g, 1.5, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let a = block_edge_1d(&g, 5, Axis::Vertical, Exec::Sequential);
        let b = block_edge_1d(&g, 5, Axis::Vertical, Exec::Parallel);
        assert_eq!(a, b);
    }
}
