//! Center-direction fields for point-supervised object counting and localization.
//!
//! Point annotations are encoded as a dense two-channel field holding the sine and
//! cosine of the angle from every pixel to its nearest object center. Centers are the
//! sinks of that field, so a small localizer (here a fixed bank of 1D edge filters) can
//! turn a field, regressed or synthetic, back into a count and a list of positions.
//!
//! Pipeline stages:
//!
//! 1. [`field`] encodes points into a [`DirectionField`] and builds the loss weight map.
//! 2. [`losses`] holds the regression and localization losses with analytic gradients.
//! 3. [`synth`] generates seeded synthetic scenes and their corruptions.
//! 4. [`localize`] computes the hand-crafted response and extracts peaks.
//! 5. [`eval`] matches detections to ground truth and reports counting metrics.
//! 6. [`io`] reads and writes the binary field format, point CSVs and PGM previews.
//!
//! With the default `parallel` feature the per-pixel, per-scene and per-image loops run
//! on rayon. Every parallel entry point also has a `*_with` form taking an [`Exec`] so the
//! sequential path stays reachable (and benchmarkable) in the same build.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod exec;
pub mod field;
pub mod filter;
pub mod grid;
pub mod io;
pub mod localize;
pub mod losses;
pub mod nearest;
pub mod points;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Exec;
pub use field::{decode_angle, encode_direction_field, weight_map, DirectionField, WeightMap};
pub use grid::Grid;
pub use localize::{find_peaks, handcrafted_response, Detection, DetectionList, LocalizerConfig};
pub use points::{Point, PointSet};

/// Single-channel dense map: a localization target or a localizer response.
pub type ScoreMap = Grid;
