//! File formats: CDF1 binary planes, point CSVs and PGM previews.
//!
//! CDF1 layout, all little-endian:
//!
//! | offset | size | field |
//! |--------|------|-------|
//! | 0 | 4 | magic `b"CDF1"` |
//! | 4 | 4 | height (u32) |
//! | 8 | 4 | width (u32) |
//! | 12 | 4 | channels (u32, 1 or 2) |
//! | 16 | 4·C·H·W | IEEE-754 f32 payload, planar, row-major |
//!
//! A direction field stores `sin` as channel 0 and `cos` as channel 1. Values are
//! narrowed to `f32` on write; anything already representable in `f32` round-trips
//! exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DirectionField;
use crate::grid::Grid;
use crate::localize::{Detection, DetectionList};
use crate::points::Point;

pub const MAGIC: [u8; 4] = *b"CDF1";
const HEADER_LEN: usize = 16;

/// Planes decoded from a CDF1 stream.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Score(Grid),
    Direction(DirectionField),
}

impl FieldData {
    pub fn channels(&self) -> u32 {
        match self {
            FieldData::Score(_) => 1,
            FieldData::Direction(_) => 2,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            FieldData::Score(g) => g.dims(),
            FieldData::Direction(f) => f.dims(),
        }
    }
}

fn encode_planes(planes: &[&Grid]) -> Result<Vec<u8>> {
    let (h, w) = planes[0].dims();
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidParameter(format!("dimension {v} exceeds u32")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * planes.len() * h * w);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&to_u32(h)?.to_le_bytes());
    out.extend_from_slice(&to_u32(w)?.to_le_bytes());
    out.extend_from_slice(&(planes.len() as u32).to_le_bytes());
    for p in planes {
        for &v in p.as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn encode_field(data: &FieldData) -> Result<Vec<u8>> {
    match data {
        FieldData::Score(g) => encode_planes(&[g]),
        FieldData::Direction(f) => encode_planes(&[f.sin(), f.cos()]),
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

pub fn decode_field(bytes: &[u8]) -> Result<FieldData> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let h = read_u32(bytes, 4) as usize;
    let w = read_u32(bytes, 8) as usize;
    let c = read_u32(bytes, 12);
    if c != 1 && c != 2 {
        return Err(Error::UnsupportedChannels(c));
    }
    let expected = (c as usize)
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::InvalidParameter("header dimensions overflow".into()))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes(bytes.len() - expected));
    }
    let plane = |k: usize| -> Result<Grid> {
        let start = HEADER_LEN + 4 * k * h * w;
        let data = bytes[start..start + 4 * h * w]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")) as f64)
            .collect();
        Grid::from_vec(h, w, data)
    };
    Ok(if c == 1 {
        FieldData::Score(plane(0)?)
    } else {
        FieldData::Direction(DirectionField::new(plane(0)?, plane(1)?)?)
    })
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Io(io::Error::new(io::ErrorKind::InvalidInput, "path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_field(path: &Path, data: &FieldData) -> Result<()> {
    write_atomic(path, &encode_field(data)?)
}

pub fn write_direction_field(path: &Path, field: &DirectionField) -> Result<()> {
    write_atomic(path, &encode_planes(&[field.sin(), field.cos()])?)
}

pub fn write_score_map(path: &Path, map: &Grid) -> Result<()> {
    write_atomic(path, &encode_planes(&[map])?)
}

pub fn read_field(path: &Path) -> Result<FieldData> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}

pub fn read_direction_field(path: &Path) -> Result<DirectionField> {
    match read_field(path)? {
        FieldData::Direction(f) => Ok(f),
        FieldData::Score(_) => Err(Error::ChannelMismatch {
            expected: 2,
            found: 1,
        }),
    }
}

pub fn read_score_map(path: &Path) -> Result<Grid> {
    match read_field(path)? {
        FieldData::Score(g) => Ok(g),
        FieldData::Direction(_) => Err(Error::ChannelMismatch {
            expected: 1,
            found: 2,
        }),
    }
}

/// One CSV row: `image_id,row,col[,score]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub image_id: String,
    pub row: f64,
    pub col: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Points grouped by image id; ids are kept in sorted order.
pub type PointsByImage = BTreeMap<String, Vec<PointRecord>>;

pub fn write_points_csv<W: Write>(writer: W, records: &[PointRecord]) -> Result<()> {
    let with_score = records.iter().any(|r| r.score.is_some());
    let mut w = csv::Writer::from_writer(writer);
    if with_score {
        w.write_record(["image_id", "row", "col", "score"])?;
    } else {
        w.write_record(["image_id", "row", "col"])?;
    }
    for r in records {
        let row = r.row.to_string();
        let col = r.col.to_string();
        if with_score {
            let score = r.score.map(|s| s.to_string()).unwrap_or_default();
            w.write_record([r.image_id.as_str(), &row, &col, &score])?;
        } else {
            w.write_record([r.image_id.as_str(), &row, &col])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<PointRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let rec: PointRecord = rec?;
        if !rec.row.is_finite() || !rec.col.is_finite() || rec.score.is_some_and(|s| !s.is_finite()) {
            return Err(Error::NonFinite("points csv"));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn group_by_image(records: Vec<PointRecord>) -> PointsByImage {
    let mut map = PointsByImage::new();
    for r in records {
        map.entry(r.image_id.clone()).or_default().push(r);
    }
    map
}

pub fn save_points_csv(path: &Path, records: &[PointRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_points_csv(&mut buf, records)?;
    write_atomic(path, &buf)
}

pub fn load_points_csv(path: &Path) -> Result<Vec<PointRecord>> {
    read_points_csv(fs::File::open(path)?)
}

pub fn point_records(image_id: &str, points: &[Point]) -> Vec<PointRecord> {
    points
        .iter()
        .map(|p| PointRecord {
            image_id: image_id.to_string(),
            row: p.row,
            col: p.col,
            score: None,
        })
        .collect()
}

pub fn detection_records(image_id: &str, dets: &DetectionList) -> Vec<PointRecord> {
    dets.iter()
        .map(|d| PointRecord {
            image_id: image_id.to_string(),
            row: d.row,
            col: d.col,
            score: Some(d.score),
        })
        .collect()
}

pub fn records_to_points(records: &[PointRecord]) -> Vec<Point> {
    records.iter().map(|r| Point::new(r.row, r.col)).collect()
}

/// Records without a score count as score 1.
pub fn records_to_detections(records: &[PointRecord]) -> DetectionList {
    DetectionList::new(
        records
            .iter()
            .map(|r| Detection {
                row: r.row,
                col: r.col,
                score: r.score.unwrap_or(1.0),
            })
            .collect(),
    )
}

/// Binary PGM (P5) bytes, min-max scaled to 0..=255 with round-half-up.
/// A constant plane maps to 128.
pub fn encode_pgm(plane: &Grid) -> Result<Vec<u8>> {
    if !plane.all_finite() {
        return Err(Error::NonFinite("pgm plane"));
    }
    let (h, w) = plane.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    match plane.min_max() {
        Some((lo, hi)) if hi > lo => {
            let span = hi - lo;
            out.extend(
                plane
                    .as_slice()
                    .iter()
                    .map(|&v| ((v - lo) / span * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8),
            );
        }
        _ => out.extend(std::iter::repeat_n(128u8, h * w)),
    }
    Ok(out)
}

pub fn export_pgm(plane: &Grid, path: &Path) -> Result<()> {
    write_atomic(path, &encode_pgm(plane)?)
}
