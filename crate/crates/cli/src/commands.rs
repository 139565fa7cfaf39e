use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use cedir_core::eval::{evaluate, threshold_sweep, ImagePair};
use cedir_core::field::{decode_angle, encode_direction_field};
use cedir_core::io::{
    self, detection_records, group_by_image, point_records, records_to_detections,
    records_to_points, FieldData, PointRecord,
};
use cedir_core::localize::{find_peaks, handcrafted_response, LocalizerConfig, DEFAULT_KERNEL_SIZES};
use cedir_core::losses::gradcheck::{run_suite, LossKind};
use cedir_core::synth::{generate_scenes, scene_seed, OcclusionNoise, SynthConfig};
use cedir_core::{Exec, PointSet};

use crate::Timer;

/// Bad combination of otherwise well-formed arguments; exits with code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("invalid list entry {t:?}")))
        .collect()
}

fn parse_taus(s: &str) -> Result<Vec<f64>> {
    let taus: Vec<f64> = parse_list(s).map_err(usage)?;
    if taus.is_empty() || taus.iter().any(|&t| t <= 0.0 || !t.is_finite()) {
        return Err(usage("tau values must be positive"));
    }
    Ok(taus)
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("fraction must be in [0, 1]".into())
    }
}

/// Image id for a file: its name up to the first '.'.
fn image_id_of(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => io::write_atomic(p, text.as_bytes()).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Points CSV (`image_id,row,col`).
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    /// Output CDF1 file.
    #[arg(long)]
    out: PathBuf,
    /// Image to encode when the CSV holds several.
    #[arg(long)]
    image_id: Option<String>,
}

pub fn encode(a: &EncodeArgs, timer: &mut Timer) -> Result<ExitCode> {
    let records = io::load_points_csv(&a.points).with_context(|| format!("reading {}", a.points.display()))?;
    let mut groups = group_by_image(records);
    let records = match &a.image_id {
        Some(id) => groups.remove(id).with_context(|| format!("image {id:?} not in {}", a.points.display()))?,
        None if groups.len() <= 1 => groups.into_values().next().unwrap_or_default(),
        None => return Err(usage("points file holds several images; pass --image-id")),
    };
    let points = PointSet::new(a.height, a.width, records_to_points(&records))?;
    timer.stage("read points");
    let field = encode_direction_field(&points)?;
    timer.stage("encode");
    io::write_direction_field(&a.out, &field)?;
    timer.stage("write");
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    outdir: PathBuf,
    /// Square image side in pixels.
    #[arg(long, default_value_t = 512)]
    size: usize,
    /// Minimum distance between primary points.
    #[arg(long)]
    min_separation: Option<f64>,
    /// Inclusive primary point count range, `LO,HI`.
    #[arg(long)]
    n_points: Option<String>,
    /// Disable clustered extra points.
    #[arg(long)]
    no_clusters: bool,
}

pub fn synth(a: &SynthArgs, timer: &mut Timer) -> Result<ExitCode> {
    if a.size == 0 {
        return Err(usage("--size must be positive"));
    }
    let mut config = SynthConfig {
        height: a.size,
        width: a.size,
        ..SynthConfig::default()
    };
    if let Some(s) = a.min_separation {
        config.min_separation = s;
    }
    if a.no_clusters {
        config.cluster_prob = 0.0;
    }
    if let Some(r) = &a.n_points {
        match parse_list::<u64>(r).map_err(usage)?[..] {
            [lo, hi] => config.n_points_range = (lo, hi),
            _ => return Err(usage("--n-points takes LO,HI")),
        }
    }
    if let Err(e) = config.validate() {
        return Err(usage(e.to_string()));
    }
    let scenes = generate_scenes(&config, a.seed, a.count, Exec::default())?;
    timer.stage("generate");

    fs::create_dir_all(&a.outdir).with_context(|| format!("creating {}", a.outdir.display()))?;
    let mut all = Vec::new();
    for (k, scene) in scenes.iter().enumerate() {
        let id = format!("scene_{k:04}");
        let base = |suffix: &str| a.outdir.join(format!("{id}.{suffix}"));
        io::write_direction_field(&base("field.cdf"), &scene.clean_field)?;
        io::write_direction_field(&base("corrupted.cdf"), &scene.corrupted_field)?;
        io::write_score_map(&base("target.cdf"), &scene.target)?;
        let recs = point_records(&id, scene.points.points());
        io::save_points_csv(&base("points.csv"), &recs)?;
        all.extend(recs);
    }
    io::save_points_csv(&a.outdir.join("points.csv"), &all)?;
    timer.stage("write");
    debug_assert!(scenes.iter().enumerate().all(|(k, s)| s.seed == scene_seed(a.seed, k as u64)));
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Fraction of pixels to occlude, in [0, 1].
    #[arg(long, value_parser = parse_fraction)]
    occlusion_frac: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn corrupt(a: &CorruptArgs, timer: &mut Timer) -> Result<ExitCode> {
    let mut field = io::read_direction_field(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    timer.stage("read");
    let (h, w) = field.dims();
    let mask = OcclusionNoise::new(h, w, a.seed, Exec::default())?.mask(a.occlusion_frac)?;
    field.apply_mask(&mask);
    timer.stage("corrupt");
    io::write_direction_field(&a.out, &field)?;
    timer.stage("write");
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Hand-crafted edge-filter localizer on a 2-channel direction field.
    Handcrafted,
    /// Peak extraction directly on a 1-channel score map.
    Peaks,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    /// CDF1 inputs; each file is one image, id = file name up to the first '.'.
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Handcrafted)]
    method: Method,
    #[arg(long, default_value_t = cedir_core::localize::DEFAULT_SCORE_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = cedir_core::localize::DEFAULT_NMS_RADIUS)]
    nms_radius: usize,
    /// Comma-separated odd kernel sizes for the hand-crafted localizer.
    #[arg(long)]
    kernels: Option<String>,
    /// Override the image id (single input only).
    #[arg(long)]
    image_id: Option<String>,
    /// Detections CSV (`image_id,row,col,score`).
    #[arg(long)]
    out: PathBuf,
}

pub fn localize(a: &LocalizeArgs, timer: &mut Timer) -> Result<ExitCode> {
    if a.image_id.is_some() && a.inputs.len() != 1 {
        return Err(usage("--image-id needs exactly one --in"));
    }
    if a.nms_radius < 1 {
        return Err(usage("--nms-radius must be >= 1"));
    }
    let config = LocalizerConfig {
        kernel_sizes: match &a.kernels {
            Some(k) => parse_list(k).map_err(usage)?,
            None => DEFAULT_KERNEL_SIZES.to_vec(),
        },
        nms_radius: a.nms_radius,
        score_threshold: a.threshold,
    };
    if config.validate().is_err() {
        return Err(usage("kernel sizes must be odd and >= 3"));
    }
    let mut records: Vec<PointRecord> = Vec::new();
    for path in &a.inputs {
        let data = io::read_field(path).with_context(|| format!("reading {}", path.display()))?;
        timer.stage("read");
        let score = match (a.method, data) {
            (Method::Handcrafted, FieldData::Direction(f)) => {
                let r = handcrafted_response(&f, &config)?;
                timer.stage("response");
                r
            }
            (Method::Peaks, FieldData::Score(g)) => g,
            (Method::Handcrafted, FieldData::Score(_)) => {
                bail!(cedir_core::Error::ChannelMismatch { expected: 2, found: 1 })
            }
            (Method::Peaks, FieldData::Direction(_)) => {
                bail!(cedir_core::Error::ChannelMismatch { expected: 1, found: 2 })
            }
        };
        let dets = find_peaks(&score, config.score_threshold, config.nms_radius)?;
        timer.stage("peaks");
        let id = a.image_id.clone().unwrap_or_else(|| image_id_of(path));
        records.extend(detection_records(&id, &dets));
    }
    if records.is_empty() {
        // Keep the score column so downstream readers see a detections file.
        fs_write_empty_detections(&a.out)?;
    } else {
        io::save_points_csv(&a.out, &records)?;
    }
    timer.stage("write");
    Ok(ExitCode::SUCCESS)
}

fn fs_write_empty_detections(path: &Path) -> Result<()> {
    io::write_atomic(path, b"image_id,row,col,score\n")?;
    Ok(())
}

type Pairs = (Vec<cedir_core::DetectionList>, Vec<Vec<cedir_core::Point>>);

/// Detections and ground truth aligned over the union of image ids.
fn load_pairs(pred: &Path, gt: &Path, threshold: Option<f64>) -> Result<Pairs> {
    let preds = group_by_image(io::load_points_csv(pred).with_context(|| format!("reading {}", pred.display()))?);
    let gts = group_by_image(io::load_points_csv(gt).with_context(|| format!("reading {}", gt.display()))?);
    let ids: BTreeSet<String> = preds.keys().chain(gts.keys()).cloned().collect();
    if ids.is_empty() {
        bail!(cedir_core::Error::Empty("no images in prediction or ground-truth files"));
    }
    let mut dets = Vec::new();
    let mut gt_points = Vec::new();
    for id in &ids {
        let d = preds.get(id).map(|r| records_to_detections(r)).unwrap_or_default();
        let d = match threshold {
            Some(t) => cedir_core::DetectionList::new(d.into_vec().into_iter().filter(|x| x.score >= t).collect()),
            None => d,
        };
        dets.push(d);
        gt_points.push(gts.get(id).map(|r| records_to_points(r)).unwrap_or_default());
    }
    Ok((dets, gt_points))
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detections CSV.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth points CSV.
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated distance thresholds.
    #[arg(long, default_value = "5,15,20,30,40")]
    tau: String,
    /// Keep only detections scoring at least this much.
    #[arg(long)]
    threshold: Option<f64>,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn eval(a: &EvalArgs, timer: &mut Timer) -> Result<ExitCode> {
    let taus = parse_taus(&a.tau)?;
    let (dets, gts) = load_pairs(&a.pred, &a.gt, a.threshold)?;
    timer.stage("read");
    let images: Vec<ImagePair> = dets
        .iter()
        .zip(gts)
        .map(|(d, g)| ImagePair { preds: d.points(), gts: g })
        .collect();
    let report = evaluate(&images, &taus)?;
    timer.stage("evaluate");
    write_output(a.out.as_deref(), &report.to_json()?)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated distance thresholds; one sweep per value.
    #[arg(long, default_value = "5")]
    tau: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn sweep(a: &SweepArgs, timer: &mut Timer) -> Result<ExitCode> {
    let taus = parse_taus(&a.tau)?;
    let (dets, gts) = load_pairs(&a.pred, &a.gt, None)?;
    timer.stage("read");
    let results = taus
        .iter()
        .map(|&t| threshold_sweep(&dets, &gts, t))
        .collect::<cedir_core::Result<Vec<_>>>()?;
    timer.stage("sweep");
    let text = if results.len() == 1 {
        serde_json::to_string_pretty(&results[0])?
    } else {
        serde_json::to_string_pretty(&results)?
    };
    write_output(a.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random instances per loss.
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// Side length of each instance.
    #[arg(long, default_value_t = 8)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum allowed relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

pub fn gradcheck(a: &GradcheckArgs, timer: &mut Timer) -> Result<ExitCode> {
    if a.size == 0 || a.instances == 0 {
        return Err(usage("--size and --instances must be positive"));
    }
    let mut all_ok = true;
    for kind in LossKind::ALL {
        let r = run_suite(kind, a.instances, a.size, a.seed, a.tolerance)?;
        println!(
            "{:<16} instances={} max_rel_error={:.3e} {}",
            kind.name(),
            r.instances,
            r.worst,
            if r.passed { "PASS" } else { "FAIL" }
        );
        all_ok &= r.passed;
        timer.stage(kind.name());
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[derive(Debug, Args)]
pub struct VizArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    outdir: PathBuf,
    /// File name prefix; defaults to the input's image id.
    #[arg(long)]
    prefix: Option<String>,
}

pub fn viz(a: &VizArgs, timer: &mut Timer) -> Result<ExitCode> {
    let data = io::read_field(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    timer.stage("read");
    fs::create_dir_all(&a.outdir).with_context(|| format!("creating {}", a.outdir.display()))?;
    let prefix = a.prefix.clone().unwrap_or_else(|| image_id_of(&a.input));
    let path = |name: &str| a.outdir.join(format!("{prefix}.{name}.pgm"));
    match data {
        FieldData::Direction(f) => {
            io::export_pgm(f.sin(), &path("sin"))?;
            io::export_pgm(f.cos(), &path("cos"))?;
            io::export_pgm(&decode_angle(&f), &path("angle"))?;
            let resp = handcrafted_response(&f, &LocalizerConfig::default())?;
            io::export_pgm(&resp, &path("response"))?;
        }
        FieldData::Score(g) => io::export_pgm(&g, &path("score"))?,
    }
    timer.stage("export");
    Ok(ExitCode::SUCCESS)
}
