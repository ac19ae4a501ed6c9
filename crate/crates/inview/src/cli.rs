//! Command-line surface. Every command reads one JSON run config; flags
//! override the matching config values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use inview_core::reconstruct::PsfModel;
use inview_core::{
    capture, extract_fov, reconstruct, scan_resolution, CaptureSettings, OpticalSystemConfig, PlaneGrid,
    ReconstructMode, ReconstructOptions, TiltedPlaneSpec,
};

use crate::config::{Axis, Mode, RunConfig};
use crate::error::{AppError, Result};
use crate::manifest::{self, MANIFEST_FILE};
use crate::output::{self, FovJson};
use crate::scene;

pub const LOG_ENV: &str = "INVIEW_LOG";

#[derive(Debug, Parser)]
#[command(name = "inview", version, about = "Integral-imaging resolution analysis and tilted-plane reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene into elemental images plus manifest.json.
    Synth(SynthArgs),
    /// Scan the point-source spot size over tilt and extract the FOV.
    Analyze(AnalyzeArgs),
    /// Reconstruct an elemental-image set on one or more tilted planes.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Pixels per elemental-image side.
    #[arg(long)]
    pub pixels: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
    Diagonal,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long = "D-mm")]
    pub d_mm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_min_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max_deg: Option<f64>,
    #[arg(long)]
    pub threshold_ratio: Option<f64>,
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Geometric,
    Diffraction,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// One angle or a comma-separated sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta_x_deg: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_y_deg: Option<f64>,
    #[arg(long = "D-mm")]
    pub d_mm: Option<f64>,
    #[arg(long)]
    pub half_width_x_mm: Option<f64>,
    #[arg(long)]
    pub half_width_y_mm: Option<f64>,
    #[arg(long)]
    pub sample_pitch_mm: Option<f64>,
    /// Output path stem; `.pgm` and `.json` are appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use a discrete impulse instead of the pupil PSF.
    #[arg(long)]
    pub impulse_psf: bool,
    #[arg(long)]
    pub strip_width_mm: Option<f64>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => run_synth(&a).map(|_| ()),
        Command::Analyze(a) => run_analyze(&a).map(|_| ()),
        Command::Reconstruct(a) => run_reconstruct(&a).map(|_| ()),
    }
}

fn required<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| AppError::Usage(format!("missing {what}")))
}

/// Returns the directory the set was written to.
pub fn run_synth(args: &SynthArgs) -> Result<PathBuf> {
    let cfg = RunConfig::load(&args.config)?;
    let optics = cfg.optics.to_config();
    optics.validate()?;
    let scene_path = required(args.scene.clone().or(cfg.io.scene.clone()), "scene (--scene or io.scene)")?;
    let out_dir = required(args.out_dir.clone().or(cfg.io.out_dir.clone()), "output directory (--out-dir or io.out_dir)")?;
    let settings = capture_settings(&cfg, &optics, args.pixels)?;

    let scene = scene::load_scene(&scene_path)?;
    let (eis, report) = capture(&scene, &optics, &settings)?;
    if report.vignetted > 0 {
        log::info!("{} of {} point projections fell outside their elemental image", report.vignetted, report.projections);
    }
    manifest::save_set(&eis, &out_dir)?;
    log::info!("wrote {} elemental images to {}", optics.m * optics.n, out_dir.display());
    Ok(out_dir)
}

fn capture_settings(cfg: &RunConfig, optics: &OpticalSystemConfig, pixels: Option<usize>) -> Result<CaptureSettings> {
    let block = cfg.capture.as_ref();
    let (px, py) = match (pixels, block) {
        (Some(p), _) => (p, p),
        (None, Some(b)) => (b.pixels_x, b.pixels_y),
        (None, None) => return Err(AppError::Usage("missing capture block or --pixels".into())),
    };
    if px == 0 || py == 0 {
        return Err(AppError::Usage("elemental images need at least one pixel per side".into()));
    }
    let pitch = match block.and_then(|b| b.pixel_pitch_mm) {
        Some(p) if pixels.is_none() => p,
        _ => (optics.pitch_x / px as f64).min(optics.pitch_y / py as f64),
    };
    Ok(CaptureSettings {
        pixels_x: px,
        pixels_y: py,
        pixel_pitch: pitch,
    })
}

/// Returns the CSV and JSON paths.
pub fn run_analyze(args: &AnalyzeArgs) -> Result<(PathBuf, PathBuf)> {
    let cfg = RunConfig::load(&args.config)?;
    let optics = cfg.optics.to_config();
    let scan = cfg.scan.clone();
    let steps = required(args.steps.or(scan.as_ref().map(|s| s.steps)), "scan steps (--steps or scan.steps)")?;
    if steps < 3 {
        return Err(AppError::Usage(format!("scan needs at least 3 steps, got {steps}")));
    }
    let d = required(args.d_mm.or(cfg.plane.as_ref().map(|p| p.d_mm)), "D (--D-mm or plane.D_mm)")?;
    let lo = required(args.theta_min_deg.or(scan.as_ref().map(|s| s.theta_min_deg)), "theta_min_deg")?;
    let hi = required(args.theta_max_deg.or(scan.as_ref().map(|s| s.theta_max_deg)), "theta_max_deg")?;
    let ratio = args
        .threshold_ratio
        .or(scan.as_ref().map(|s| s.threshold_ratio))
        .unwrap_or(inview_core::analyzer::DEFAULT_THRESHOLD_RATIO);
    let axis = match args.axis {
        Some(AxisArg::X) => Axis::X,
        Some(AxisArg::Y) => Axis::Y,
        Some(AxisArg::Diagonal) => Axis::Diagonal,
        None => scan.as_ref().map(|s| s.axis).unwrap_or_default(),
    };

    let curve = scan_resolution(&optics, d, axis.into(), lo, hi, steps)?;
    let fov = extract_fov(&curve, ratio)?;

    let out_dir = args.out_dir.clone().or(cfg.io.out_dir.clone());
    let pick = |explicit: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
        match (&out_dir, explicit) {
            (Some(dir), _) if args.out_dir.is_some() => Ok(dir.join(name)),
            (_, Some(p)) => Ok(p.clone()),
            (Some(dir), None) => Ok(dir.join(name)),
            (None, None) => Err(AppError::Usage(format!("no path for {name} (--out-dir or io block)"))),
        }
    };
    let csv_path = pick(&cfg.io.curve_csv, "curve.csv")?;
    let fov_path = pick(&cfg.io.fov_json, "fov.json")?;
    output::write_text(&csv_path, &output::curve_csv(&curve))?;
    output::write_json(&fov_path, &FovJson::from(&fov))?;
    log::info!(
        "minimum extent {:.6} mm at {} deg; FOV {:?} .. {:?} deg",
        fov.min_extent,
        fov.min_theta_deg,
        fov.fov_negative,
        fov.fov_positive
    );
    Ok((csv_path, fov_path))
}

/// Returns the written PGM paths, one per swept angle.
pub fn run_reconstruct(args: &ReconstructArgs) -> Result<Vec<PathBuf>> {
    let cfg = match &args.config {
        Some(p) => Some(RunConfig::load(p)?),
        None => None,
    };
    let manifest_path = match args.manifest.clone().or(cfg.as_ref().and_then(|c| c.io.manifest.clone())) {
        Some(p) if p.is_dir() => p.join(MANIFEST_FILE),
        Some(p) => p,
        None => return Err(AppError::Usage("missing manifest (--manifest or io.manifest)".into())),
    };
    let eis = manifest::load_set(&manifest_path, cfg.as_ref().map(|c| c.optics.to_config()))?;

    let plane_block = cfg.as_ref().and_then(|c| c.plane.clone());
    let recon_block = cfg.as_ref().and_then(|c| c.reconstruct.clone()).unwrap_or_default();
    let d = required(args.d_mm.or(plane_block.as_ref().map(|p| p.d_mm)), "D (--D-mm or plane.D_mm)")?;
    let grid = PlaneGrid::new(
        required(
            args.half_width_x_mm.or(plane_block.as_ref().and_then(|p| p.half_width_x_mm)),
            "half_width_x_mm",
        )?,
        required(
            args.half_width_y_mm.or(plane_block.as_ref().and_then(|p| p.half_width_y_mm)),
            "half_width_y_mm",
        )?,
        required(
            args.sample_pitch_mm.or(plane_block.as_ref().and_then(|p| p.sample_pitch_mm)),
            "sample_pitch_mm",
        )?,
    )?;
    let thetas_x = if args.theta_x_deg.is_empty() {
        vec![plane_block.as_ref().map_or(0.0, |p| p.theta_x_deg)]
    } else {
        args.theta_x_deg.clone()
    };
    let theta_y = args.theta_y_deg.or(plane_block.as_ref().map(|p| p.theta_y_deg)).unwrap_or(0.0);

    let mode = match args.mode {
        Some(ModeArg::Geometric) => ReconstructMode::Geometric,
        Some(ModeArg::Diffraction) => ReconstructMode::Diffraction,
        None => match recon_block.mode {
            Mode::Geometric => ReconstructMode::Geometric,
            Mode::Diffraction => ReconstructMode::Diffraction,
        },
    };
    let psf = if args.impulse_psf || recon_block.impulse_psf {
        PsfModel::Impulse
    } else {
        PsfModel::Pupil {
            kernel_size: recon_block.kernel_size.unwrap_or(1024),
            pupil_sample_pitch: recon_block.pupil_sample_pitch_mm,
        }
    };
    let options = ReconstructOptions {
        mode,
        strip_width: args.strip_width_mm.or(recon_block.strip_width_mm),
        psf,
    };

    let stem = args
        .out
        .clone()
        .or(cfg.as_ref().and_then(|c| c.io.out_stem.clone()))
        .or(cfg.as_ref().and_then(|c| c.io.out_dir.as_ref().map(|d| d.join("recon"))))
        .ok_or_else(|| AppError::Usage("missing output stem (--out or io.out_stem)".into()))?;

    let mut written = Vec::with_capacity(thetas_x.len());
    for &tx in &thetas_x {
        let plane = TiltedPlaneSpec::new(tx, theta_y, d, grid)?;
        let recon = reconstruct(&eis, &plane, &options)?;
        let target = if thetas_x.len() == 1 { stem.clone() } else { sweep_stem(&stem, tx) };
        let (pgm, _) = output::write_reconstruction(&target, &recon)?;
        log::info!("theta_x = {tx} deg -> {}", pgm.display());
        written.push(pgm);
    }
    Ok(written)
}

fn sweep_stem(stem: &Path, theta_x: f64) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(format!("_tx{theta_x}"));
    PathBuf::from(s)
}
