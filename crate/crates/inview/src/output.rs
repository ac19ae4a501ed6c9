//! Result files: resolution curve CSV, FOV JSON, reconstruction PGM with a
//! JSON sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use inview_core::{FovResult, ReconstructMode, Reconstruction, ResolutionCurve};

use crate::error::{AppError, Result};
use crate::pgm::{self, Gray16};

pub const CURVE_HEADER: &str = "theta_x_deg,theta_y_deg,radial_extent_mm";

pub fn curve_csv(curve: &ResolutionCurve) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for s in &curve.samples {
        let _ = writeln!(out, "{:.10e},{:.10e},{:.10e}", s.theta_x_deg, s.theta_y_deg, s.radial_extent);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FovJson {
    pub threshold_ratio: f64,
    pub min_extent_mm: f64,
    pub fov_negative_deg: Option<f64>,
    pub fov_positive_deg: Option<f64>,
}

impl From<&FovResult> for FovJson {
    fn from(f: &FovResult) -> Self {
        FovJson {
            threshold_ratio: f.threshold_ratio,
            min_extent_mm: f.min_extent,
            fov_negative_deg: f.fov_negative,
            fov_positive_deg: f.fov_positive,
        }
    }
}

/// Reconstruction metadata; `max_intensity` is the field value stored as
/// 65535 in the PGM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub theta_x_deg: f64,
    pub theta_y_deg: f64,
    #[serde(rename = "D_mm")]
    pub d_mm: f64,
    pub sample_pitch_mm: f64,
    pub mode: String,
    pub half_width_x_mm: f64,
    pub half_width_y_mm: f64,
    pub max_intensity: f64,
    pub image: String,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| AppError::json(path, e))?;
    write_text(path, &(text + "\n"))
}

/// Writes `<stem>.pgm` and `<stem>.json`; returns both paths.
pub fn write_reconstruction(stem: &Path, recon: &Reconstruction) -> Result<(PathBuf, PathBuf)> {
    let pgm_path = with_suffix(stem, ".pgm");
    let json_path = with_suffix(stem, ".json");
    if let Some(dir) = pgm_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let f = &recon.field;
    let (img, _) = Gray16::quantize(f.nx, f.ny, &f.data);
    pgm::write(&pgm_path, &img)?;
    let plane = &recon.plane;
    let sidecar = Sidecar {
        theta_x_deg: plane.theta_x_deg,
        theta_y_deg: plane.theta_y_deg,
        d_mm: plane.axial_offset,
        sample_pitch_mm: plane.grid.sample_pitch,
        mode: match recon.mode {
            ReconstructMode::Geometric => "geometric",
            ReconstructMode::Diffraction => "diffraction",
        }
        .into(),
        half_width_x_mm: plane.grid.half_width_x,
        half_width_y_mm: plane.grid.half_width_y,
        max_intensity: f.max(),
        image: pgm_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    write_json(&json_path, &sidecar)?;
    Ok((pgm_path, json_path))
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
