//! Run configuration: one JSON document, unknown keys rejected, units in
//! every key name. Command-line flags override individual values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use inview_core::optics::{DEFAULT_FOCUS_EPSILON, DEFAULT_WAVELENGTH_NM};
use inview_core::{ApertureShape, OpticalSystemConfig, PlaneGrid, ScanAxis};

use crate::error::{AppError, Result};
use crate::manifest::Centering;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub optics: OpticsBlock,
    #[serde(default)]
    pub plane: Option<PlaneBlock>,
    #[serde(default)]
    pub scan: Option<ScanBlock>,
    #[serde(default)]
    pub capture: Option<CaptureBlock>,
    #[serde(default)]
    pub reconstruct: Option<ReconstructBlock>,
    #[serde(default)]
    pub io: IoBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Aperture {
    #[default]
    Ellipse,
    Rectangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticsBlock {
    pub m: usize,
    pub n: usize,
    pub pitch_x_mm: f64,
    pub pitch_y_mm: f64,
    pub g_mm: f64,
    pub f_mm: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    #[serde(default)]
    pub aperture_shape: Aperture,
    #[serde(default = "default_epsilon")]
    pub focus_epsilon: f64,
    #[serde(default)]
    pub z_i_override_mm: Option<f64>,
    #[serde(default)]
    pub centering: Centering,
}

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH_NM
}

fn default_epsilon() -> f64 {
    DEFAULT_FOCUS_EPSILON
}

impl OpticsBlock {
    pub fn to_config(&self) -> OpticalSystemConfig {
        OpticalSystemConfig::new(self.m, self.n, self.pitch_x_mm, self.g_mm, self.f_mm)
            .with_pitches(self.pitch_x_mm, self.pitch_y_mm)
            .with_wavelength_nm(self.wavelength_nm)
            .with_aperture(match self.aperture_shape {
                Aperture::Ellipse => ApertureShape::Ellipse,
                Aperture::Rectangle => ApertureShape::Rectangle,
            })
            .with_focus_epsilon(self.focus_epsilon)
            .with_z_i_override(self.z_i_override_mm)
            .with_centering(self.centering.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneBlock {
    #[serde(default)]
    pub theta_x_deg: f64,
    #[serde(default)]
    pub theta_y_deg: f64,
    #[serde(rename = "D_mm")]
    pub d_mm: f64,
    #[serde(default)]
    pub half_width_x_mm: Option<f64>,
    #[serde(default)]
    pub half_width_y_mm: Option<f64>,
    #[serde(default)]
    pub sample_pitch_mm: Option<f64>,
}

impl PlaneBlock {
    pub fn grid(&self) -> Result<PlaneGrid> {
        match (self.half_width_x_mm, self.half_width_y_mm, self.sample_pitch_mm) {
            (Some(hx), Some(hy), Some(dp)) => Ok(PlaneGrid::new(hx, hy, dp)?),
            _ => Err(AppError::Usage(
                "plane block needs half_width_x_mm, half_width_y_mm and sample_pitch_mm".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    X,
    Y,
    Diagonal,
}

impl From<Axis> for ScanAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => ScanAxis::X,
            Axis::Y => ScanAxis::Y,
            Axis::Diagonal => ScanAxis::Diagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    #[serde(default)]
    pub axis: Axis,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub steps: usize,
    #[serde(default = "default_ratio")]
    pub threshold_ratio: f64,
}

fn default_ratio() -> f64 {
    inview_core::analyzer::DEFAULT_THRESHOLD_RATIO
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureBlock {
    pub pixels_x: usize,
    pub pixels_y: usize,
    /// Defaults to the pitch that makes the images fill the smaller lens pitch.
    #[serde(default)]
    pub pixel_pitch_mm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Geometric,
    Diffraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReconstructBlock {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub strip_width_mm: Option<f64>,
    #[serde(default)]
    pub kernel_size: Option<usize>,
    #[serde(default)]
    pub pupil_sample_pitch_mm: Option<f64>,
    #[serde(default)]
    pub impulse_psf: bool,
}

/// Paths; relative entries resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct IoBlock {
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub curve_csv: Option<PathBuf>,
    #[serde(default)]
    pub fov_json: Option<PathBuf>,
    #[serde(default)]
    pub out_stem: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| AppError::json(origin, e))
    }

    /// Reads the config and makes its relative paths absolute with respect
    /// to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg = Self::from_json(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let io = &mut cfg.io;
        for p in [
            &mut io.scene,
            &mut io.manifest,
            &mut io.out_dir,
            &mut io.curve_csv,
            &mut io.fov_json,
            &mut io.out_stem,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}
