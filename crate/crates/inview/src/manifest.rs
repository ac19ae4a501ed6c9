//! Elemental-image manifest: `manifest.json` next to one PGM per lenslet,
//! named `e_{p:02}_{q:02}.pgm`.
//!
//! Pixel counts are stored linearly; `intensity_scale` is the intensity of
//! one count, shared by every image in the set.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use inview_core::{ElementalImageSet, LensletCentering, OpticalSystemConfig};

use crate::error::{AppError, Result};
use crate::pgm::{self, Gray16, MAXVAL};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    #[default]
    Symmetric,
    AxisOnLenslet,
}

impl From<Centering> for LensletCentering {
    fn from(c: Centering) -> Self {
        match c {
            Centering::Symmetric => LensletCentering::Symmetric,
            Centering::AxisOnLenslet => LensletCentering::AxisOnLenslet,
        }
    }
}

impl From<LensletCentering> for Centering {
    fn from(c: LensletCentering) -> Self {
        match c {
            LensletCentering::Symmetric => Centering::Symmetric,
            LensletCentering::AxisOnLenslet => Centering::AxisOnLenslet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub p: usize,
    pub q: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub m: usize,
    pub n: usize,
    pub pitch_x_mm: f64,
    pub pitch_y_mm: f64,
    pub g_mm: f64,
    pub f_mm: f64,
    pub wavelength_nm: f64,
    pub pixel_pitch_mm: f64,
    pub pixels_x: usize,
    pub pixels_y: usize,
    pub images: Vec<ImageEntry>,
    #[serde(default = "unit_scale")]
    pub intensity_scale: f64,
    #[serde(default)]
    pub centering: Centering,
}

fn unit_scale() -> f64 {
    1.0
}

pub fn image_file_name(p: usize, q: usize) -> String {
    format!("e_{p:02}_{q:02}.pgm")
}

impl Manifest {
    /// Optical configuration the images were captured with.
    pub fn optical_config(&self) -> OpticalSystemConfig {
        OpticalSystemConfig::new(self.m, self.n, self.pitch_x_mm, self.g_mm, self.f_mm)
            .with_pitches(self.pitch_x_mm, self.pitch_y_mm)
            .with_wavelength_nm(self.wavelength_nm)
            .with_centering(self.centering.into())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| AppError::json(path, e))?;
        fs::write(path, text + "\n").map_err(|e| AppError::io(path, e))
    }
}

/// Writes every elemental image plus `manifest.json` into `dir`.
pub fn save_set(eis: &ElementalImageSet, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let cfg = &eis.config;
    let max = eis.images().iter().flatten().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { max / MAXVAL as f64 } else { 1.0 };
    let mut images = Vec::with_capacity(cfg.m * cfg.n);
    for p in 0..cfg.m {
        for q in 0..cfg.n {
            let file = image_file_name(p, q);
            let pixels = eis
                .image(p, q)
                .iter()
                .map(|&v| (v / scale).round().clamp(0.0, MAXVAL as f64) as u16)
                .collect();
            let img = Gray16 {
                width: eis.pixels_x,
                height: eis.pixels_y,
                pixels,
            };
            pgm::write(&dir.join(&file), &img)?;
            images.push(ImageEntry { p, q, file });
        }
    }
    let manifest = Manifest {
        m: cfg.m,
        n: cfg.n,
        pitch_x_mm: cfg.pitch_x,
        pitch_y_mm: cfg.pitch_y,
        g_mm: cfg.gap,
        f_mm: cfg.focal_length,
        wavelength_nm: cfg.wavelength_nm,
        pixel_pitch_mm: eis.pixel_pitch,
        pixels_x: eis.pixels_x,
        pixels_y: eis.pixels_y,
        images,
        intensity_scale: scale,
        centering: cfg.centering.into(),
    };
    manifest.save(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Loads the set described by the manifest at `path`; image paths are
/// relative to the manifest's directory. `cfg` overrides the optical
/// configuration when its geometry matches the manifest.
pub fn load_set(path: &Path, cfg: Option<OpticalSystemConfig>) -> Result<ElementalImageSet> {
    let manifest = Manifest::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let config = match cfg {
        Some(c) => {
            check_geometry(&manifest, &c, path)?;
            c
        }
        None => manifest.optical_config(),
    };

    let mut slots: Vec<Option<Vec<f64>>> = vec![None; manifest.m * manifest.n];
    for entry in &manifest.images {
        if entry.p >= manifest.m || entry.q >= manifest.n {
            return Err(AppError::format(
                path,
                format!("image entry ({}, {}) outside the {}x{} grid", entry.p, entry.q, manifest.m, manifest.n),
            ));
        }
        let file: PathBuf = base.join(&entry.file);
        let img = pgm::read(&file)?;
        if (img.width, img.height) != (manifest.pixels_x, manifest.pixels_y) {
            return Err(AppError::format(
                &file,
                format!(
                    "image is {}x{}, manifest says {}x{}",
                    img.width, img.height, manifest.pixels_x, manifest.pixels_y
                ),
            ));
        }
        slots[entry.p * manifest.n + entry.q] = Some(img.to_f64(manifest.intensity_scale));
    }
    let mut images = Vec::with_capacity(slots.len());
    for (k, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(img) => images.push(img),
            None => {
                return Err(AppError::format(
                    path,
                    format!("missing elemental image ({}, {})", k / manifest.n, k % manifest.n),
                ))
            }
        }
    }
    Ok(ElementalImageSet::new(
        config,
        manifest.pixels_x,
        manifest.pixels_y,
        manifest.pixel_pitch_mm,
        images,
    )?)
}

fn check_geometry(manifest: &Manifest, cfg: &OpticalSystemConfig, path: &Path) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    let same = manifest.m == cfg.m
        && manifest.n == cfg.n
        && close(manifest.pitch_x_mm, cfg.pitch_x)
        && close(manifest.pitch_y_mm, cfg.pitch_y)
        && close(manifest.g_mm, cfg.gap)
        && LensletCentering::from(manifest.centering) == cfg.centering;
    if same {
        Ok(())
    } else {
        Err(AppError::Usage(format!(
            "optics block does not match the lens array recorded in {}",
            path.display()
        )))
    }
}
