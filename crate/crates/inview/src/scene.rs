//! Scene description JSON.
//!
//! ```json
//! {
//!   "points": [{"x_mm": 0, "y_mm": 0, "z_mm": 360, "intensity": 1}],
//!   "planes": [{"z_mm": 300, "center_x_mm": 0, "center_y_mm": 0,
//!               "width_mm": 60, "height_mm": 60, "intensity_scale": 1,
//!               "texture_pgm": "texture.pgm"}]
//! }
//! ```
//!
//! A plane carries either `texture_pgm` (values scaled to `[0, 1]`) or
//! `texture_rows` (rows of non-negative numbers). Texture row 0 lies at the
//! most negative `y`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use inview_core::{PointEmitter, Scene, TexturedPlane};

use crate::error::{AppError, Result};
use crate::pgm::{self, MAXVAL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x_mm: f64,
    pub y_mm: f64,
    pub z_mm: f64,
    #[serde(default = "one")]
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub z_mm: f64,
    #[serde(default)]
    pub center_x_mm: f64,
    #[serde(default)]
    pub center_y_mm: f64,
    pub width_mm: f64,
    pub height_mm: f64,
    #[serde(default = "one")]
    pub intensity_scale: f64,
    #[serde(default)]
    pub texture_pgm: Option<PathBuf>,
    #[serde(default)]
    pub texture_rows: Option<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub points: Vec<PointSpec>,
    #[serde(default)]
    pub planes: Vec<PlaneSpec>,
}

impl SceneSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::json(path, e))
    }

    /// Builds the scene; texture files resolve against `base`.
    pub fn build(&self, base: &Path, origin: &Path) -> Result<Scene> {
        let points = self
            .points
            .iter()
            .map(|p| PointEmitter {
                x: p.x_mm,
                y: p.y_mm,
                z: p.z_mm,
                intensity: p.intensity,
            })
            .collect();
        let mut planes = Vec::with_capacity(self.planes.len());
        for (k, spec) in self.planes.iter().enumerate() {
            let (nx, ny, texture) = match (&spec.texture_pgm, &spec.texture_rows) {
                (Some(file), None) => {
                    let img = pgm::read(&base.join(file))?;
                    let data = img.pixels.iter().map(|&v| v as f64 / MAXVAL as f64).collect();
                    (img.width, img.height, data)
                }
                (None, Some(rows)) => {
                    let nx = rows.first().map_or(0, Vec::len);
                    if nx == 0 || rows.iter().any(|r| r.len() != nx) {
                        return Err(AppError::format(
                            origin,
                            format!("plane {k}: texture_rows must be a non-empty rectangle"),
                        ));
                    }
                    (nx, rows.len(), rows.concat())
                }
                _ => {
                    return Err(AppError::format(
                        origin,
                        format!("plane {k}: give exactly one of texture_pgm or texture_rows"),
                    ))
                }
            };
            planes.push(TexturedPlane {
                z: spec.z_mm,
                center_x: spec.center_x_mm,
                center_y: spec.center_y_mm,
                width: spec.width_mm,
                height: spec.height_mm,
                texture_nx: nx,
                texture_ny: ny,
                texture,
                intensity_scale: spec.intensity_scale,
            });
        }
        let scene = Scene { points, planes };
        scene.validate()?;
        Ok(scene)
    }
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let spec = SceneSpec::load(path)?;
    spec.build(path.parent().unwrap_or(Path::new("")), path)
}
