//! Pinhole forward model producing synthetic elemental images.
//!
//! A scene point `(x0, y0, z0)` is seen by lenslet `(p, q)` at display
//! coordinate `u = c_p - (x0 - c_p) g / z0` (image inverted through the
//! lenslet center). Point emitters are splatted bilinearly; textured planes
//! are sampled once per pixel through the inverse map. Both fall off with
//! the squared pixel-to-point distance.

use alloc::vec::Vec;

use crate::error::{positive, Error, Result};
use crate::exec;
use crate::optics::OpticalSystemConfig;
use crate::psf::splat;
use crate::reconstruct::ElementalImageSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEmitter {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

/// Raster texture on a plane at depth `z`, facing the array.
///
/// Texture column `i` runs along `+x` and row `j` along `+y`; the raster
/// spans `width x height` mm centered at `(center_x, center_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TexturedPlane {
    pub z: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub width: f64,
    pub height: f64,
    pub texture_nx: usize,
    pub texture_ny: usize,
    pub texture: Vec<f64>,
    pub intensity_scale: f64,
}

impl TexturedPlane {
    /// Bilinear texture value at global `(x, y)` with sample centers on a
    /// regular lattice; `None` off the plane.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let lx = (x - self.center_x) / self.width + 0.5;
        let ly = (y - self.center_y) / self.height + 0.5;
        if !((0.0..1.0).contains(&lx) && (0.0..1.0).contains(&ly)) {
            return None;
        }
        let (nx, ny) = (self.texture_nx, self.texture_ny);
        let fx = (lx * nx as f64 - 0.5).clamp(0.0, (nx - 1) as f64);
        let fy = (ly * ny as f64 - 0.5).clamp(0.0, (ny - 1) as f64);
        let i0 = (libm::floor(fx) as usize).min(nx - 1);
        let j0 = (libm::floor(fy) as usize).min(ny - 1);
        let (i1, j1) = ((i0 + 1).min(nx - 1), (j0 + 1).min(ny - 1));
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let t = |i: usize, j: usize| self.texture[j * nx + i];
        Some(
            (1.0 - ty) * ((1.0 - tx) * t(i0, j0) + tx * t(i1, j0))
                + ty * ((1.0 - tx) * t(i0, j1) + tx * t(i1, j1)),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub points: Vec<PointEmitter>,
    pub planes: Vec<TexturedPlane>,
}

impl Scene {
    /// Unit-intensity emitter on the axis at depth `d`.
    pub fn point_source(d: f64) -> Result<Self> {
        positive("D", d)?;
        Ok(Scene {
            points: alloc::vec![PointEmitter {
                x: 0.0,
                y: 0.0,
                z: d,
                intensity: 1.0,
            }],
            planes: Vec::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        for pt in &self.points {
            positive("emitter z", pt.z)?;
            if !(pt.intensity >= 0.0 && pt.intensity.is_finite()) {
                return Err(Error::Domain {
                    name: "emitter intensity",
                    value: pt.intensity,
                    reason: "must be finite and non-negative",
                });
            }
        }
        for pl in &self.planes {
            positive("plane z", pl.z)?;
            positive("plane width", pl.width)?;
            positive("plane height", pl.height)?;
            if pl.texture_nx == 0 || pl.texture_ny == 0 || pl.texture.len() != pl.texture_nx * pl.texture_ny {
                return Err(Error::Config("texture dimensions do not match its data".into()));
            }
            if pl.texture.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || !(pl.intensity_scale >= 0.0) {
                return Err(Error::Config("texture intensities must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    /// Every intensity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for pt in &mut s.points {
            pt.intensity *= factor;
        }
        for pl in &mut s.planes {
            pl.intensity_scale *= factor;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureSettings {
    pub pixels_x: usize,
    pub pixels_y: usize,
    pub pixel_pitch: f64,
}

impl CaptureSettings {
    /// Square elemental images of `pixels` per side that exactly fill the
    /// lens pitch along x.
    pub fn filling(cfg: &OpticalSystemConfig, pixels: usize) -> Self {
        CaptureSettings {
            pixels_x: pixels,
            pixels_y: pixels,
            pixel_pitch: cfg.pitch_x.min(cfg.pitch_y) / pixels as f64,
        }
    }
}

/// Emitter projections that fell outside their elemental image.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CaptureReport {
    pub projections: usize,
    pub vignetted: usize,
}

/// Renders `scene` through every lenslet of `cfg`.
pub fn capture(
    scene: &Scene,
    cfg: &OpticalSystemConfig,
    settings: &CaptureSettings,
) -> Result<(ElementalImageSet, CaptureReport)> {
    scene.validate()?;
    let blank = ElementalImageSet::zeros(cfg.clone(), settings.pixels_x, settings.pixels_y, settings.pixel_pitch)?;
    let g = cfg.gap;
    let (nx, ny) = (settings.pixels_x, settings.pixels_y);
    let centers: Vec<_> = cfg.lenslet_centers().collect();

    let rendered: Vec<(Vec<f64>, CaptureReport)> = exec::map_indexed(centers.len(), |k| {
        let (_, _, cp, cq) = centers[k];
        let mut img = alloc::vec![0.0; nx * ny];
        let mut report = CaptureReport::default();

        for pl in &scene.planes {
            let mag = pl.z / g;
            for j in 0..ny {
                let dv = (j as f64 - 0.5 * (ny - 1) as f64) * blank.pixel_pitch;
                for i in 0..nx {
                    let du = (i as f64 - 0.5 * (nx - 1) as f64) * blank.pixel_pitch;
                    let (x, y) = (cp - du * mag, cq - dv * mag);
                    if let Some(t) = pl.sample(x, y) {
                        let (ex, ey) = (x - (cp + du), y - (cq + dv));
                        let axial = pl.z + g;
                        img[j * nx + i] += pl.intensity_scale * t / (axial * axial + ex * ex + ey * ey);
                    }
                }
            }
        }

        for pt in &scene.points {
            report.projections += 1;
            let scale = g / pt.z;
            let (du, dv) = (-(pt.x - cp) * scale, -(pt.y - cq) * scale);
            if !blank.on_image(du, dv) {
                report.vignetted += 1;
                continue;
            }
            let (ex, ey) = (pt.x - (cp + du), pt.y - (cq + dv));
            let axial = pt.z + g;
            let value = pt.intensity / (axial * axial + ex * ex + ey * ey);
            let fx = blank.pixel_index(du, nx).clamp(0.0, (nx - 1) as f64);
            let fy = blank.pixel_index(dv, ny).clamp(0.0, (ny - 1) as f64);
            splat(&mut img, nx, ny, fx, fy, value);
        }
        (img, report)
    });

    let mut report = CaptureReport::default();
    let mut images = Vec::with_capacity(rendered.len());
    for (img, r) in rendered {
        report.projections += r.projections;
        report.vignetted += r.vignetted;
        images.push(img);
    }
    if report.vignetted > 0 {
        log::debug!("{} of {} emitter projections vignetted", report.vignetted, report.projections);
    }
    let eis = ElementalImageSet::new(cfg.clone(), nx, ny, settings.pixel_pitch, images)?;
    Ok((eis, report))
}
