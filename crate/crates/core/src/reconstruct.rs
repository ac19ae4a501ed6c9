//! Back-projection of elemental images onto tilted planes, with optional
//! defocus/diffraction blur.
//!
//! Every plane sample `(x_t, y_t)` sits at global `(x_t cos tx, y_t cos ty)`
//! and local depth `z = D + x_t sin tx + y_t sin ty`. Lenslet `(p, q)` maps it
//! back to display coordinate `c - (x - c) / M` with `M = z / g`; the looked-up
//! intensity is divided by the squared pixel-to-point distance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{positive, Error, Result};
use crate::exec;
use crate::fft::{self, Grid2};
use crate::field::ScalarField2D;
use crate::optics::{ImageDistance, OpticalSystemConfig, PlaneGrid, PlaneTrig, TiltedPlaneSpec};
use crate::psf::{self, defocus_psf};

/// An `m x n` grid of elemental images sharing one pixel geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementalImageSet {
    pub config: OpticalSystemConfig,
    pub pixels_x: usize,
    pub pixels_y: usize,
    pub pixel_pitch: f64,
    // index p * n + q, each row-major with x fastest
    images: Vec<Vec<f64>>,
}

impl ElementalImageSet {
    pub fn new(
        config: OpticalSystemConfig,
        pixels_x: usize,
        pixels_y: usize,
        pixel_pitch: f64,
        images: Vec<Vec<f64>>,
    ) -> Result<Self> {
        config.validate()?;
        positive("pixel_pitch", pixel_pitch)?;
        if pixels_x == 0 || pixels_y == 0 {
            return Err(Error::Config("elemental images need at least one pixel".into()));
        }
        let tol = 1e-9;
        if pixels_x as f64 * pixel_pitch > config.pitch_x * (1.0 + tol)
            || pixels_y as f64 * pixel_pitch > config.pitch_y * (1.0 + tol)
        {
            return Err(Error::Config(alloc::format!(
                "elemental image {}x{} px at {} mm exceeds the lens pitch",
                pixels_x,
                pixels_y,
                pixel_pitch
            )));
        }
        if images.len() != config.m * config.n {
            return Err(Error::Config(alloc::format!(
                "expected {} elemental images, got {}",
                config.m * config.n,
                images.len()
            )));
        }
        for (k, img) in images.iter().enumerate() {
            if img.len() != pixels_x * pixels_y {
                return Err(Error::Config(alloc::format!(
                    "elemental image ({}, {}) has {} samples, expected {}",
                    k / config.n,
                    k % config.n,
                    img.len(),
                    pixels_x * pixels_y
                )));
            }
            if img.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::Config(alloc::format!(
                    "elemental image ({}, {}) has negative or non-finite intensity",
                    k / config.n,
                    k % config.n
                )));
            }
        }
        Ok(ElementalImageSet {
            config,
            pixels_x,
            pixels_y,
            pixel_pitch,
            images,
        })
    }

    pub fn zeros(config: OpticalSystemConfig, pixels_x: usize, pixels_y: usize, pixel_pitch: f64) -> Result<Self> {
        let count = config.m * config.n;
        let images = vec![vec![0.0; pixels_x * pixels_y]; count];
        Self::new(config, pixels_x, pixels_y, pixel_pitch, images)
    }

    pub fn image(&self, p: usize, q: usize) -> &[f64] {
        &self.images[p * self.config.n + q]
    }

    pub fn image_mut(&mut self, p: usize, q: usize) -> &mut [f64] {
        let n = self.config.n;
        &mut self.images[p * n + q]
    }

    /// Images in lexicographic `(p, q)` order.
    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }

    pub fn into_images(self) -> Vec<Vec<f64>> {
        self.images
    }

    /// Fractional pixel index of a display offset from the lenslet center.
    #[inline]
    pub fn pixel_index(&self, offset: f64, pixels: usize) -> f64 {
        offset / self.pixel_pitch + 0.5 * (pixels - 1) as f64
    }

    /// Whether a display offset lies on the physical elemental image.
    #[inline]
    pub fn on_image(&self, du: f64, dv: f64) -> bool {
        let hx = 0.5 * self.pixels_x as f64 * self.pixel_pitch;
        let hy = 0.5 * self.pixels_y as f64 * self.pixel_pitch;
        du >= -hx && du < hx && dv >= -hy && dv < hy
    }

    /// Bilinear lookup at display offset `(du, dv)` from the center of
    /// lenslet `(p, q)`; zero off the image, clamped to edge pixels within it.
    pub fn sample(&self, p: usize, q: usize, du: f64, dv: f64) -> f64 {
        if !self.on_image(du, dv) {
            return 0.0;
        }
        let (nx, ny) = (self.pixels_x, self.pixels_y);
        let fx = self.pixel_index(du, nx).clamp(0.0, (nx - 1) as f64);
        let fy = self.pixel_index(dv, ny).clamp(0.0, (ny - 1) as f64);
        let i0 = (libm::floor(fx) as usize).min(nx - 1);
        let j0 = (libm::floor(fy) as usize).min(ny - 1);
        let i1 = (i0 + 1).min(nx - 1);
        let j1 = (j0 + 1).min(ny - 1);
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let img = self.image(p, q);
        let at = |i: usize, j: usize| img[j * nx + i];
        (1.0 - ty) * ((1.0 - tx) * at(i0, j0) + tx * at(i1, j0))
            + ty * ((1.0 - tx) * at(i0, j1) + tx * at(i1, j1))
    }

    /// Every intensity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for img in &mut out.images {
            for v in img.iter_mut() {
                *v *= factor;
            }
        }
        out
    }
}

/// `M = (D + x sin tx + y sin ty) / g`.
pub fn magnification(x: f64, y: f64, plane: &TiltedPlaneSpec, g: f64) -> Result<f64> {
    positive("gap", g)?;
    let depth = plane.local_depth(&plane.trig(), x, y);
    if !(depth > 0.0) {
        return Err(Error::BehindArray { depth });
    }
    Ok(depth / g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructMode {
    Geometric,
    Diffraction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsfModel {
    /// Pupil-derived PSF. `pupil_sample_pitch: None` picks the pitch per strip.
    Pupil {
        kernel_size: usize,
        pupil_sample_pitch: Option<f64>,
    },
    /// Discrete impulse; diffraction mode then reproduces geometric mode.
    Impulse,
}

impl Default for PsfModel {
    fn default() -> Self {
        PsfModel::Pupil {
            kernel_size: 1024,
            pupil_sample_pitch: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    pub mode: ReconstructMode,
    /// Strip width along the depth gradient; `None` keeps the local depth
    /// within 2% of `D` across each strip.
    pub strip_width: Option<f64>,
    pub psf: PsfModel,
}

impl ReconstructOptions {
    pub fn geometric() -> Self {
        ReconstructOptions {
            mode: ReconstructMode::Geometric,
            strip_width: None,
            psf: PsfModel::default(),
        }
    }

    pub fn diffraction() -> Self {
        ReconstructOptions {
            mode: ReconstructMode::Diffraction,
            ..Self::geometric()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub plane: TiltedPlaneSpec,
    pub field: ScalarField2D,
    pub mode: ReconstructMode,
    /// Number of (sample, lenslet) lookups that landed on an elemental image.
    pub lookups_on_image: usize,
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn lenslet_contribution(eis: &ElementalImageSet, p: usize, q: usize, cp: f64, cq: f64, x: f64, y: f64, z: f64, hits: &mut usize) -> f64 {
    let g = eis.config.gap;
    let m = z / g;
    let (dx, dy) = (x - cp, y - cq);
    let intensity = eis.sample(p, q, -dx / m, -dy / m);
    if intensity == 0.0 {
        return 0.0;
    }
    *hits += 1;
    let grow = 1.0 + 1.0 / m;
    let axial = z + g;
    intensity / (axial * axial + (dx * dx + dy * dy) * grow * grow)
}

fn check_in_front(plane: &TiltedPlaneSpec, trig: &PlaneTrig) -> Result<()> {
    let g = &plane.grid;
    let (nx, ny) = g.counts();
    let hx = (nx / 2) as f64 * g.sample_pitch;
    let hy = (ny / 2) as f64 * g.sample_pitch;
    let nearest = plane.axial_offset - hx * libm::fabs(trig.sin_x) - hy * libm::fabs(trig.sin_y);
    if !(nearest > 0.0) {
        return Err(Error::BehindArray { depth: nearest });
    }
    Ok(())
}

fn finish(field: ScalarField2D, hits: Vec<usize>, plane: &TiltedPlaneSpec) -> Reconstruction {
    let lookups_on_image = hits.iter().sum();
    if lookups_on_image == 0 {
        log::warn!(
            "no elemental image sees the plane at D = {} mm (tilt {}, {} deg); field is zero",
            plane.axial_offset,
            plane.theta_x_deg,
            plane.theta_y_deg
        );
    }
    Reconstruction {
        plane: *plane,
        field,
        mode: ReconstructMode::Geometric,
        lookups_on_image,
    }
}

/// Geometric back-projection onto a tilted plane, summed over lenslets in
/// lexicographic order.
pub fn backproject_geometric(eis: &ElementalImageSet, plane: &TiltedPlaneSpec) -> Result<Reconstruction> {
    plane.validate()?;
    let trig = plane.trig();
    check_in_front(plane, &trig)?;
    let centers: Vec<_> = eis.config.lenslet_centers().collect();
    let mut field = ScalarField2D::for_grid(&plane.grid);
    let nx = field.nx;
    let xs: Vec<f64> = (0..nx).map(|i| field.x(i)).collect();
    let ys: Vec<f64> = (0..field.ny).map(|j| field.y(j)).collect();
    let rows: Vec<(Vec<f64>, usize)> = exec::map_indexed(field.ny, |j| {
        let yt = ys[j];
        let mut hits = 0;
        let row = xs
            .iter()
            .map(|&xt| {
                let z = plane.local_depth(&trig, xt, yt);
                let (x, y) = (xt * trig.cos_x, yt * trig.cos_y);
                let mut acc = 0.0;
                for &(p, q, cp, cq) in &centers {
                    acc += lenslet_contribution(eis, p, q, cp, cq, x, y, z, &mut hits);
                }
                acc
            })
            .collect();
        (row, hits)
    });
    let mut hits = Vec::with_capacity(rows.len());
    for (j, (row, h)) in rows.into_iter().enumerate() {
        field.data[j * nx..(j + 1) * nx].copy_from_slice(&row);
        hits.push(h);
    }
    Ok(finish(field, hits, plane))
}

/// Normal-view back-projection at depth `z` (no tilt), sampled on `grid`.
pub fn backproject_normal(eis: &ElementalImageSet, z: f64, grid: &PlaneGrid) -> Result<ScalarField2D> {
    positive("z", z)?;
    grid.validate()?;
    let g = eis.config.gap;
    let mag = z / g;
    let mut field = ScalarField2D::for_grid(grid);
    let xs: Vec<f64> = (0..field.nx).map(|i| field.x(i)).collect();
    let ys: Vec<f64> = (0..field.ny).map(|j| field.y(j)).collect();
    let centers: Vec<_> = eis.config.lenslet_centers().collect();
    exec::for_each_row(&mut field.data, xs.len(), |j, row| {
        let y = ys[j];
        for (out, &x) in row.iter_mut().zip(&xs) {
            let mut acc = 0.0;
            for &(p, q, cp, cq) in &centers {
                let u = cp - (x - cp) / mag;
                let v = cq - (y - cq) / mag;
                let intensity = eis.sample(p, q, u - cp, v - cq);
                let r2 = (z + g) * (z + g)
                    + ((x - cp) * (x - cp) + (y - cq) * (y - cq)) * (1.0 + 1.0 / mag) * (1.0 + 1.0 / mag);
                acc += intensity / r2;
            }
            *out = acc;
        }
    });
    Ok(field)
}

/// Strip decomposition of a tilted plane along its depth gradient.
struct Strips {
    /// Unit direction of the depth gradient in plane coordinates.
    dir: (f64, f64),
    /// Depth change per mm along `dir`.
    slope: f64,
    start: f64,
    width: f64,
    count: usize,
}

impl Strips {
    fn new(field: &ScalarField2D, trig: &PlaneTrig, width: f64) -> Self {
        let slope = libm::hypot(trig.sin_x, trig.sin_y);
        if slope == 0.0 {
            return Strips {
                dir: (0.0, 0.0),
                slope,
                start: 0.0,
                width,
                count: 1,
            };
        }
        let dir = (trig.sin_x / slope, trig.sin_y / slope);
        let corners = [
            (field.x(0), field.y(0)),
            (field.x(field.nx - 1), field.y(0)),
            (field.x(0), field.y(field.ny - 1)),
            (field.x(field.nx - 1), field.y(field.ny - 1)),
        ];
        let s: Vec<f64> = corners.iter().map(|&(x, y)| x * dir.0 + y * dir.1).collect();
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let count = libm::ceil((hi - lo) / width) as usize + 1;
        Strips {
            dir,
            slope,
            start: lo,
            width,
            count,
        }
    }

    fn center(&self, k: usize) -> f64 {
        self.start + k as f64 * self.width
    }

    /// Hat weight of strip `k` at plane point `(x, y)`; weights sum to one.
    fn weight(&self, k: usize, x: f64, y: f64) -> f64 {
        if self.count == 1 {
            return 1.0;
        }
        let s = x * self.dir.0 + y * self.dir.1;
        (1.0 - libm::fabs(s - self.center(k)) / self.width).max(0.0)
    }
}

fn strip_kernel(
    cfg: &OpticalSystemConfig,
    model: PsfModel,
    z_local: f64,
    z_i: ImageDistance,
    pitch: f64,
) -> Result<Grid2> {
    match model {
        PsfModel::Impulse => Ok(Grid2::new(1, 1, vec![1.0])),
        PsfModel::Pupil {
            kernel_size,
            pupil_sample_pitch,
        } => {
            let (kernel_size, du) = match pupil_sample_pitch {
                Some(du) => (kernel_size, du),
                None => auto_pupil_sampling(cfg, z_local, z_i, kernel_size, pitch)?,
            };
            let kernel = defocus_psf(cfg, z_local, z_i, kernel_size, du)?;
            let edge = kernel.edge_ratio();
            if edge > 1e-6 {
                log::debug!("PSF at z = {z_local} mm has edge/peak ratio {edge:.1e}");
            }
            kernel.resample(pitch)
        }
    }
}

/// Pupil sampling for a strip kernel. Picks the smallest pupil sample pitch
/// (widest PSF frame) that still spans twice the pupil and keeps the PSF
/// pitch at or below half of `target_pitch`; the transform doubles (up to
/// 4096) until the defocus phase advances at most `pi / 2` per sample.
pub fn auto_pupil_sampling(
    cfg: &OpticalSystemConfig,
    z_local: f64,
    z_i: ImageDistance,
    min_kernel_size: usize,
    target_pitch: f64,
) -> Result<(usize, f64)> {
    positive("target_pitch", target_pitch)?;
    let aperture = cfg.pitch_x.max(cfg.pitch_y);
    let span = cfg.wavelength_mm() * z_local;
    let guard = 0.5 * psf::max_pupil_sample_pitch(cfg, z_local, z_i);
    let mut n = min_kernel_size.max(psf::MIN_KERNEL_SIZE).next_power_of_two();
    loop {
        let du = (2.0 * aperture / n as f64).max(2.0 * span / (n as f64 * target_pitch));
        if du <= guard {
            return Ok((n, du));
        }
        n *= 2;
        if n > 4096 {
            return Err(Error::PupilSampling {
                reason: "defocus needs a transform larger than 4096; pupil sample pitch would have to be at most",
                limit: guard,
            });
        }
    }
}

/// Spatially varying blur: the plane is cut into strips of near-constant
/// local depth, each strip's share of `field` (hat-weighted, so shares sum
/// to the input) is convolved with the PSF at the strip-center depth, and
/// the results are summed in strip order.
pub fn apply_diffraction(
    field: &ScalarField2D,
    plane: &TiltedPlaneSpec,
    cfg: &OpticalSystemConfig,
    strip_width: Option<f64>,
    model: PsfModel,
) -> Result<ScalarField2D> {
    let trig = plane.trig();
    let slope = libm::hypot(trig.sin_x, trig.sin_y);
    let width = match strip_width {
        Some(w) => {
            if !(w >= field.pitch) {
                return Err(Error::Domain {
                    name: "strip_width",
                    value: w,
                    reason: "must be at least the plane sample pitch",
                });
            }
            w
        }
        None if slope > 0.0 => (0.02 * plane.axial_offset / slope).max(field.pitch),
        None => field.pitch,
    };
    let strips = Strips::new(field, &trig, width);
    let z_i = cfg.image_distance()?;

    let parts: Vec<Result<Option<Grid2>>> = exec::map_indexed(strips.count, |k| {
        let mut share = vec![0.0; field.nx * field.ny];
        let mut any = false;
        for j in 0..field.ny {
            for i in 0..field.nx {
                let w = strips.weight(k, field.x(i), field.y(j));
                let v = field.get(i, j);
                if w > 0.0 && v != 0.0 {
                    share[j * field.nx + i] = w * v;
                    any = true;
                }
            }
        }
        if !any {
            return Ok(None);
        }
        let z_local = plane.axial_offset + strips.slope * strips.center(k);
        if !(z_local > 0.0) {
            return Err(Error::BehindArray { depth: z_local });
        }
        let kernel = strip_kernel(cfg, model, z_local, z_i, field.pitch)?;
        fft::convolve_same(&Grid2::new(field.nx, field.ny, share), &kernel).map(Some)
    });

    let mut out = ScalarField2D::zeros(field.nx, field.ny, field.pitch, field.x0, field.y0);
    for part in parts {
        if let Some(part) = part? {
            for (o, v) in out.data.iter_mut().zip(&part.data) {
                *o += *v;
            }
        }
    }
    Ok(out)
}

/// Reconstructs the plane. Diffraction mode blurs the summed back-projection
/// once: the PSF does not depend on the lenslet, so by linearity this equals
/// blurring every lenslet's contribution before summing.
pub fn reconstruct(eis: &ElementalImageSet, plane: &TiltedPlaneSpec, options: &ReconstructOptions) -> Result<Reconstruction> {
    let mut recon = backproject_geometric(eis, plane)?;
    if options.mode == ReconstructMode::Diffraction {
        recon.field = apply_diffraction(&recon.field, plane, &eis.config, options.strip_width, options.psf)?;
        recon.mode = ReconstructMode::Diffraction;
    }
    Ok(recon)
}
