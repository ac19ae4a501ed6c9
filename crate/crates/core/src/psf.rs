//! Incoherent defocus point-spread function of one lenslet.
//!
//! The pupil (ellipse or rectangle with diameters equal to the pitches) is
//! multiplied by the quadratic defocus phase
//! `exp[i k/2 (1/z - 1/z_i) (u^2 + v^2)]`; the PSF is the squared magnitude
//! of its Fourier transform, mapped to the observation plane with
//! `x = lambda * z * f_u` and normalized to unit sum.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{positive, Error, Result};
use crate::fft::{self, Direction, Grid2};
use crate::field::ScalarField2D;
use crate::optics::{ApertureShape, ImageDistance, OpticalSystemConfig};

pub const MIN_KERNEL_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct PsfKernel {
    /// `N x N` unit-sum samples, zero offset at index `(N/2, N/2)`.
    pub samples: ScalarField2D,
    pub z_local: f64,
    /// `z_local - z_i`; `None` when the focal plane is at infinity.
    pub defocus_distance: Option<f64>,
}

/// Largest pupil radius, used for the phase-sampling guard.
fn pupil_max_radius(cfg: &OpticalSystemConfig) -> f64 {
    let (rx, ry) = (cfg.pitch_x / 2.0, cfg.pitch_y / 2.0);
    match cfg.aperture_shape {
        ApertureShape::Ellipse => rx.max(ry),
        ApertureShape::Rectangle => libm::hypot(rx, ry),
    }
}

/// Largest pupil sample pitch that keeps the defocus phase advance at or
/// below `pi` per sample. Infinite when there is no defocus.
pub fn max_pupil_sample_pitch(cfg: &OpticalSystemConfig, z_local: f64, z_i: ImageDistance) -> f64 {
    let k = 2.0 * PI / cfg.wavelength_mm();
    let defocus = libm::fabs(1.0 / z_local - z_i.reciprocal());
    let per_pitch = k * defocus * pupil_max_radius(cfg);
    if per_pitch == 0.0 {
        f64::INFINITY
    } else {
        PI / per_pitch
    }
}

fn inside_pupil(shape: ApertureShape, u: f64, v: f64, rx: f64, ry: f64) -> bool {
    match shape {
        ApertureShape::Ellipse => {
            let (a, b) = (u / rx, v / ry);
            a * a + b * b <= 1.0
        }
        ApertureShape::Rectangle => libm::fabs(u) <= rx && libm::fabs(v) <= ry,
    }
}

/// PSF at local depth `z_local` for a focal plane at `z_i`.
///
/// `kernel_size` is the transform length (power of two, at least 128) and
/// `pupil_sample_pitch` the spacing of pupil samples in mm. The sampled
/// aperture plane must span at least twice the pupil so the intensity
/// spectrum is not aliased.
pub fn defocus_psf(
    cfg: &OpticalSystemConfig,
    z_local: f64,
    z_i: ImageDistance,
    kernel_size: usize,
    pupil_sample_pitch: f64,
) -> Result<PsfKernel> {
    positive("z_local", z_local)?;
    positive("pupil_sample_pitch", pupil_sample_pitch)?;
    if kernel_size < MIN_KERNEL_SIZE || !kernel_size.is_power_of_two() {
        return Err(Error::Config(alloc::format!(
            "PSF kernel size must be a power of two >= {MIN_KERNEL_SIZE}, got {kernel_size}"
        )));
    }
    let n = kernel_size;
    let du = pupil_sample_pitch;
    let aperture = cfg.pitch_x.max(cfg.pitch_y);
    if (n as f64) * du < 2.0 * aperture {
        return Err(Error::PupilSampling {
            reason: "aperture plane spans less than twice the pupil; pupil sample pitch must be at least",
            limit: 2.0 * aperture / n as f64,
        });
    }
    let limit = max_pupil_sample_pitch(cfg, z_local, z_i);
    if du > limit {
        return Err(Error::PupilSampling {
            reason: "defocus phase advances more than pi per pupil sample; pupil sample pitch must be at most",
            limit,
        });
    }

    let lambda = cfg.wavelength_mm();
    let k = 2.0 * PI / lambda;
    let curvature = 0.5 * k * (1.0 / z_local - z_i.reciprocal());
    let (rx, ry) = (cfg.pitch_x / 2.0, cfg.pitch_y / 2.0);
    let half = (n / 2) as isize;

    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let v = (j as isize - half) as f64 * du;
        for i in 0..n {
            let u = (i as isize - half) as f64 * du;
            if inside_pupil(cfg.aperture_shape, u, v, rx, ry) {
                let (s, c) = libm::sincos(curvature * (u * u + v * v));
                buf[j * n + i] = Complex64::new(c, s);
            }
        }
    }
    fft::fft2(&mut buf, n, n, Direction::Forward)?;
    let intensity: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let mut shifted = fft::fftshift2(&intensity, n, n);
    let total: f64 = shifted.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("pupil has no open samples"));
    }
    for s in &mut shifted {
        *s /= total;
    }

    let pitch = lambda * z_local / (n as f64 * du);
    let origin = -(half as f64) * pitch;
    Ok(PsfKernel {
        samples: ScalarField2D::from_data(n, n, pitch, origin, origin, shifted)?,
        z_local,
        defocus_distance: z_i.finite().map(|zi| z_local - zi),
    })
}

impl PsfKernel {
    pub fn pitch(&self) -> f64 {
        self.samples.pitch
    }

    /// Largest border sample relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let s = &self.samples;
        let mut edge: f64 = 0.0;
        for i in 0..s.nx {
            edge = edge.max(s.get(i, 0)).max(s.get(i, s.ny - 1));
        }
        for j in 0..s.ny {
            edge = edge.max(s.get(0, j)).max(s.get(s.nx - 1, j));
        }
        edge / s.max()
    }

    /// Resamples onto a centered odd-sized grid with the given pitch and
    /// renormalizes to unit sum. Finer targets use bilinear interpolation;
    /// coarser targets use bilinear splatting so no energy falls between
    /// target samples.
    pub fn resample(&self, pitch: f64) -> Result<Grid2> {
        positive("pitch", pitch)?;
        let src = &self.samples;
        let extent = (src.nx / 2) as f64 * src.pitch;
        let h = libm::floor(extent / pitch) as usize;
        let m = 2 * h + 1;
        let mut out = vec![0.0; m * m];
        if pitch <= src.pitch {
            for j in 0..m {
                let y = (j as isize - h as isize) as f64 * pitch;
                for i in 0..m {
                    let x = (i as isize - h as isize) as f64 * pitch;
                    out[j * m + i] = src.sample_bilinear(x, y);
                }
            }
        } else {
            for sj in 0..src.ny {
                let fy = src.y(sj) / pitch + h as f64;
                for si in 0..src.nx {
                    let v = src.get(si, sj);
                    if v == 0.0 {
                        continue;
                    }
                    let fx = src.x(si) / pitch + h as f64;
                    splat(&mut out, m, m, fx, fy, v);
                }
            }
        }
        let total: f64 = out.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("resampled PSF is empty"));
        }
        for v in &mut out {
            *v /= total;
        }
        Ok(Grid2::new(m, m, out))
    }
}

/// Bilinear deposit of `value` at fractional index `(fx, fy)`; shares that
/// land outside the grid are dropped.
pub(crate) fn splat(data: &mut [f64], nx: usize, ny: usize, fx: f64, fy: f64, value: f64) {
    let i0 = libm::floor(fx);
    let j0 = libm::floor(fy);
    let (tx, ty) = (fx - i0, fy - j0);
    let (i0, j0) = (i0 as isize, j0 as isize);
    for (di, wx) in [(0, 1.0 - tx), (1, tx)] {
        for (dj, wy) in [(0, 1.0 - ty), (1, ty)] {
            let (i, j) = (i0 + di, j0 + dj);
            if i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny {
                data[j as usize * nx + i as usize] += value * wx * wy;
            }
        }
    }
}
