//! System geometry and Gaussian-beam primitives.
//!
//! All lengths are millimetres unless a name says otherwise. The wavelength
//! is stored in nanometres on [`OpticalSystemConfig`] and converted with
//! [`OpticalSystemConfig::wavelength_mm`] before it meets any formula.

use core::f64::consts::PI;

use crate::error::{positive, Error, Result};

pub const DEFAULT_WAVELENGTH_NM: f64 = 550.0;
pub const DEFAULT_FOCUS_EPSILON: f64 = 1e-6;
pub const VISIBLE_BAND_NM: (f64, f64) = (380.0, 780.0);

/// Diffraction-limited waist factor: first zero of the Airy pattern, in
/// units of `lambda * z / pitch`, doubled to a diameter.
pub const AIRY_WAIST_FACTOR: f64 = 2.44;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApertureShape {
    #[default]
    Ellipse,
    Rectangle,
}

/// Where lenslet centers sit relative to the longitudinal axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LensletCentering {
    /// `(p - (m-1)/2) * pitch`: the array is mirror-symmetric about the axis.
    #[default]
    Symmetric,
    /// `(p - m/2) * pitch` with integer `m/2`: lenslet `(m/2, n/2)` sits on the
    /// axis. Identical to `Symmetric` for odd `m`.
    AxisOnLenslet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImagingMode {
    /// `g != f`: beams focus at a finite (real or virtual) image distance.
    RealVirtual,
    /// `g == f`: every display pixel maps to a collimated bundle.
    Focused,
}

/// Conjugate distance from the lens law; `Infinite` in focused mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageDistance {
    /// Signed distance in mm. Negative values are virtual foci.
    Finite(f64),
    Infinite,
}

impl ImageDistance {
    pub fn finite(self) -> Option<f64> {
        match self {
            ImageDistance::Finite(z) => Some(z),
            ImageDistance::Infinite => None,
        }
    }

    /// `1 / z_i`, zero at infinity.
    pub fn reciprocal(self) -> f64 {
        match self {
            ImageDistance::Finite(z) => 1.0 / z,
            ImageDistance::Infinite => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ImageDistance::Infinite)
    }
}

/// Solves `1/z_i + 1/g = 1/f`.
///
/// Returns [`ImageDistance::Infinite`] when `|1/f - 1/g|` is below
/// `focus_epsilon / f`, a negative distance for virtual foci (`g < f`).
pub fn image_distance(f: f64, g: f64, focus_epsilon: f64) -> Result<ImageDistance> {
    positive("focal_length", f)?;
    positive("gap", g)?;
    if !(focus_epsilon.is_finite() && focus_epsilon >= 0.0) {
        return Err(Error::Domain {
            name: "focus_epsilon",
            value: focus_epsilon,
            reason: "must be finite and non-negative",
        });
    }
    let inv = 1.0 / f - 1.0 / g;
    if libm::fabs(inv) < focus_epsilon * (1.0 / f) {
        Ok(ImageDistance::Infinite)
    } else {
        Ok(ImageDistance::Finite(1.0 / inv))
    }
}

/// Diffraction-limited waist `2.44 * lambda * |z_i| / pitch`.
///
/// Virtual foci use the magnitude of `z_i`.
pub fn waist_at_focus(wavelength: f64, z_i: ImageDistance, pitch: f64) -> Result<f64> {
    positive("wavelength", wavelength)?;
    positive("pitch", pitch)?;
    let z = z_i.finite().ok_or(Error::FocusedMode)?;
    let z = positive("image_distance", libm::fabs(z))?;
    Ok(AIRY_WAIST_FACTOR * wavelength * z / pitch)
}

/// Rayleigh range `pi * w0^2 / (2 lambda)`.
pub fn rayleigh_range(waist: f64, wavelength: f64) -> Result<f64> {
    positive("waist", waist)?;
    positive("wavelength", wavelength)?;
    Ok(PI * waist * waist / (2.0 * wavelength))
}

/// `w(z) = w0 * sqrt(1 + 4 ((z - z_i) / b)^2)`.
#[inline]
pub fn beam_width(z: f64, waist: f64, rayleigh: f64, z_focus: f64) -> f64 {
    let t = (z - z_focus) / rayleigh;
    waist * libm::sqrt(1.0 + 4.0 * t * t)
}

/// Gaussian-beam constants shared by every lenslet of a system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParameters {
    pub z_focus: ImageDistance,
    pub waist_x: f64,
    pub waist_y: f64,
    /// Infinite for the collimated (focused-mode) fallback.
    pub rayleigh_x: f64,
    pub rayleigh_y: f64,
    pub power: f64,
}

impl BeamParameters {
    /// Beam for a finite focus: waists from the pitch-limited Airy size,
    /// Rayleigh ranges from the waists.
    pub fn focusing(
        wavelength: f64,
        z_focus: f64,
        pitch_x: f64,
        pitch_y: f64,
        power: f64,
    ) -> Result<Self> {
        let z = ImageDistance::Finite(z_focus);
        let waist_x = waist_at_focus(wavelength, z, pitch_x)?;
        let waist_y = waist_at_focus(wavelength, z, pitch_y)?;
        Ok(BeamParameters {
            z_focus: z,
            waist_x,
            waist_y,
            rayleigh_x: rayleigh_range(waist_x, wavelength)?,
            rayleigh_y: rayleigh_range(waist_y, wavelength)?,
            power: positive("power", power)?,
        })
    }

    /// Focused-mode fallback: a collimated bundle as wide as the pupil, with
    /// constant Gaussian half-width `pitch / 2`.
    pub fn collimated(pitch_x: f64, pitch_y: f64, power: f64) -> Result<Self> {
        Ok(BeamParameters {
            z_focus: ImageDistance::Infinite,
            waist_x: positive("pitch_x", pitch_x)? / 2.0,
            waist_y: positive("pitch_y", pitch_y)? / 2.0,
            rayleigh_x: f64::INFINITY,
            rayleigh_y: f64::INFINITY,
            power: positive("power", power)?,
        })
    }

    pub fn is_collimated(&self) -> bool {
        self.z_focus.is_infinite()
    }

    #[inline]
    pub fn width_x(&self, z: f64) -> f64 {
        match self.z_focus {
            ImageDistance::Finite(zf) => beam_width(z, self.waist_x, self.rayleigh_x, zf),
            ImageDistance::Infinite => self.waist_x,
        }
    }

    #[inline]
    pub fn width_y(&self, z: f64) -> f64 {
        match self.z_focus {
            ImageDistance::Finite(zf) => beam_width(z, self.waist_y, self.rayleigh_y, zf),
            ImageDistance::Infinite => self.waist_y,
        }
    }

    /// Smallest of `w_x(z), w_y(z)` over `z` in `[z_lo, z_hi]`.
    pub fn narrowest_width(&self, z_lo: f64, z_hi: f64) -> f64 {
        let z = match self.z_focus {
            ImageDistance::Finite(zf) => zf.clamp(z_lo, z_hi),
            ImageDistance::Infinite => z_lo,
        };
        self.width_x(z).min(self.width_y(z))
    }
}

/// Lens-array integral-imaging system.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalSystemConfig {
    /// Lenslet count along x.
    pub m: usize,
    /// Lenslet count along y.
    pub n: usize,
    pub pitch_x: f64,
    pub pitch_y: f64,
    /// Display-to-lens distance.
    pub gap: f64,
    pub focal_length: f64,
    pub wavelength_nm: f64,
    pub aperture_shape: ApertureShape,
    /// Relative tolerance for focused-mode detection.
    pub focus_epsilon: f64,
    pub centering: LensletCentering,
    /// Replaces the lens-law image distance in real/virtual mode.
    pub z_i_override: Option<f64>,
}

impl OpticalSystemConfig {
    /// Square lenslets with default wavelength, aperture and centering.
    pub fn new(m: usize, n: usize, pitch: f64, gap: f64, focal_length: f64) -> Self {
        OpticalSystemConfig {
            m,
            n,
            pitch_x: pitch,
            pitch_y: pitch,
            gap,
            focal_length,
            wavelength_nm: DEFAULT_WAVELENGTH_NM,
            aperture_shape: ApertureShape::Ellipse,
            focus_epsilon: DEFAULT_FOCUS_EPSILON,
            centering: LensletCentering::Symmetric,
            z_i_override: None,
        }
    }

    pub fn with_pitches(mut self, pitch_x: f64, pitch_y: f64) -> Self {
        self.pitch_x = pitch_x;
        self.pitch_y = pitch_y;
        self
    }

    pub fn with_wavelength_nm(mut self, wavelength_nm: f64) -> Self {
        self.wavelength_nm = wavelength_nm;
        self
    }

    pub fn with_z_i_override(mut self, z_i: Option<f64>) -> Self {
        self.z_i_override = z_i;
        self
    }

    pub fn with_centering(mut self, centering: LensletCentering) -> Self {
        self.centering = centering;
        self
    }

    pub fn with_aperture(mut self, shape: ApertureShape) -> Self {
        self.aperture_shape = shape;
        self
    }

    pub fn with_focus_epsilon(mut self, eps: f64) -> Self {
        self.focus_epsilon = eps;
        self
    }

    /// Validates with the default visible wavelength band.
    pub fn validate(&self) -> Result<()> {
        self.validate_in_band(VISIBLE_BAND_NM)
    }

    pub fn validate_in_band(&self, band_nm: (f64, f64)) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Config(alloc::format!(
                "lens array must have at least one lenslet per axis, got {}x{}",
                self.m,
                self.n
            )));
        }
        positive("pitch_x", self.pitch_x)?;
        positive("pitch_y", self.pitch_y)?;
        positive("gap", self.gap)?;
        positive("focal_length", self.focal_length)?;
        positive("wavelength_nm", self.wavelength_nm)?;
        if self.wavelength_nm < band_nm.0 || self.wavelength_nm > band_nm.1 {
            return Err(Error::Domain {
                name: "wavelength_nm",
                value: self.wavelength_nm,
                reason: "outside the accepted wavelength band",
            });
        }
        if let Some(z) = self.z_i_override {
            if !z.is_finite() || z == 0.0 {
                return Err(Error::Domain {
                    name: "z_i_override",
                    value: z,
                    reason: "must be finite and non-zero",
                });
            }
        }
        image_distance(self.focal_length, self.gap, self.focus_epsilon)?;
        Ok(())
    }

    pub fn wavelength_mm(&self) -> f64 {
        self.wavelength_nm * 1e-6
    }

    /// Mode from `(g, f, focus_epsilon)` only; the override does not affect it.
    pub fn mode(&self) -> Result<ImagingMode> {
        match image_distance(self.focal_length, self.gap, self.focus_epsilon)? {
            ImageDistance::Infinite => Ok(ImagingMode::Focused),
            ImageDistance::Finite(_) => Ok(ImagingMode::RealVirtual),
        }
    }

    /// Effective focal-plane distance: infinite in focused mode, otherwise
    /// the override when present, else the lens law.
    pub fn image_distance(&self) -> Result<ImageDistance> {
        let lens_law = image_distance(self.focal_length, self.gap, self.focus_epsilon)?;
        Ok(match (lens_law, self.z_i_override) {
            (ImageDistance::Infinite, _) => ImageDistance::Infinite,
            (ImageDistance::Finite(_), Some(z)) => ImageDistance::Finite(z),
            (finite, None) => finite,
        })
    }

    /// Unit-power beam for this system.
    pub fn beam(&self) -> Result<BeamParameters> {
        match self.image_distance()? {
            ImageDistance::Infinite => BeamParameters::collimated(self.pitch_x, self.pitch_y, 1.0),
            ImageDistance::Finite(z) => BeamParameters::focusing(
                self.wavelength_mm(),
                z,
                self.pitch_x,
                self.pitch_y,
                1.0,
            ),
        }
    }

    /// Lateral center of lenslet `(p, q)`.
    pub fn lenslet_center(&self, p: usize, q: usize) -> Result<(f64, f64)> {
        if p >= self.m || q >= self.n {
            return Err(Error::LensletIndex {
                p,
                q,
                m: self.m,
                n: self.n,
            });
        }
        Ok((
            lenslet_offset(p, self.m, self.pitch_x, self.centering),
            lenslet_offset(q, self.n, self.pitch_y, self.centering),
        ))
    }

    /// All lenslet centers in lexicographic `(p, q)` order.
    pub fn lenslet_centers(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..self.m).flat_map(move |p| {
            (0..self.n).map(move |q| {
                (
                    p,
                    q,
                    lenslet_offset(p, self.m, self.pitch_x, self.centering),
                    lenslet_offset(q, self.n, self.pitch_y, self.centering),
                )
            })
        })
    }

    /// FNV-1a over every field, stable across runs and platforms.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(&(self.m as u64).to_le_bytes());
        feed(&(self.n as u64).to_le_bytes());
        for v in [
            self.pitch_x,
            self.pitch_y,
            self.gap,
            self.focal_length,
            self.wavelength_nm,
            self.focus_epsilon,
            self.z_i_override.unwrap_or(f64::NAN),
        ] {
            feed(&v.to_bits().to_le_bytes());
        }
        feed(&[self.aperture_shape as u8, self.centering as u8]);
        h
    }
}

fn lenslet_offset(index: usize, count: usize, pitch: f64, centering: LensletCentering) -> f64 {
    match centering {
        LensletCentering::Symmetric => {
            0.5 * (2.0 * index as f64 - (count - 1) as f64) * pitch
        }
        LensletCentering::AxisOnLenslet => (index as f64 - (count / 2) as f64) * pitch,
    }
}

/// Sampling of a tilted plane: odd sample counts, symmetric about the
/// plane origin, which is always a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneGrid {
    pub half_width_x: f64,
    pub half_width_y: f64,
    pub sample_pitch: f64,
}

impl PlaneGrid {
    pub fn new(half_width_x: f64, half_width_y: f64, sample_pitch: f64) -> Result<Self> {
        let grid = PlaneGrid {
            half_width_x,
            half_width_y,
            sample_pitch,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        positive("sample_pitch", self.sample_pitch)?;
        if !(self.half_width_x.is_finite() && self.half_width_x >= 0.0) {
            return Err(Error::Domain {
                name: "half_width_x",
                value: self.half_width_x,
                reason: "must be finite and non-negative",
            });
        }
        if !(self.half_width_y.is_finite() && self.half_width_y >= 0.0) {
            return Err(Error::Domain {
                name: "half_width_y",
                value: self.half_width_y,
                reason: "must be finite and non-negative",
            });
        }
        Ok(())
    }

    fn half_count(half_width: f64, pitch: f64) -> usize {
        libm::floor(half_width / pitch * (1.0 + 1e-12)) as usize
    }

    /// `(nx, ny)`, both odd.
    pub fn counts(&self) -> (usize, usize) {
        (
            2 * Self::half_count(self.half_width_x, self.sample_pitch) + 1,
            2 * Self::half_count(self.half_width_y, self.sample_pitch) + 1,
        )
    }
}

/// Sines and cosines of a plane's tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneTrig {
    pub sin_x: f64,
    pub cos_x: f64,
    pub sin_y: f64,
    pub cos_y: f64,
}

impl PlaneTrig {
    pub fn from_degrees(theta_x_deg: f64, theta_y_deg: f64) -> Self {
        let (sx, cx) = libm::sincos(theta_x_deg.to_radians());
        let (sy, cy) = libm::sincos(theta_y_deg.to_radians());
        PlaneTrig {
            sin_x: sx,
            cos_x: cx,
            sin_y: sy,
            cos_y: cy,
        }
    }
}

/// Plane rotated about the lateral axes, centered at depth `D` on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedPlaneSpec {
    pub theta_x_deg: f64,
    pub theta_y_deg: f64,
    /// `D`: depth of the plane origin.
    pub axial_offset: f64,
    pub grid: PlaneGrid,
}

impl TiltedPlaneSpec {
    pub fn new(theta_x_deg: f64, theta_y_deg: f64, axial_offset: f64, grid: PlaneGrid) -> Result<Self> {
        let plane = TiltedPlaneSpec {
            theta_x_deg,
            theta_y_deg,
            axial_offset,
            grid,
        };
        plane.validate()?;
        Ok(plane)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("theta_x_deg", self.theta_x_deg), ("theta_y_deg", self.theta_y_deg)] {
            if !(t.is_finite() && libm::fabs(t) < 90.0) {
                return Err(Error::Domain {
                    name,
                    value: t,
                    reason: "tilt must satisfy |theta| < 90 deg",
                });
            }
        }
        positive("axial_offset", self.axial_offset)?;
        self.grid.validate()
    }

    pub fn trig(&self) -> PlaneTrig {
        PlaneTrig::from_degrees(self.theta_x_deg, self.theta_y_deg)
    }

    /// `D + x sin(theta_x) + y sin(theta_y)`.
    #[inline]
    pub fn local_depth(&self, trig: &PlaneTrig, x: f64, y: f64) -> f64 {
        self.axial_offset + x * trig.sin_x + y * trig.sin_y
    }
}

/// Maps plane coordinates `(x_theta, y_theta)` to global `(x, y, z)`.
pub fn tilted_to_global(x_theta: f64, y_theta: f64, plane: &TiltedPlaneSpec) -> (f64, f64, f64) {
    let t = plane.trig();
    (
        x_theta * t.cos_x,
        y_theta * t.cos_y,
        plane.local_depth(&t, x_theta, y_theta),
    )
}
