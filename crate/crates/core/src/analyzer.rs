//! Spot of an on-axis point source on a tilted plane, its radial extent,
//! and the field of view that follows from a spot-size threshold.
//!
//! Every lenslet contributes a Gaussian beam that passes through the point
//! source at `(0, 0, D)`. Lenslet `(p, q)` sees the plane tilted by
//! `theta - atan(c / D)`, where `c` is its lateral center, and is weighted
//! by the inverse square of its distance to the source image, normalized so
//! the on-axis term has peak `2P / (pi w0x w0y)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{positive, Error, Result};
use crate::exec;
use crate::field::ScalarField2D;
use crate::optics::{BeamParameters, OpticalSystemConfig, PlaneGrid, TiltedPlaneSpec};

/// Grid half-width in multiples of the widest projected beam.
pub const HALF_WIDTH_FACTOR: f64 = 6.0;
/// Auto grids place this many samples across the narrowest beam width.
pub const SAMPLES_PER_WIDTH: f64 = 5.0;
/// Minimum resolvable: the pitch may not exceed a quarter of the narrowest width.
pub const MIN_SAMPLES_PER_WIDTH: f64 = 4.0;
pub const DEFAULT_THRESHOLD_RATIO: f64 = 1.5;
pub const MAX_SCAN_ANGLE_DEG: f64 = 60.0;

/// Effective tilt `(theta'_x, theta'_y)` in degrees seen by lenslet `(p, q)`.
pub fn lenslet_tilt(
    p: usize,
    q: usize,
    d: f64,
    theta_x_deg: f64,
    theta_y_deg: f64,
    cfg: &OpticalSystemConfig,
) -> Result<(f64, f64)> {
    positive("D", d)?;
    let (cp, cq) = cfg.lenslet_center(p, q)?;
    Ok((
        theta_x_deg - libm::atan(cp / d).to_degrees(),
        theta_y_deg - libm::atan(cq / d).to_degrees(),
    ))
}

/// Euclidean distance from the on-axis image point to the matching pixel of
/// elemental image `(p, q)`.
pub fn lenslet_pixel_distance(
    p: usize,
    q: usize,
    d: f64,
    g: f64,
    cfg: &OpticalSystemConfig,
) -> Result<f64> {
    positive("D", d)?;
    positive("gap", g)?;
    let (cp, cq) = cfg.lenslet_center(p, q)?;
    Ok(pixel_distance(cp, cq, d, g))
}

fn pixel_distance(cp: f64, cq: f64, d: f64, g: f64) -> f64 {
    let axial = d + g;
    let scale = axial / d;
    libm::sqrt(axial * axial + scale * scale * (cp * cp + cq * cq))
}

#[derive(Debug, Clone, Copy)]
struct LensletTerm {
    sin_x: f64,
    cos_x: f64,
    sin_y: f64,
    cos_y: f64,
    weight: f64,
}

impl LensletTerm {
    fn new(cp: f64, cq: f64, d: f64, theta_x: f64, theta_y: f64, cfg: &OpticalSystemConfig, beam: &BeamParameters) -> Self {
        let tx = theta_x - libm::atan(cp / d);
        let ty = theta_y - libm::atan(cq / d);
        let (sin_x, cos_x) = libm::sincos(tx);
        let (sin_y, cos_y) = libm::sincos(ty);
        let dist = pixel_distance(cp, cq, d, cfg.gap);
        let axial = d + cfg.gap;
        let peak = 2.0 * beam.power / (PI * beam.waist_x * beam.waist_y);
        LensletTerm {
            sin_x,
            cos_x,
            sin_y,
            cos_y,
            weight: peak * (axial * axial) / (dist * dist),
        }
    }

    #[inline]
    fn eval(&self, x: f64, y: f64, d: f64, beam: &BeamParameters) -> f64 {
        let z = d + x * self.sin_x + y * self.sin_y;
        let wx = beam.width_x(z);
        let wy = beam.width_y(z);
        let u = x * self.cos_x / wx;
        let v = y * self.cos_y / wy;
        self.weight * (beam.waist_x / wx) * (beam.waist_y / wy) * libm::exp(-2.0 * (u * u + v * v))
    }
}

fn lenslet_terms(
    cfg: &OpticalSystemConfig,
    beam: &BeamParameters,
    d: f64,
    theta_x_deg: f64,
    theta_y_deg: f64,
) -> Vec<LensletTerm> {
    let (tx, ty) = (theta_x_deg.to_radians(), theta_y_deg.to_radians());
    cfg.lenslet_centers()
        .map(|(_, _, cp, cq)| LensletTerm::new(cp, cq, d, tx, ty, cfg, beam))
        .collect()
}

/// Intensity contributed by lenslet `(p, q)` at plane point `(x, y)`; the
/// plane origin is the point source at depth `d`.
#[allow(clippy::too_many_arguments)]
pub fn point_source_intensity(
    x: f64,
    y: f64,
    p: usize,
    q: usize,
    d: f64,
    theta_x_deg: f64,
    theta_y_deg: f64,
    cfg: &OpticalSystemConfig,
    beam: &BeamParameters,
) -> Result<f64> {
    positive("D", d)?;
    let (cp, cq) = cfg.lenslet_center(p, q)?;
    let term = LensletTerm::new(cp, cq, d, theta_x_deg.to_radians(), theta_y_deg.to_radians(), cfg, beam);
    Ok(term.eval(x, y, d, beam))
}

/// Visualized point source sampled on a tilted plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotProfile {
    pub plane: TiltedPlaneSpec,
    pub intensity: ScalarField2D,
    pub source_depth: f64,
}

/// Depth range `[lo, hi]` the lenslet beams traverse across the plane grid.
fn depth_span(terms: &[LensletTerm], d: f64, grid: &PlaneGrid) -> (f64, f64) {
    let sx = terms.iter().map(|t| libm::fabs(t.sin_x)).fold(0.0, f64::max);
    let sy = terms.iter().map(|t| libm::fabs(t.sin_y)).fold(0.0, f64::max);
    let span = grid.half_width_x * sx + grid.half_width_y * sy;
    (d - span, d + span)
}

/// Sums every lenslet's contribution over the plane grid. The point source
/// sits at the plane origin, `D = plane.axial_offset`.
pub fn aggregate_spot(
    plane: &TiltedPlaneSpec,
    cfg: &OpticalSystemConfig,
    beam: &BeamParameters,
) -> Result<SpotProfile> {
    plane.validate()?;
    let d = plane.axial_offset;
    let terms = lenslet_terms(cfg, beam, d, plane.theta_x_deg, plane.theta_y_deg);
    let (lo, hi) = depth_span(&terms, d, &plane.grid);
    let required = beam.narrowest_width(lo, hi) / MIN_SAMPLES_PER_WIDTH;
    if plane.grid.sample_pitch > required {
        return Err(Error::UnderResolved {
            pitch: plane.grid.sample_pitch,
            required,
        });
    }

    let mut field = ScalarField2D::for_grid(&plane.grid);
    let xs: Vec<f64> = (0..field.nx).map(|i| field.x(i)).collect();
    let ys: Vec<f64> = (0..field.ny).map(|j| field.y(j)).collect();
    exec::for_each_row(&mut field.data, xs.len(), |j, row| {
        let y = ys[j];
        for (out, &x) in row.iter_mut().zip(&xs) {
            let mut acc = 0.0;
            for t in &terms {
                acc += t.eval(x, y, d, beam);
            }
            *out = acc;
        }
    });

    Ok(SpotProfile {
        plane: *plane,
        intensity: field,
        source_depth: d,
    })
}

/// Normalized second-moment radius about the plane origin:
/// `sqrt( sum r^2 O / sum O )`.
pub fn radial_extent(field: &ScalarField2D) -> Result<f64> {
    let mut mass = 0.0;
    let mut moment = 0.0;
    for j in 0..field.ny {
        let y = field.y(j);
        for i in 0..field.nx {
            let x = field.x(i);
            let v = field.get(i, j);
            mass += v;
            moment += (x * x + y * y) * v;
        }
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Degenerate("field has no positive intensity"));
    }
    Ok(libm::sqrt(moment / mass))
}

/// Plane grid that captures the whole spot for a given tilt: half-widths of
/// [`HALF_WIDTH_FACTOR`] projected beam widths (including defocus growth
/// across the plane), pitch of the narrowest width / [`SAMPLES_PER_WIDTH`].
pub fn auto_grid(
    cfg: &OpticalSystemConfig,
    beam: &BeamParameters,
    d: f64,
    theta_x_deg: f64,
    theta_y_deg: f64,
) -> Result<PlaneGrid> {
    positive("D", d)?;
    let terms = lenslet_terms(cfg, beam, d, theta_x_deg, theta_y_deg);
    let cos_x = terms.iter().map(|t| libm::fabs(t.cos_x)).fold(1.0, f64::min).max(0.1);
    let cos_y = terms.iter().map(|t| libm::fabs(t.cos_y)).fold(1.0, f64::min).max(0.1);

    let mut grid = PlaneGrid {
        half_width_x: HALF_WIDTH_FACTOR * beam.width_x(d) / cos_x,
        half_width_y: HALF_WIDTH_FACTOR * beam.width_y(d) / cos_y,
        sample_pitch: 1.0,
    };
    for _ in 0..3 {
        let (lo, hi) = depth_span(&terms, d, &grid);
        let wx = beam.width_x(lo).max(beam.width_x(hi)).max(beam.width_x(d));
        let wy = beam.width_y(lo).max(beam.width_y(hi)).max(beam.width_y(d));
        grid.half_width_x = HALF_WIDTH_FACTOR * wx / cos_x;
        grid.half_width_y = HALF_WIDTH_FACTOR * wy / cos_y;
    }
    let (lo, hi) = depth_span(&terms, d, &grid);
    grid.sample_pitch = beam.narrowest_width(lo, hi) / SAMPLES_PER_WIDTH;
    grid.validate()?;
    Ok(grid)
}

/// Which tilt angle a scan sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    X,
    Y,
    /// `theta_x = theta_y`.
    Diagonal,
}

impl ScanAxis {
    fn angles(self, theta: f64) -> (f64, f64) {
        match self {
            ScanAxis::X => (theta, 0.0),
            ScanAxis::Y => (0.0, theta),
            ScanAxis::Diagonal => (theta, theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionSample {
    pub theta_x_deg: f64,
    pub theta_y_deg: f64,
    pub radial_extent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionCurve {
    pub axis: ScanAxis,
    pub samples: Vec<ResolutionSample>,
    pub config_digest: u64,
}

impl ResolutionCurve {
    /// The swept angle of sample `k`.
    pub fn theta(&self, k: usize) -> f64 {
        let s = &self.samples[k];
        match self.axis {
            ScanAxis::Y => s.theta_y_deg,
            ScanAxis::X | ScanAxis::Diagonal => s.theta_x_deg,
        }
    }

    /// Curve from `(swept angle, extent)` pairs.
    pub fn from_pairs(axis: ScanAxis, pairs: &[(f64, f64)]) -> Self {
        let samples = pairs
            .iter()
            .map(|&(t, e)| {
                let (tx, ty) = axis.angles(t);
                ResolutionSample {
                    theta_x_deg: tx,
                    theta_y_deg: ty,
                    radial_extent: e,
                }
            })
            .collect();
        ResolutionCurve {
            axis,
            samples,
            config_digest: 0,
        }
    }
}

/// Radial extent at `steps` evenly spaced tilts in `[theta_min, theta_max]`.
pub fn scan_resolution(
    cfg: &OpticalSystemConfig,
    d: f64,
    axis: ScanAxis,
    theta_min_deg: f64,
    theta_max_deg: f64,
    steps: usize,
) -> Result<ResolutionCurve> {
    cfg.validate()?;
    positive("D", d)?;
    if steps < 3 {
        return Err(Error::Config(alloc::format!("scan needs at least 3 steps, got {steps}")));
    }
    if !(theta_min_deg < theta_max_deg) {
        return Err(Error::Config("scan range must satisfy theta_min < theta_max".into()));
    }
    for t in [theta_min_deg, theta_max_deg] {
        if !(libm::fabs(t) <= MAX_SCAN_ANGLE_DEG) {
            return Err(Error::Domain {
                name: "scan angle",
                value: t,
                reason: "scan range must lie within +-60 deg",
            });
        }
    }
    let beam = cfg.beam()?;
    let last = (steps - 1) as f64;
    let mut samples = Vec::with_capacity(steps);
    for k in 0..steps {
        // endpoint-weighted form keeps symmetric ranges exactly symmetric
        let theta = (theta_min_deg * (last - k as f64) + theta_max_deg * k as f64) / last;
        let (tx, ty) = axis.angles(theta);
        let grid = auto_grid(cfg, &beam, d, tx, ty)?;
        let plane = TiltedPlaneSpec::new(tx, ty, d, grid)?;
        let spot = aggregate_spot(&plane, cfg, &beam)?;
        samples.push(ResolutionSample {
            theta_x_deg: tx,
            theta_y_deg: ty,
            radial_extent: radial_extent(&spot.intensity)?,
        });
    }
    Ok(ResolutionCurve {
        axis,
        samples,
        config_digest: cfg.digest(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovResult {
    pub threshold_ratio: f64,
    pub min_extent: f64,
    /// Swept angle at which the minimum occurs.
    pub min_theta_deg: f64,
    /// `None` when the curve never reaches the threshold on that side.
    pub fov_negative: Option<f64>,
    pub fov_positive: Option<f64>,
}

/// Walks outward from the curve minimum and returns the first crossings of
/// `threshold_ratio * min` on each side, linearly interpolated.
pub fn extract_fov(curve: &ResolutionCurve, threshold_ratio: f64) -> Result<FovResult> {
    if curve.samples.is_empty() {
        return Err(Error::Degenerate("empty resolution curve"));
    }
    let extents: Vec<f64> = curve.samples.iter().map(|s| s.radial_extent).collect();
    let mut kmin = 0;
    for (k, &e) in extents.iter().enumerate() {
        if e < extents[kmin] {
            kmin = k;
        }
    }
    let min = extents[kmin];
    let level = threshold_ratio * min;

    let crossing = |from: usize, to: usize| -> f64 {
        let (t0, t1) = (curve.theta(from), curve.theta(to));
        let (e0, e1) = (extents[from], extents[to]);
        t0 + (level - e0) / (e1 - e0) * (t1 - t0)
    };
    let fov_positive = (kmin + 1..extents.len())
        .find(|&k| extents[k] >= level)
        .map(|k| crossing(k - 1, k));
    let fov_negative = (0..kmin)
        .rev()
        .find(|&k| extents[k] >= level)
        .map(|k| crossing(k + 1, k));

    Ok(FovResult {
        threshold_ratio,
        min_extent: min,
        min_theta_deg: curve.theta(kmin),
        fov_negative,
        fov_positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::LensletCentering;
    use approx::assert_relative_eq;

    fn real_virtual() -> OpticalSystemConfig {
        OpticalSystemConfig::new(16, 16, 10.0, 50.0, 35.0).with_z_i_override(Some(360.0))
    }

    #[test]
    fn lenslet_tilt_examples() {
        let cfg = real_virtual().with_centering(LensletCentering::AxisOnLenslet);
        let (tx, ty) = lenslet_tilt(8, 8, 360.0, 12.0, -3.0, &cfg).unwrap();
        assert_eq!((tx, ty), (12.0, -3.0));
        let (tx, _) = lenslet_tilt(9, 8, 360.0, 0.0, 0.0, &cfg).unwrap();
        assert_relative_eq!(tx, -libm::atan(10.0 / 360.0).to_degrees(), max_relative = 1e-14);
        assert_relative_eq!(tx, -1.591_140_3, max_relative = 1e-7);
        // c_p = 80 mm needs the symmetric convention at m = 17
        let cfg17 = OpticalSystemConfig::new(17, 17, 10.0, 50.0, 35.0);
        let (tx, _) = lenslet_tilt(16, 8, 360.0, 15.0, 0.0, &cfg17).unwrap();
        assert_relative_eq!(tx, 15.0 - libm::atan(80.0 / 360.0).to_degrees(), max_relative = 1e-14);
        assert_relative_eq!(tx, 2.471_192_3, max_relative = 1e-7);
    }

    #[test]
    fn pixel_distance_examples() {
        let cfg = real_virtual().with_centering(LensletCentering::AxisOnLenslet);
        assert_eq!(lenslet_pixel_distance(8, 8, 360.0, 50.0, &cfg).unwrap(), 410.0);
        let d = lenslet_pixel_distance(9, 8, 360.0, 50.0, &cfg).unwrap();
        let oracle = libm::sqrt(410.0 * 410.0 + (410.0f64 / 360.0).powi(2) * 100.0);
        assert_relative_eq!(d, oracle, max_relative = 1e-14);
        assert_relative_eq!(d, 410.158_148_5, max_relative = 1e-9);
        let mut last = 0.0;
        for p in 8..16 {
            let d = lenslet_pixel_distance(p, 8, 360.0, 50.0, &cfg).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn central_term_matches_single_beam() {
        let cfg = OpticalSystemConfig::new(1, 1, 10.0, 50.0, 35.0).with_z_i_override(Some(360.0));
        let beam = cfg.beam().unwrap();
        let peak = point_source_intensity(0.0, 0.0, 0, 0, 360.0, 0.0, 0.0, &cfg, &beam).unwrap();
        assert_relative_eq!(peak, 2.0 / (PI * beam.waist_x * beam.waist_y), max_relative = 1e-14);
        let x = beam.waist_x / 2f64.sqrt();
        let v = point_source_intensity(x, 0.0, 0, 0, 360.0, 0.0, 0.0, &cfg, &beam).unwrap();
        assert_relative_eq!(v, peak * libm::exp(-1.0), max_relative = 1e-12);
        let far = point_source_intensity(3.0, -2.0, 0, 0, 360.0, 33.0, 0.0, &cfg, &beam).unwrap();
        assert!(far >= 0.0);
    }

    #[test]
    fn radial_extent_moment_oracles() {
        // Gaussian exp(-2 r^2 / w0^2) has E[r^2] = w0^2 / 2.
        let w0 = 1.0;
        let mut g = ScalarField2D::for_grid(&PlaneGrid::new(6.0, 6.0, 6.0 / 256.0).unwrap());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                g.set(i, j, libm::exp(-2.0 * (x * x + y * y) / (w0 * w0)));
            }
        }
        assert_relative_eq!(radial_extent(&g).unwrap(), w0 / 2f64.sqrt(), max_relative = 1e-6);
        let before = radial_extent(&g).unwrap();
        g.scale(123.4);
        assert_relative_eq!(radial_extent(&g).unwrap(), before, max_relative = 1e-12);

        assert!(matches!(
            radial_extent(&ScalarField2D::zeros(3, 3, 1.0, -1.0, -1.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn fov_interpolation_example() {
        let curve = ResolutionCurve::from_pairs(ScanAxis::X, &[(0.0, 1.0), (10.0, 1.2), (20.0, 1.6)]);
        let fov = extract_fov(&curve, 1.5).unwrap();
        assert_relative_eq!(fov.fov_positive.unwrap(), 17.5, max_relative = 1e-12);
        assert_eq!(fov.fov_negative, None);
        assert_eq!(fov.min_extent, 1.0);

        let flat = ResolutionCurve::from_pairs(ScanAxis::Y, &[(-10.0, 2.0), (0.0, 2.0), (10.0, 2.0)]);
        let fov = extract_fov(&flat, 1.5).unwrap();
        assert_eq!((fov.fov_negative, fov.fov_positive), (None, None));

        let both = ResolutionCurve::from_pairs(ScanAxis::X, &[(-20.0, 4.0), (-10.0, 1.0), (0.0, 1.0), (10.0, 2.0)]);
        let fov = extract_fov(&both, 1.5).unwrap();
        assert_relative_eq!(fov.fov_negative.unwrap(), -10.0 - 10.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(fov.fov_positive.unwrap(), 5.0, max_relative = 1e-12);
        assert!(extract_fov(&ResolutionCurve::from_pairs(ScanAxis::X, &[]), 1.5).is_err());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let cfg = real_virtual();
        let beam = cfg.beam().unwrap();
        let plane = TiltedPlaneSpec::new(0.0, 0.0, 360.0, PlaneGrid::new(0.3, 0.3, 0.02).unwrap()).unwrap();
        match aggregate_spot(&plane, &cfg, &beam) {
            Err(Error::UnderResolved { required, .. }) => {
                assert_relative_eq!(required, beam.waist_x / 4.0, max_relative = 1e-12)
            }
            other => panic!("expected UnderResolved, got {other:?}"),
        }
    }

    #[test]
    fn scan_validation() {
        let cfg = real_virtual();
        assert!(scan_resolution(&cfg, 360.0, ScanAxis::X, -10.0, 10.0, 2).is_err());
        assert!(scan_resolution(&cfg, 360.0, ScanAxis::X, -70.0, 10.0, 5).is_err());
        assert!(scan_resolution(&cfg, 360.0, ScanAxis::X, 10.0, -10.0, 5).is_err());
    }
}
