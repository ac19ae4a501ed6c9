use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::optics::PlaneGrid;

/// Non-negative samples on a uniform 2D grid with physical coordinates.
///
/// Storage is row-major with `x` fastest: sample `(i, j)` sits at
/// `(x0 + i * pitch, y0 + j * pitch)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub nx: usize,
    pub ny: usize,
    pub pitch: f64,
    pub x0: f64,
    pub y0: f64,
    pub data: Vec<f64>,
}

#[inline]
fn axis_coordinate(origin: f64, pitch: f64, i: usize) -> f64 {
    let offset = origin / pitch;
    let whole = libm::round(offset);
    if libm::fabs(offset - whole) < 1e-9 {
        (whole + i as f64) * pitch
    } else {
        origin + i as f64 * pitch
    }
}

impl ScalarField2D {
    pub fn zeros(nx: usize, ny: usize, pitch: f64, x0: f64, y0: f64) -> Self {
        ScalarField2D {
            nx,
            ny,
            pitch,
            x0,
            y0,
            data: vec![0.0; nx * ny],
        }
    }

    /// Zero field sampled on a plane grid; origin at the central sample.
    pub fn for_grid(grid: &PlaneGrid) -> Self {
        let (nx, ny) = grid.counts();
        let p = grid.sample_pitch;
        ScalarField2D::zeros(nx, ny, p, -((nx / 2) as f64) * p, -((ny / 2) as f64) * p)
    }

    pub fn from_data(nx: usize, ny: usize, pitch: f64, x0: f64, y0: f64, data: Vec<f64>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::Config(alloc::format!(
                "field data has {} samples, expected {}x{}",
                data.len(),
                nx,
                ny
            )));
        }
        Ok(ScalarField2D {
            nx,
            ny,
            pitch,
            x0,
            y0,
            data,
        })
    }

    /// Coordinate of column `i`. When the origin is a whole number of
    /// pitches the coordinate is formed as `index * pitch`, so centered grids
    /// satisfy `x(i) == -x(nx-1-i)` exactly.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        axis_coordinate(self.x0, self.pitch, i)
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        axis_coordinate(self.y0, self.pitch, j)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] = v;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> f64 {
        self.sum() * self.pitch * self.pitch
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest sample (first on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = k;
            }
        }
        (best % self.nx, best / self.nx)
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn same_geometry(&self, other: &ScalarField2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.pitch == other.pitch
            && self.x0 == other.x0
            && self.y0 == other.y0
    }

    /// Bilinear lookup in physical coordinates, zero outside the sampled area.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.x0) / self.pitch;
        let fy = (y - self.y0) / self.pitch;
        if !(fx > -1.0 && fy > -1.0 && fx < self.nx as f64 && fy < self.ny as f64) {
            return 0.0;
        }
        let i0 = libm::floor(fx);
        let j0 = libm::floor(fy);
        let tx = fx - i0;
        let ty = fy - j0;
        let i0 = i0 as isize;
        let j0 = j0 as isize;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                0.0
            } else {
                self.data[j as usize * self.nx + i as usize]
            }
        };
        (1.0 - ty) * ((1.0 - tx) * at(i0, j0) + tx * at(i0 + 1, j0))
            + ty * ((1.0 - tx) * at(i0, j0 + 1) + tx * at(i0 + 1, j0 + 1))
    }

    /// Normalized cross-correlation against a field of identical shape.
    pub fn normalized_cross_correlation(&self, other: &ScalarField2D) -> Result<f64> {
        if self.data.len() != other.data.len() {
            return Err(Error::Config("cross-correlation needs equal-sized fields".into()));
        }
        let n = self.data.len() as f64;
        let ma = self.sum() / n;
        let mb = other.sum() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (&a, &b) in self.data.iter().zip(&other.data) {
            let (da, db) = (a - ma, b - mb);
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        if saa == 0.0 || sbb == 0.0 {
            return Err(Error::Degenerate("constant field has no correlation"));
        }
        Ok(sab / libm::sqrt(saa * sbb))
    }
}
