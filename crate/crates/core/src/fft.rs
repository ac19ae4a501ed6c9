//! Radix-2 complex FFT, 2D transforms and linear convolution.
//!
//! Power-of-two lengths only; callers pad. Twiddles are evaluated directly
//! (not by recurrence) so long transforms keep full precision.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Plan for one transform length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    // e^{-2 pi i k / len} for k < len/2
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(len: usize) -> Result<Self> {
        if !len.is_power_of_two() {
            return Err(Error::Config(alloc::format!(
                "FFT length {len} is not a power of two"
            )));
        }
        let twiddles = (0..len / 2)
            .map(|k| {
                let (s, c) = libm::sincos(-2.0 * PI * k as f64 / len as f64);
                Complex64::new(c, s)
            })
            .collect();
        Ok(Fft { len, twiddles })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place transform. The inverse is unnormalized.
    pub fn process(&self, buf: &mut [Complex64], dir: Direction) {
        let n = self.len;
        assert_eq!(buf.len(), n, "buffer length does not match plan");
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if dir == Direction::Inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

/// 2D transform of a row-major `nx * ny` buffer (x fastest).
pub fn fft2(data: &mut [Complex64], nx: usize, ny: usize, dir: Direction) -> Result<()> {
    let row = Fft::new(nx)?;
    let col = Fft::new(ny)?;
    exec::for_each_row(data, nx, |_, r| row.process(r, dir));
    let mut t = transpose(data, nx, ny);
    exec::for_each_row(&mut t, ny, |_, c| col.process(c, dir));
    let back = transpose(&t, ny, nx);
    data.copy_from_slice(&back);
    Ok(())
}

fn transpose<T: Copy + Default>(data: &[T], nx: usize, ny: usize) -> Vec<T> {
    let mut out = vec![T::default(); data.len()];
    for j in 0..ny {
        for i in 0..nx {
            out[i * ny + j] = data[j * nx + i];
        }
    }
    out
}

/// Moves the zero-frequency sample to `(nx/2, ny/2)`.
pub fn fftshift2<T: Copy + Default>(data: &[T], nx: usize, ny: usize) -> Vec<T> {
    let mut out = vec![T::default(); data.len()];
    for j in 0..ny {
        let js = (j + ny / 2) % ny;
        for i in 0..nx {
            let is = (i + nx / 2) % nx;
            out[js * nx + is] = data[j * nx + i];
        }
    }
    out
}

/// Row-major real 2D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny);
        Grid2 { nx, ny, data }
    }

    /// Smallest centered sub-kernel (odd sizes kept odd, center kept) that
    /// holds every non-zero sample.
    pub fn trim_centered(&self) -> Grid2 {
        let (cx, cy) = (self.nx / 2, self.ny / 2);
        let (mut rx, mut ry) = (0usize, 0usize);
        let mut any = false;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.data[j * self.nx + i] != 0.0 {
                    any = true;
                    rx = rx.max(i.abs_diff(cx));
                    ry = ry.max(j.abs_diff(cy));
                }
            }
        }
        if !any {
            return Grid2::new(1, 1, vec![0.0]);
        }
        let (kx, ky) = (2 * rx + 1, 2 * ry + 1);
        let mut out = vec![0.0; kx * ky];
        for j in 0..ky {
            for i in 0..kx {
                let (si, sj) = (cx + i, cy + j);
                if si >= rx && sj >= ry && si - rx < self.nx && sj - ry < self.ny {
                    out[j * kx + i] = self.data[(sj - ry) * self.nx + (si - rx)];
                }
            }
        }
        Grid2::new(kx, ky, out)
    }
}

// Direct convolution is cheaper (and exact for impulse kernels) below this
// many kernel taps.
const DIRECT_TAPS: usize = 49;

/// Same-size linear convolution: the kernel center `(kx/2, ky/2)` aligns
/// with each output sample. Values outside `field` are zero. Negative
/// round-off is clamped to zero when both inputs are non-negative.
pub fn convolve_same(field: &Grid2, kernel: &Grid2) -> Result<Grid2> {
    let kernel = kernel.trim_centered();
    if kernel.nx * kernel.ny <= DIRECT_TAPS {
        return Ok(convolve_direct(field, &kernel));
    }
    convolve_fft(field, &kernel)
}

fn convolve_direct(field: &Grid2, kernel: &Grid2) -> Grid2 {
    let (nx, ny) = (field.nx, field.ny);
    let (kcx, kcy) = ((kernel.nx / 2) as isize, (kernel.ny / 2) as isize);
    let mut out = vec![0.0; nx * ny];
    exec::for_each_row(&mut out, nx, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for kj in 0..kernel.ny {
                let sj = j as isize + kcy - kj as isize;
                if sj < 0 || sj >= ny as isize {
                    continue;
                }
                for ki in 0..kernel.nx {
                    let si = i as isize + kcx - ki as isize;
                    if si < 0 || si >= nx as isize {
                        continue;
                    }
                    acc += kernel.data[kj * kernel.nx + ki] * field.data[sj as usize * nx + si as usize];
                }
            }
            *o = acc;
        }
    });
    Grid2::new(nx, ny, out)
}

fn convolve_fft(field: &Grid2, kernel: &Grid2) -> Result<Grid2> {
    let px = (field.nx + kernel.nx - 1).next_power_of_two();
    let py = (field.ny + kernel.ny - 1).next_power_of_two();
    let pad = |g: &Grid2| {
        let mut buf = vec![Complex64::new(0.0, 0.0); px * py];
        for j in 0..g.ny {
            for i in 0..g.nx {
                buf[j * px + i] = Complex64::new(g.data[j * g.nx + i], 0.0);
            }
        }
        buf
    };
    let mut a = pad(field);
    let mut b = pad(kernel);
    fft2(&mut a, px, py, Direction::Forward)?;
    fft2(&mut b, px, py, Direction::Forward)?;
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    fft2(&mut a, px, py, Direction::Inverse)?;
    let norm = 1.0 / (px * py) as f64;
    let nonneg = field.data.iter().all(|&v| v >= 0.0) && kernel.data.iter().all(|&v| v >= 0.0);
    let (ox, oy) = (kernel.nx / 2, kernel.ny / 2);
    let mut out = vec![0.0; field.nx * field.ny];
    for j in 0..field.ny {
        for i in 0..field.nx {
            let v = a[(j + oy) * px + (i + ox)].re * norm;
            out[j * field.nx + i] = if nonneg { v.max(0.0) } else { v };
        }
    }
    Ok(Grid2::new(field.nx, field.ny, out))
}
