//! 16-bit binary PGM (P5, maxval 65535) for elemental images and
//! reconstructions.
//!
//! Row 0 of the file holds the samples with the most negative `y`, so file
//! rows and in-memory rows (`x` fastest) line up one to one.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::Path;

use image::codecs::pnm::{GraymapHeader, PnmDecoder, PnmEncoder, SampleEncoding};
use image::{DynamicImage, ExtendedColorType};

use crate::error::{AppError, Result};

pub const MAXVAL: u16 = 65535;

/// Raw 16-bit gray image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gray16 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u16>,
}

impl Gray16 {
    /// Scales non-negative `data` so its maximum maps to [`MAXVAL`]; returns
    /// the image and the intensity of one count. An all-zero input gives a
    /// scale of zero.
    pub fn quantize(width: usize, height: usize, data: &[f64]) -> (Self, f64) {
        assert_eq!(data.len(), width * height);
        let max = data.iter().copied().fold(0.0, f64::max);
        let scale = if max > 0.0 { max / MAXVAL as f64 } else { 0.0 };
        let pixels = data
            .iter()
            .map(|&v| {
                if scale == 0.0 {
                    0
                } else {
                    (v.max(0.0) / scale).round().min(MAXVAL as f64) as u16
                }
            })
            .collect();
        (Gray16 { width, height, pixels }, scale)
    }

    pub fn to_f64(&self, scale: f64) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 * scale).collect()
    }
}

pub fn write(path: &Path, img: &Gray16) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let header = GraymapHeader {
        encoding: SampleEncoding::Binary,
        width: img.width as u32,
        height: img.height as u32,
        maxwhite: MAXVAL as u32,
    };
    PnmEncoder::new(BufWriter::new(file))
        .with_header(header.into())
        .encode(&img.pixels[..], img.width as u32, img.height as u32, ExtendedColorType::L16)
        .map_err(|e| AppError::format(path, e.to_string()))
}

pub fn read(path: &Path) -> Result<Gray16> {
    let mut file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut magic = [0u8; 2];
    file.read_exact(&mut magic)
        .map_err(|_| AppError::format(path, "file too short for a PGM header"))?;
    if &magic != b"P5" && &magic != b"P2" {
        return Err(AppError::format(
            path,
            format!("not a PGM file (magic {:?}, expected \"P5\")", String::from_utf8_lossy(&magic)),
        ));
    }
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let decoder = PnmDecoder::new(BufReader::new(file)).map_err(|e| AppError::format(path, e.to_string()))?;
    let img = DynamicImage::from_decoder(decoder).map_err(|e| AppError::format(path, e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let pixels = img.into_luma16().into_raw();
    Ok(Gray16 { width, height, pixels })
}
