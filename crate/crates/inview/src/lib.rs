//! File formats and command-line driver for `inview-core`: elemental-image
//! manifests with 16-bit PGM images, JSON run configs and scenes, and the
//! curve, FOV and reconstruction outputs.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod pgm;
pub mod scene;

pub use error::{AppError, Result};
