//! Wave-optics toolkit for integral imaging (InI) systems.
//!
//! The crate covers two jobs:
//!
//! * estimating the diffraction-limited spot of an on-axis point source as
//!   seen on an arbitrarily tilted plane, and the field of view that
//!   follows from it ([`analyzer`]);
//! * reconstructing a scene from an elemental-image grid on tilted planes,
//!   either geometrically or with a defocus point-spread function
//!   ([`reconstruct`], [`psf`]).
//!
//! A pinhole forward model ([`synth`]) produces synthetic elemental images
//! so both halves can be checked against each other.
//!
//! The crate is `no_std` + `alloc`. The default `parallel` feature pulls in
//! `std` and rayon; every reduction runs in a fixed order so results do not
//! depend on the worker count.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analyzer;
pub mod error;
pub mod fft;
pub mod field;
pub mod optics;
pub mod psf;
pub mod reconstruct;
pub mod synth;

mod exec;

pub use analyzer::{
    aggregate_spot, extract_fov, radial_extent, scan_resolution, FovResult, ResolutionCurve,
    ScanAxis, SpotProfile,
};
pub use error::{Error, Result};
pub use field::ScalarField2D;
pub use optics::{
    ApertureShape, BeamParameters, ImageDistance, ImagingMode, LensletCentering,
    OpticalSystemConfig, PlaneGrid, TiltedPlaneSpec,
};
pub use psf::{defocus_psf, PsfKernel};
pub use reconstruct::{
    reconstruct, ElementalImageSet, PsfModel, ReconstructMode, ReconstructOptions, Reconstruction,
};
pub use synth::{capture, CaptureReport, CaptureSettings, PointEmitter, Scene, TexturedPlane};
