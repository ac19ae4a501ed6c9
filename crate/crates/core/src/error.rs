use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar argument is outside its admissible domain.
    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The operation needs a finite focal plane but the system is in focused mode.
    #[error("focal plane is at infinity (focused mode); use the collimated fallback")]
    FocusedMode,

    #[error("lenslet index ({p}, {q}) out of range for a {m}x{n} array")]
    LensletIndex { p: usize, q: usize, m: usize, n: usize },

    /// The plane grid is too coarse for the narrowest beam it intersects.
    #[error("plane grid under-resolved: sample pitch {pitch} mm exceeds the required {required} mm")]
    UnderResolved { pitch: f64, required: f64 },

    /// Pupil-plane sampling is too coarse or too small for the requested PSF.
    #[error("pupil sampling inadequate: {reason} {limit} mm")]
    PupilSampling { reason: &'static str, limit: f64 },

    /// A tilted-plane point lies at or behind the lens array.
    #[error("plane point at local depth {depth} mm is not in front of the lens array")]
    BehindArray { depth: f64 },

    /// Field has no positive mass to take a moment of.
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
