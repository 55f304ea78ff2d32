use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A signal had no samples.
    EmptySignal,
    /// A sample was NaN or infinite.
    NonFiniteSample { index: usize },
    /// Peak normalization of an all-zero signal.
    ZeroPeak,
    InvalidThreshold(f64),
    /// An observed sample lies outside `[-θc, θc]`.
    ExceedsThreshold { index: usize, value: f64, threshold: f64 },
    LengthMismatch { expected: usize, found: usize },
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    /// Frame parameters outside the painless tight-frame regime.
    InvalidFrame(&'static str),
    InvalidFrequency(f64),
    InvalidTau { tau: f64, curve_max: f64 },
    UnknownRecipe,
    MissingReference,
    NotMaskingRecipe,
    InvalidConfig(&'static str),
    /// An iterate became NaN/Inf.
    Diverged { iteration: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySignal => write!(f, "signal has no samples"),
            Error::NonFiniteSample { index } => write!(f, "sample {index} is not finite"),
            Error::ZeroPeak => write!(f, "cannot peak-normalize an all-zero signal"),
            Error::InvalidThreshold(t) => write!(f, "clipping threshold must be positive, got {t}"),
            Error::ExceedsThreshold { index, value, threshold } => write!(
                f,
                "sample {index} = {value} exceeds the clipping threshold {threshold}"
            ),
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::ShapeMismatch { expected, found } => write!(
                f,
                "grid shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidFrame(why) => write!(f, "invalid Gabor frame: {why}"),
            Error::InvalidFrequency(hz) => write!(f, "frequency must be positive, got {hz} Hz"),
            Error::InvalidTau { tau, curve_max } => {
                write!(f, "tau = {tau} dB is below the curve maximum {curve_max} dB")
            }
            Error::UnknownRecipe => write!(f, "unknown weight recipe"),
            Error::MissingReference => {
                write!(f, "masking-threshold weights need a reference signal")
            }
            Error::NotMaskingRecipe => {
                write!(f, "two-pass declipping requires a gmt1/gmt2/gmt3 recipe")
            }
            Error::InvalidConfig(why) => write!(f, "invalid solver configuration: {why}"),
            Error::Diverged { iteration } => {
                write!(f, "non-finite iterate at iteration {iteration}")
            }
        }
    }
}

impl core::error::Error for Error {}
