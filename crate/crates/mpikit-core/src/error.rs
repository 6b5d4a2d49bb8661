//! Error type shared across the crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Two operands (or a tensor and a mask) disagree on shape.
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    /// A tensor constructor received data whose length does not match the shape.
    DataLength { expected: usize, got: usize },
    /// A shape with a zero extent or an unsupported rank.
    InvalidShape { context: &'static str, shape: Vec<usize> },
    /// The post-erosion mask has no background pixel left; the inpainting
    /// loop would never terminate.
    AllForeground,
    /// A label map contains a class id outside the expected range.
    LabelOutOfRange { label: u8, classes: usize },
    /// Dimensions not divisible by the requested downsampling factor.
    NonDivisible { extent: usize, factor: usize },
    /// Inconsistent model configuration.
    InvalidConfig(String),
    /// Training aborted because the loss became non-finite.
    Divergence { epoch: usize, step: usize },
    /// Malformed file contents (bad magic, truncated payload, bad header...).
    Format(String),
    /// Config file problems: duplicate key, unknown key, unparsable value.
    Config(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { context, expected, got } => {
                write!(f, "{context}: shape mismatch, expected {expected:?}, got {got:?}")
            }
            Error::DataLength { expected, got } => {
                write!(f, "data length {got} does not match shape product {expected}")
            }
            Error::InvalidShape { context, shape } => {
                write!(f, "{context}: invalid shape {shape:?}")
            }
            Error::AllForeground => {
                write!(f, "mask is all foreground after the boundary pre-step; nothing to inpaint from")
            }
            Error::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            Error::NonDivisible { extent, factor } => {
                write!(f, "extent {extent} not divisible by factor {factor}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Divergence { epoch, step } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}, step {step}")
            }
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
