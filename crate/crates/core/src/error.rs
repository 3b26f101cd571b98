use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency {freq} Hz aliases: must be below Nyquist ({nyquist} Hz)")]
    Aliasing { freq: f64, nyquist: f64 },

    #[error("waveform has {len} samples, at least {min} required")]
    TooShort { len: usize, min: usize },

    #[error("segment length {segment} exceeds waveform length {len}")]
    SegmentTooLong { segment: usize, len: usize },

    #[error("sample rate mismatch: expected {expected} Hz, got {found} Hz")]
    SampleRateMismatch { expected: f64, found: f64 },

    #[error("waveform shape mismatch: {left} vs {right} samples")]
    ShapeMismatch { left: usize, right: usize },

    #[error("relative humidity {0}% outside [0, 100]")]
    HumidityOutOfRange(f64),

    #[error("acceleration {accel} g over range: |accel| must stay below {limit} g")]
    OverRange { accel: f64, limit: f64 },

    #[error("time step {dt} s too coarse, must be at most {max} s")]
    StepTooCoarse { dt: f64, max: f64 },

    #[error("oscillator stalled: no threshold crossing within {window} s")]
    Stall { window: f64 },

    #[error("empty cycle stream")]
    EmptyCycleStream,

    #[error("averaging window is empty")]
    EmptyWindow,

    #[error("metric undefined: {0}")]
    Degenerate(&'static str),

    #[error("need at least 2 values, got {0}")]
    TooFewValues(usize),

    #[error("monte carlo sample {index} failed: {source}")]
    SampleFailed { index: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Reject non-finite or non-positive values.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}
