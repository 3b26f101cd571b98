//! Waveforms, seeded noise synthesis, spectral estimation and the 4th-order
//! low-pass shared by both read-out chains.

mod filter;
mod noise;
mod psd;
mod waveform;

pub use filter::{design_lowpass_4th, filter_apply, Biquad, FilterStages};
pub use noise::{flicker_noise, white_noise, NoiseSpec, MIN_FLICKER_SAMPLES};
pub use psd::{estimate_psd, fit_loglog_slope, Spectrum};
pub use waveform::{sine, tone_amplitude, Waveform};
