//! Simulation of two capacitive-sensor read-out architectures.
//!
//! * [`cfc`]: a relaxation-oscillator capacitance-to-frequency converter with a
//!   gate-time counter, for large capacitances (tens of pF to 1 nF).
//! * [`chopper`]: a chopper-stabilized charge-amplifier chain for small
//!   differential capacitance changes on a half-bridge.
//!
//! Both chains share the waveform, noise, spectral and filter machinery in
//! [`signal`]. [`harness`] runs Monte Carlo device-spread experiments and
//! builds the side-by-side comparison report.
//!
//! Every stochastic operation is a pure function of its parameters and a
//! 64-bit seed; see [`rng`] for how independent streams are derived.

pub mod cfc;
pub mod chopper;
pub mod error;
pub mod harness;
pub mod rng;
pub mod sensors;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{FilterStages, NoiseSpec, Spectrum, Waveform};
