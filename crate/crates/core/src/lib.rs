//! Millimeter-wave joint radar-communications (JRC) simulation.
//!
//! The crate covers the full baseband chain for two JRC waveform families:
//!
//! - PMCW-JRC: binary phase-coded chips repeated over slow-time frames, with
//!   DPSK communication symbols riding on each frame.
//! - OFDMA-JRC: DPSK symbols on an OFDM subcarrier grid, a fraction of the
//!   subcarriers reserved as known radar pilots.
//!
//! Around those sit the channel models ([`channel`]), receive data-cube
//! synthesis ([`pmcw`], [`ofdma`]), estimation and decoding ([`estim`]),
//! performance measures such as the ambiguity function ([`perf`]) and
//! subcarrier power allocation ([`alloc`]).

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod channel;
mod dsp;
mod error;
pub mod estim;
pub mod io;
mod linalg;
pub mod ofdma;
pub mod perf;
pub mod pmcw;
pub mod sigcore;

pub use error::{JrcError, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;

/// Speed of light used throughout the models, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
