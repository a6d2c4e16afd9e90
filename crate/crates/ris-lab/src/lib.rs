//! Closed-form mean-SNR analysis and Monte-Carlo simulation of multi-frequency
//! multi-user RIS systems with subsurface phase selection over correlated
//! Ricean channels.
//!
//! The library is organized bottom-up:
//!
//! * [`specfun`] — real-argument special functions plus the two cross-moment
//!   kernels `F_R` (envelope product) and `G_R` (phasor product) with certified
//!   truncation control and a numerically stable quadrature fallback.
//! * [`channel`] — scenario construction (geometry, path loss, steering
//!   vectors, sinc spatial correlation) and correlated Ricean channel sampling.
//! * [`phase`] — RIS phase-selection strategies: LoS subsurface design (SD),
//!   SVD-based design, iterative design (ISD), converged ISD (CISD), and
//!   uniform-random phases.
//! * [`snr`] — the six-term instantaneous SNR decomposition and its exact
//!   expectation for the general Ricean case and two Rayleigh special cases.
//! * [`mc`] — reproducible Monte-Carlo experiments: user drops, replicated
//!   sampling, transmit-power calibration, analytic-vs-simulated comparison.
//! * [`config`] / [`cli`] — the TOML experiment surface and the `ris-lab`
//!   command-line front end (CSV + manifest outputs).
//!
//! See the `examples/` directory for one runnable walkthrough per capability.

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod mc;
pub mod phase;
pub mod rng;
pub mod snr;
pub mod specfun;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
