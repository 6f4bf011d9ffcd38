//! Interference-resilient OFDM waveform design for integrated sensing and
//! communication.
//!
//! The crate covers the whole design chain for a single OFDM symbol:
//!
//! * [`signal`] synthesizes the time-domain waveform and evaluates the
//!   sensing (autocorrelation PSL) and communication (CDR, CVE, PAPR) metrics.
//! * [`solver`] holds a small dense interior-point solver and the two convex
//!   subproblems built on it: relaxed subcarrier assignment and power/PSL
//!   epigraph allocation.
//! * [`acm`] runs the adaptive cyclic minimization loop that alternates those
//!   subproblems under a minimum-interval constraint on communication
//!   subcarriers, plus the high-response baseline.
//! * [`cve`] flattens the envelope by optimizing the phases of the reserved
//!   (non-communication) subcarriers with alternating least squares.
//! * [`link`] generates channels, multi-tone interference and 8-PSK traffic and
//!   estimates BER and CCDF curves.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. All randomness flows through explicitly seeded generators.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod acm;
pub mod cve;
pub mod error;
pub mod fft;
pub mod link;
pub mod rng;
pub mod signal;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
