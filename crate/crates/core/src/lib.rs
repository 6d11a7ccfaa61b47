//! Building blocks for millimeter-wave UAV cellular simulation.
//!
//! * [`array_channel`]: ULA steering vectors, the narrowband multipath channel,
//!   Friis link budgets and Doppler/coherence analytics.
//! * [`codebook`]: DEACT and BMW-SS hierarchical codebooks and their quality checks.
//! * [`beamsearch`]: exhaustive and hierarchical Tx/Rx beam search, slot
//!   accounting, success-rate Monte-Carlo and tracking shortlists.
//! * [`sdma`]: AoD-grid user grouping, effective multi-user channels,
//!   MMSE-SIC rates and the mmWave vs. low-frequency capacity comparison.
//! * [`deployment`]: LOS/NLOS/outage link states, user discovery and iterative
//!   UAV repositioning.

pub mod array_channel;
pub mod beamsearch;
pub mod codebook;
pub mod deployment;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod sdma;

pub use error::{Error, Result};
pub use num_complex::Complex64;
