//! Media-based modulation (MBM) constellation toolkit.
//!
//! An MBM transmitter selects one of `2^k` RF-mirror activation patterns per
//! symbol, so the received constellation is the set of channel states
//! `{h_1, ..., h_M}` themselves. This crate provides:
//!
//! - [`constellation`]: open-loop draws with `h_i ~ CN(0, 1)`, reference
//!   QAM/PSK grids, exact minimum-distance scans and closed-loop weighting.
//! - [`analytic`]: closed-form minimum-distance results for random MBM
//!   constellations and their comparison with M-QAM over Rayleigh fading.
//! - [`optimizer`]: the stochastic perturbation search for complex weights
//!   maximizing the minimum distance under `sum |w_i|^2 = 2^k`, and the
//!   swap search for Hamming-aware bit labelings.
//! - [`channel`]: seeded, shard-invariant Monte Carlo SER/BER simulation.
//! - [`stats`]: minimum-distance sampling, histograms and KS statistics.
//! - [`io`]: JSON and CSV formats shared with the command-line tool.

pub mod analytic;
pub mod channel;
pub mod constellation;
pub mod error;
pub mod io;
pub mod optimizer;
pub mod rng;
pub mod stats;

pub use constellation::{
    apply_weights, draw_open_loop, min_pairwise_distance, reference_psk, reference_qam,
    ComplexScalar, Constellation, DistanceReport, Provenance, WeightVector,
};
pub use error::{MbmError, Result};
