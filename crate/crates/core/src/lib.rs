//! Analytical model and network simulator for cache-enabled device-to-device
//! networks whose nodes have full-duplex radios.
//!
//! `N` users are dropped uniformly in a disk (a binomial point process). User
//! `κ` caches content `c_κ` from a Zipf-popular library of `m` items and
//! requests one content per slot. Depending on who wants what, every user lands
//! in one of the operating modes of [`OperatingMode`]; transmitters use full
//! channel inversion and full-duplex receivers suffer residual
//! self-interference.
//!
//! The crate has two independent routes to the success probability:
//!
//! * [`analytic`]: closed-form mode probabilities ([`modes`]), the conditional
//!   distance laws ([`geometry`]) and the interference Laplace transform
//!   evaluated by nested Gauss–Legendre rules ([`quadrature`]);
//! * [`simulator`]: a full Monte Carlo of the network with the same channel
//!   model, seeded per trial so results never depend on scheduling.

pub mod analytic;
mod error;
pub mod geometry;
pub mod modes;
pub mod popularity;
pub mod quadrature;
pub mod simulator;

pub use analytic::{
    laplace_interference, success_curve, success_probability, success_probability_cache,
    ChannelConfig, CurveSource, ModelConfig, ReceiverKind, SelfInterference, SuccessCurve,
    SuccessPoint,
};
pub use error::{Error, Result};
pub use geometry::{DiskConfig, Point2D};
pub use modes::{
    compute_mode_probabilities, transmit_probability, transmitter_count_pmf, ModeProbabilities,
    OperatingMode, TransmitterCountPmf,
};
pub use popularity::PopularityProfile;
pub use quadrature::{Level, QuadratureSpec};
pub use simulator::{Evaluate, ExperimentReport, ModeFrequencies, SimConfig};

/// Converts an SIR threshold in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear SIR threshold to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
