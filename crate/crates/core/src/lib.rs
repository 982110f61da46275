//! Analysis and simulation of two-hop amplify-and-forward OFDM relay links
//! whose source and relay amplifiers are soft envelope limiters.
//!
//! The crate is layered bottom-up:
//!
//! * [`special_math`]: `erfc`, `K₁`, unitary DFT and semi-infinite quadrature.
//! * [`bussgang`]: the soft envelope limiter and its Bussgang gain,
//!   distortion power and average output power.
//! * [`link_budget`]: network parameters, fixed/variable relay gains and the
//!   per-subcarrier signal-to-noise-plus-distortion ratio (SNDR).
//! * [`outage`]: exact, semi-analytic and asymptotic outage probabilities
//!   and diversity fits.
//! * [`epsilon_critical`]: the critical SNDR thresholds at which outage
//!   collapses when distortion dominates noise, and the associated ordinates.
//! * [`simulator`]: Monte Carlo ground truth, with channel-level sampling and a
//!   full time-domain OFDM waveform chain through both limiters.

pub mod bussgang;
pub mod epsilon_critical;
pub mod error;
pub mod link_budget;
pub mod outage;
pub mod simulator;
pub mod special_math;

pub use link_budget::{LinkBudget, NetworkConfig, Protocol};

pub use error::{Error, Result};
