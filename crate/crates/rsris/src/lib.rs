//! Downlink rate-splitting beamforming and RIS phase-shift design from
//! second-order channel statistics.
//!
//! The crate models a MISO downlink in which a multi-antenna base station
//! serves single-antenna users, optionally assisted by a reconfigurable
//! intelligent surface (RIS). It provides:
//!
//! - a correlated channel model with direct, RIS-user and BS-RIS links,
//!   covariance synthesis from parametric angular-spread scenarios, and
//!   seeded channel sampling ([`channel`]),
//! - exact and covariance-based SINR/rate evaluation for rate-splitting
//!   transmission, including a Monte Carlo ergodic-rate estimator ([`rate`]),
//! - the statistical-CSI optimizer: a fractional-programming block
//!   coordinate descent with quasi closed-form precoder updates and a
//!   principal-eigenvector phase-shift heuristic ([`optimizer`]),
//! - a per-realization benchmark optimizer that works from noisy channel
//!   estimates with known error covariance ([`imperfect`]),
//! - a Monte Carlo experiment harness sweeping transmit power, covariance
//!   realizations and algorithm variants ([`harness`]).
//!
//! All randomness flows through explicitly seeded ChaCha streams so that
//! every result is bit-for-bit reproducible.

pub mod channel;
pub mod error;
pub mod harness;
pub mod imperfect;
pub mod linalg;
pub mod matio;
pub mod optimizer;
pub mod rate;
pub mod scenario;
pub mod seeding;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dynamically sized complex column vector.
pub type CVec = nalgebra::DVector<C64>;
