//! Max-min SINR optimization for a RIS-aided multi-user uplink.
//!
//! The crate alternates between three sub-problems for a fixed channel
//! realization:
//!
//! - receive beamforming at the base station ([`beamforming`]),
//! - per-user transmit power under power/EMF caps ([`power`]),
//! - RIS phase shifts ([`phase`]), with three interchangeable solvers:
//!   semidefinite relaxation with Dinkelbach iterations, projected gradient
//!   on a log-sum-exp smooth minimum, and a randomized quantized search.
//!
//! [`alternating::alternating_optimize`] ties the stages together and
//! [`channel`] draws channel realizations for Monte Carlo studies.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alternating;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod model;
pub mod phase;
pub mod power;
pub mod units;

#[cfg(test)]
mod testutil;

pub use alternating::{alternating_optimize, PhaseMethod, Solution};
pub use channel::{sample_channel, ChannelRealization};
pub use error::{Error, Result};
pub use model::{
    effective_channel, sinr_per_user, Beamformer, PhaseVector, PowerAllocation, SinrReport, Stage,
    SystemConfig,
};

pub use nalgebra;
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
