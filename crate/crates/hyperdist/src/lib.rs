//! Simulator and analysis library for single-copy distillation of
//! polarization entanglement using a co-propagating frequency (or other
//! auxiliary) degree of freedom of the same photon pair.
//!
//! The crate provides three independent routes to every protocol quantity:
//!
//! * [`analytic`]: closed-form fidelity, yield and gain expressions;
//! * [`protocol::run_probability`]: exact branch bookkeeping over the
//!   Bell-product transition table;
//! * [`protocol::run_oracle`]: a dense density-matrix pipeline built from
//!   explicit unitaries, used as ground truth for everything else.
//!
//! [`montecarlo`] adds seeded sampling estimators and a detector-level event
//! stream, [`rates`] absolute pair-rate accounting, and [`cli`] the config
//! parsing and sweep engine behind the `hyperdist` binary.

pub mod analytic;
pub mod bellspace;
pub mod channels;
pub mod cli;
pub mod matrix;
pub mod montecarlo;
pub mod oracle;
pub mod protocol;
pub mod rates;
