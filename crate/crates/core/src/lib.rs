//! Simulator for an interferometric entanglement concentrator acting on
//! type-II down-converted photon pairs.
//!
//! * [`qstate`]: two-qubit density matrices and entanglement measures
//! * [`dispersion`]: crystal indices and group delays
//! * [`biphoton`]: the two-photon amplitude Π(t₊, t₋)
//! * [`concentrator`]: coincidence rates, sweeps and the delay → state map
//! * [`expsim`]: Monte Carlo detection chain and tomography
//! * [`config`], [`cli`]: text configuration and the command-line front end

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod cli;
pub mod concentrator;
pub mod config;
pub mod csv;
pub mod dispersion;
pub mod error;
pub mod expsim;
pub mod qstate;
pub mod setup;

pub use error::{Error, Result};
