//! Simulation of photon-state transfer and a controlled-phase gate between
//! two superconducting resonators `r1`, `r2` that talk through a common bus
//! resonator `R` coupled to a transmon qutrit.
//!
//! The crate is organised bottom-up:
//!
//! * [`fockspace`] – tensor-product space `r1 ⊗ R ⊗ r2 ⊗ q`, ladder
//!   operators, states and density matrices.
//! * [`dynamics`] – segment Hamiltonians, loss channels and the Lindblad
//!   integrator for piecewise-constant control schedules.
//! * [`analytic`] – closed-form Jaynes–Cummings and beam-splitter solutions
//!   used as an independent check on the integrator.
//! * [`protocols`] – control schedules and ideal input/output states of the
//!   transfer and gate protocols.
//! * [`metrics`] – populations, fidelities and parameter sweeps.
//! * `cli` – configuration files and the experiment runner behind the
//!   `resobus` binary (feature `cli`).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
#[cfg(feature = "cli")]
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fockspace;
pub mod metrics;
pub mod protocols;
pub mod units;

pub use error::{Error, Result};
