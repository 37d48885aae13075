//! Deep-sea crane simulation: a trolley carrying a flexible payload under
//! Morison hydrodynamic loading, a hierarchical sliding-mode controller with
//! adaptive gain and an online neural compensator, PID and LQR baselines,
//! and the experiment harness that compares them.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod error;
pub mod hsmc;
pub mod neurocomp;
pub mod plant;
pub mod scenarios;
pub mod simkit;

pub use error::{Error, Result};
