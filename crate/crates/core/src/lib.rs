//! Common-information quantities and interactive secret-key rates for a
//! finite joint distribution of two sources.
//!
//! * [`prob`]: validated pmfs, dense tensors and Shannon functionals.
//! * [`structure`]: minimal sufficient statistics, the Gács–Körner common
//!   function, double-Markov decomposition and the one-way rate `R_NI`.
//! * [`wyner`]: numerical upper bounds on Wyner's common information.
//! * [`ici`]: interactive common information `CI_i^r` through a registry of
//!   interchangeable solvers, and the assembled [`ici::RateReport`].
//! * [`lab`]: finite-blocklength protocols, exact identity checks and Monte
//!   Carlo simulation of binning and key extraction.

pub mod error;
pub mod ici;
pub mod lab;
pub mod optim;
pub mod prob;
pub mod sources;
pub mod structure;
pub mod wyner;

pub use error::{Error, Result};
pub use prob::{JointPmf, Side, TensorPmf};
