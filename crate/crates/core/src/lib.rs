//! Simulator and analysis toolkit for a hybrid secure quantum remote
//! sensing protocol on a network of sensor nodes.
//!
//! A sender estimates the sum of unknown phases held by remote, trusted
//! nodes while screening the quantum channel for a man-in-the-middle.
//! Each round she distributes either separable encoded qubits or one
//! entangled state over all nodes; each node randomly applies its phase
//! or leaves the probe untouched for a fidelity check, measures in a
//! random Pauli basis, and announces everything publicly.
//!
//! The crate provides:
//!
//! * [`qstate`] — analytic outcome laws for both probe families plus a
//!   brute-force state-vector oracle for verification;
//! * [`protocol`] — round simulation, deterministic verification, and
//!   evidence extraction;
//! * [`adversary`] — the four channel attacks and the closed-form
//!   per-round detection model;
//! * [`inference`] — circular-Bayesian estimation on grid likelihoods
//!   with FFT convolution and combination planning;
//! * [`security`] — detection-time distributions and certified lower
//!   bounds on the eavesdropper's dispersion;
//! * [`fisher`] — Fisher information and the Cramér–Rao floor;
//! * [`optimizer`] — the security-constrained grid-refinement search;
//! * [`montecarlo`] — the seeded, reproducible experiment harness.

pub mod adversary;
pub mod error;
pub mod fisher;
pub mod inference;
pub mod montecarlo;
pub mod optimizer;
pub mod protocol;
pub mod qstate;
pub mod security;

pub use error::{Error, Result};
