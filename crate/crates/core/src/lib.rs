//! Dynamical importance of units in Markov networks, measured by information
//! dissipation time (IDT): how long the instantaneous state of a single unit
//! keeps influencing the state of the whole system.
//!
//! The crate provides three independent routes to the same quantity, so each
//! can be checked against the others:
//!
//! * [`analytic`] — a cavity/mean-field evaluation of per-degree information
//!   transmission and the closed-form IDT it implies,
//! * [`empirical`] — a trajectory-ensemble estimator on simulated Ising
//!   dynamics ([`dynamics`]) over configuration-model graphs ([`netgen`]),
//! * [`oracle`] — exact enumeration of the full 2^n Markov kernel for small
//!   systems, the ground truth both other routes are tested against.
//!
//! [`trend`] and [`chart`] hold the downstream analysis helpers (index-space
//! Gaussian smoothing, least-squares trend fits, SVG rendering); [`io`] the
//! CSV formats shared with the command-line frontend.

pub mod analytic;
pub mod chart;
pub mod dynamics;
pub mod empirical;
pub mod error;
pub mod info;
pub mod io;
pub mod netgen;
pub mod oracle;
pub mod rng;
pub mod trend;

pub use error::{Error, Result};
