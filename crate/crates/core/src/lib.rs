//! Simulation and estimation toolkit for spatially indexed functional data.
//!
//! A functional random field assigns a square-integrable curve on `[0, 1]` to
//! every location of `R^d`. This crate simulates such fields from their score
//! representation `X(s) = mu + sum_j xi_j(s) e_j`, computes the usual
//! estimators (sample mean, covariance operators, empirical functional
//! principal components, kriging), evaluates the consistency bounds that tie
//! estimation error to the geometry of the sampling design, and checks those
//! bounds and rates by seeded Monte Carlo.
//!
//! Module map:
//!
//! * [`funcspace`] - time grids, curves, the trigonometric basis.
//! * [`operators`] - discretized Hilbert-Schmidt kernel operators and their spectra.
//! * [`spatcov`] - spatial covariance families and decay envelopes.
//! * [`designs`] - point sets, the intensity function, design generators.
//! * [`simulate`] - Gaussian score fields and the special constructions.
//! * [`estimators`] - estimators and their losses.
//! * [`bounds`] - computable versions of the consistency bounds.
//! * [`runner`] - Monte Carlo engine, rate fitting, reports and the CLI.

pub mod bounds;
pub mod designs;
pub mod error;
pub mod estimators;
pub mod funcspace;
pub mod linalg;
pub mod operators;
pub mod rng;
pub mod runner;
pub mod simulate;
pub mod spatcov;

pub use error::{Error, Result};
