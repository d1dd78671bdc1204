//! Adversarial robustness testing for tree ensembles.
//!
//! Tree ensembles are piecewise constant, so gradient-based attacks cannot be
//! applied to them directly. This crate relaxes every hard split into a
//! tempered sigmoid, producing a differentiable surrogate
//! ([`smoothing::SmoothedEnsemble`]), and then runs iterative gradient ascent
//! on that surrogate while adjudicating every candidate against the original,
//! unsmoothed model.
//!
//! Module map:
//!
//! - [`ensemble`]: tree/ensemble data model, hard prediction, JSON model files.
//! - [`trainer`]: a small deterministic random-forest trainer.
//! - [`smoothing`]: soft routing, exact gradients and the sampled path estimator.
//! - [`perturb`]: per-feature empirical CDFs and quantile-space perturbation boxes.
//! - [`attack`]: smoothed-tree attack plus Random and NES baselines.
//! - [`harness`]: datasets, cross-validated campaigns, sweeps, reports, surfaces.

pub mod attack;
pub mod ensemble;
mod error;
pub mod harness;
pub mod perturb;
pub mod rng;
pub mod smoothing;
pub mod trainer;

pub use error::{Error, Result};
