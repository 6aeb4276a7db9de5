//! Inversion of noisy 2-D Radon data on the unit disk.
//!
//! The observation is reduced to its singular value decomposition, mapped
//! onto a needlet tight frame built from the same basis, hard-thresholded,
//! and synthesized back. Alongside the frame machinery the crate ships the
//! simulation pieces (phantoms, analytic projections, the white-noise
//! observation model) and an experiment harness that compares linear and
//! thresholded SVD and needlet estimators under several `L_p` losses.

pub mod cubature;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod image;
pub mod needlet;
pub mod orthopoly;
pub mod sim;
pub mod svd_basis;

pub use error::{Error, Result};
