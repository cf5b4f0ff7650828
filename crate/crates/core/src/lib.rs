//! Distributionally robust receive beamforming.
//!
//! Linear and kernel (RKHS) estimators of transmitted MIMO signals built from
//! pilot data, robust variants under moment, F-norm and Bures uncertainty
//! sets, and a Monte-Carlo harness that compares them on simulated
//! ray-traced channels with impulse-contaminated noise.

pub mod config;
pub mod csvio;
pub mod dro;
pub mod error;
pub mod harness;
pub mod linear;
pub mod moments;
pub mod presets;
pub mod rkhs;
pub mod scene;
pub mod types;

pub use error::{Error, Result};
