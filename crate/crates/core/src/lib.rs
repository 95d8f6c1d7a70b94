//! Spectral simulation of the periodic "good" Boussinesq equation
//!
//! ```text
//! u_tt - u_xx + u_xxxx + σ (u^{2k+1})_xx = 0,   x ∈ [-L/2, L/2)
//! ```
//!
//! together with instruments for the I-method: the smoothing multiplier,
//! modified energies and their drift, space-time norm estimates, and growth
//! studies of Sobolev norms for rough data.

pub mod datagen;
pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod experiments;
pub mod functionals;
pub mod imethod;
pub mod propagators;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
