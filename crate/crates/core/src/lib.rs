//! Two-mode cavity transparency.
//!
//! Rates for a probe tuned halfway between two adjacent ring-resonator modes
//! coupled to a vapor of three-level atoms: single-photon scattering (which
//! vanishes at the midpoint through interference of the two mode amplitudes),
//! fourth-order two-photon absorption, its saturation at high atomic density,
//! and a brute-force truncated Fock-space evolution used as an independent
//! check of the perturbative formulas.
//!
//! All frequencies and couplings are stored as angular frequencies (E/ħ, in
//! rad/s); conversions to Hz, wavelengths and dipole moments happen in
//! [`params`] and at the file boundary in [`scenario_file`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dressed;
pub mod error;
pub mod oracle;
pub mod params;
pub mod perturbative;
pub mod scenario_file;
pub mod sweep;

pub use error::{Error, Result};
pub use params::Scenario;
