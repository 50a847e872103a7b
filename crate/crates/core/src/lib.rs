//! Pseudospectral laboratory for the focusing mass-critical nonlinear
//! Schrödinger equation `i u_t + Δu = −|u|^{4/d} u`, `d ∈ {1, 2}`.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod ground_state;
pub mod lab;
pub mod profile;
pub mod spectral;
pub mod symmetry;

pub use error::{LabError, Result};
