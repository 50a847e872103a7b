//! Periodic grid, unitary Fourier frame, spectral derivatives and quadrature.

mod field;
mod grid;
pub mod interp;
pub mod snapshot;

pub use field::{Field, SpectralField};
pub use grid::{default_extent, Grid};
pub use interp::{RadialProfile, Resampler};

use num_complex::Complex64;

use crate::error::Result;

pub fn forward_transform(f: &Field) -> SpectralField {
    f.forward()
}

pub fn inverse_transform(f: &SpectralField) -> Field {
    f.inverse()
}

pub fn lp_norm(f: &Field, p: f64) -> f64 {
    f.lp_norm(p)
}

pub fn inner_product(f: &Field, g: &Field) -> Result<Complex64> {
    f.inner_product(g)
}

pub fn gradient_norm_sq(f: &Field) -> f64 {
    f.gradient_norm_sq()
}

pub fn laplacian(f: &Field) -> Field {
    f.laplacian()
}
