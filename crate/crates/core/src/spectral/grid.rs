use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

/// Periodic box `[-L/2, L/2)^d` sampled at `N` points per axis.
///
/// The grid owns its FFT plans and the frequency tables, so cloning is cheap
/// (an `Arc` bump) and every field on the grid shares them.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: u32,
    extent: f64,
    points: usize,
    spacing: f64,
    coords: Vec<f64>,
    wavenumbers: Vec<f64>,
    k2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(dim: u32, extent: f64, points: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(LabError::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(LabError::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        let spacing = extent / points as f64;
        let coords = (0..points).map(|j| -0.5 * extent + j as f64 * spacing).collect();
        let half = points as i64 / 2;
        let wavenumbers: Vec<f64> = (0..points as i64)
            .map(|j| {
                let k = if j < half { j } else { j - points as i64 };
                2.0 * PI * k as f64 / extent
            })
            .collect();
        let k2 = match dim {
            1 => wavenumbers.iter().map(|k| k * k).collect(),
            _ => {
                let mut out = Vec::with_capacity(points * points);
                for kx in &wavenumbers {
                    for ky in &wavenumbers {
                        out.push(kx * kx + ky * ky);
                    }
                }
                out
            }
        };
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                extent,
                points,
                spacing,
                coords,
                wavenumbers,
                k2,
                forward,
                inverse,
            }),
        })
    }

    /// Default box for `d`: wide enough that the ground state's exponential
    /// tail is below 1e-12 at the boundary.
    pub fn default_for(dim: u32, points: usize) -> Result<Self> {
        Grid::new(dim, default_extent(dim), points)
    }

    pub fn dim(&self) -> u32 {
        self.inner.dim
    }

    pub fn extent(&self) -> f64 {
        self.inner.extent
    }

    pub fn points(&self) -> usize {
        self.inner.points
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.inner.points.pow(self.inner.dim)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Sample positions along one axis, `x_j = -L/2 + j h`.
    pub fn coords(&self) -> &[f64] {
        &self.inner.coords
    }

    /// Angular wavenumbers along one axis in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// `|xi|^2` for every spectral index (flattened, row-major).
    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }

    pub fn max_wavenumber(&self) -> f64 {
        PI / self.inner.spacing
    }

    /// Index of the sample at the box centre (x = 0) along one axis.
    pub fn center_index(&self) -> usize {
        self.inner.points / 2
    }

    /// Position of flattened sample `idx`; the second component is zero in 1D.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let n = self.inner.points;
        match self.inner.dim {
            1 => [self.inner.coords[idx], 0.0],
            _ => [self.inner.coords[idx / n], self.inner.coords[idx % n]],
        }
    }

    /// Wavevector of flattened spectral index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let n = self.inner.points;
        match self.inner.dim {
            1 => [self.inner.wavenumbers[idx], 0.0],
            _ => [self.inner.wavenumbers[idx / n], self.inner.wavenumbers[idx % n]],
        }
    }

    /// Iterator over all sample positions in storage order.
    pub fn positions(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.position(i))
    }

    /// `|x|^2` for every sample, measured from the box centre.
    pub fn radius_sq(&self) -> Vec<f64> {
        self.positions().map(|p| p[0] * p[0] + p[1] * p[1]).collect()
    }

    pub(crate) fn fft(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inner.inverse } else { &self.inner.forward };
        let n = self.inner.points;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // Batched rows; in 2D transpose, transform the former columns, transpose back.
        plan.process_with_scratch(data, &mut scratch);
        if self.inner.dim == 2 {
            transpose_square(data, n);
            plan.process_with_scratch(data, &mut scratch);
            transpose_square(data, n);
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

pub fn default_extent(dim: u32) -> f64 {
    if dim == 1 {
        60.0
    } else {
        50.0
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dim == other.inner.dim
            && self.inner.points == other.inner.points
            && self.inner.extent.to_bits() == other.inner.extent.to_bits()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("extent", &self.inner.extent)
            .field("points", &self.inner.points)
            .finish()
    }
}
