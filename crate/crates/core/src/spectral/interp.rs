//! Evaluation of band-limited fields off the grid.
//!
//! A field is first upsampled by zero-padding its spectrum, then evaluated with
//! a local Lagrange stencil on the fine grid. Points outside the box evaluate to
//! zero: the box stands in for the whole space, not for a torus.

use num_complex::Complex64;

use super::field::Field;
use super::grid::Grid;
use crate::error::Result;

pub const DEFAULT_UPSAMPLE: usize = 4;
pub const DEFAULT_STENCIL: usize = 12;

#[derive(Clone, Debug)]
pub struct Resampler {
    dim: u32,
    extent: f64,
    fine_n: usize,
    fine_h: f64,
    stencil: usize,
    data: Vec<Complex64>,
    lagrange_denoms: Vec<f64>,
}

impl Resampler {
    pub fn new(field: &Field) -> Result<Self> {
        Resampler::with_options(field, DEFAULT_UPSAMPLE, DEFAULT_STENCIL)
    }

    pub fn with_options(field: &Field, upsample: usize, stencil: usize) -> Result<Self> {
        let grid = field.grid();
        let n = grid.points();
        let fine_n = n * upsample;
        let fine = Grid::new(grid.dim(), grid.extent(), fine_n)?;
        let spec = field.forward();
        let coeffs = spec.coefficients();
        let gain = (upsample as f64).powf(grid.dim() as f64 / 2.0);
        let mut fine_coeffs = vec![Complex64::new(0.0, 0.0); fine.len()];

        // Signed index -> list of (fine index, weight). The Nyquist mode is split
        // evenly between +N/2 and -N/2 so real fields stay real.
        let targets = |j: usize| -> Vec<(usize, f64)> {
            let half = n / 2;
            if j < half {
                vec![(j, 1.0)]
            } else if j == half {
                vec![(half, 0.5), (fine_n - half, 0.5)]
            } else {
                vec![(fine_n - (n - j), 1.0)]
            }
        };

        match grid.dim() {
            1 => {
                for (j, c) in coeffs.iter().enumerate() {
                    for (t, w) in targets(j) {
                        fine_coeffs[t] += c * w * gain;
                    }
                }
            }
            _ => {
                for a in 0..n {
                    let ta = targets(a);
                    for b in 0..n {
                        let c = coeffs[a * n + b];
                        for &(ia, wa) in &ta {
                            for (ib, wb) in targets(b) {
                                fine_coeffs[ia * fine_n + ib] += c * wa * wb * gain;
                            }
                        }
                    }
                }
            }
        }
        let mut data = fine_coeffs;
        fine.fft(&mut data, true);
        let norm = 1.0 / (fine.len() as f64).sqrt();
        data.iter_mut().for_each(|z| *z *= norm);

        let lagrange_denoms = (0..stencil)
            .map(|i| {
                let mut d = 1.0;
                for j in 0..stencil {
                    if j != i {
                        d *= i as f64 - j as f64;
                    }
                }
                1.0 / d
            })
            .collect();

        Ok(Resampler {
            dim: grid.dim(),
            extent: grid.extent(),
            fine_n,
            fine_h: fine.spacing(),
            stencil,
            data,
            lagrange_denoms,
        })
    }

    fn axis_weights(&self, x: f64, idx: &mut [usize], w: &mut [f64]) -> bool {
        let half = 0.5 * self.extent;
        if !(x >= -half && x < half) {
            return false;
        }
        let s = (x + half) / self.fine_h;
        let m = self.stencil;
        let base = s.floor() as i64 - (m as i64 / 2 - 1);
        let n = self.fine_n as i64;
        let offset = s - base as f64;
        for i in 0..m {
            idx[i] = (base + i as i64).rem_euclid(n) as usize;
        }
        if offset.fract() == 0.0 {
            let hit = offset as usize;
            for i in 0..m {
                w[i] = if i == hit { 1.0 } else { 0.0 };
            }
            return true;
        }
        let mut ell = 1.0;
        for i in 0..m {
            ell *= offset - i as f64;
        }
        for i in 0..m {
            w[i] = ell * self.lagrange_denoms[i] / (offset - i as f64);
        }
        true
    }

    /// Value of the band-limited interpolant at `p` (second component ignored in 1D).
    pub fn eval(&self, p: [f64; 2]) -> Complex64 {
        let m = self.stencil;
        let mut ix = [0usize; 32];
        let mut wx = [0.0f64; 32];
        if !self.axis_weights(p[0], &mut ix[..m], &mut wx[..m]) {
            return Complex64::new(0.0, 0.0);
        }
        if self.dim == 1 {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..m {
                acc += self.data[ix[i]] * wx[i];
            }
            return acc;
        }
        let mut iy = [0usize; 32];
        let mut wy = [0.0f64; 32];
        if !self.axis_weights(p[1], &mut iy[..m], &mut wy[..m]) {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..m {
            let row = ix[a] * self.fine_n;
            let mut inner = Complex64::new(0.0, 0.0);
            for b in 0..m {
                inner += self.data[row + iy[b]] * wy[b];
            }
            acc += inner * wx[a];
        }
        acc
    }

    /// Samples the interpolant at `map(x)` for every point `x` of `grid`.
    pub fn resample_onto(&self, grid: &Grid, map: impl Fn([f64; 2]) -> [f64; 2]) -> Field {
        Field::from_fn(grid, |p| self.eval(map(p)))
    }
}

/// Radial profile `q(r)` of a radially symmetric field, read off the axis line
/// through the box centre, with its derivative `q'(r)`.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    value: Resampler,
    slope: Resampler,
}

impl RadialProfile {
    pub fn new(field: &Field) -> Result<Self> {
        let grid = field.grid();
        let line = match grid.dim() {
            1 => field.clone(),
            _ => {
                let n = grid.points();
                let row = grid.center_index();
                let g1 = Grid::new(1, grid.extent(), n)?;
                Field::from_samples(&g1, field.samples()[row * n..(row + 1) * n].to_vec())?
            }
        };
        let slope = line.derivative(0);
        Ok(RadialProfile {
            value: Resampler::new(&line)?,
            slope: Resampler::new(&slope)?,
        })
    }

    pub fn value(&self, r: f64) -> f64 {
        self.value.eval([r, 0.0]).re
    }

    pub fn slope(&self, r: f64) -> f64 {
        self.slope.eval([r, 0.0]).re
    }
}
