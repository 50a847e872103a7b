use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{LabError, Result};

/// Complex samples of a function on a [`Grid`], stored row-major in 2D.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Unitary-normalized discrete Fourier coefficients of a [`Field`].
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: grid.clone(),
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_samples(grid: &Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(LabError::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::InvalidParameter("samples must be finite".into()));
        }
        Ok(Field { grid: grid.clone(), data })
    }

    pub fn from_real(grid: &Grid, data: &[f64]) -> Result<Self> {
        Field::from_samples(grid, data.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 2]) -> Complex64) -> Self {
        Field {
            grid: grid.clone(),
            data: grid.positions().map(&mut f).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }

    pub fn forward(&self) -> SpectralField {
        let mut data = self.data.clone();
        self.grid.fft(&mut data, false);
        let scale = 1.0 / (self.grid.len() as f64).sqrt();
        data.iter_mut().for_each(|z| *z *= scale);
        SpectralField { grid: self.grid.clone(), data }
    }

    pub fn map(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    pub fn scale_real(&self, c: f64) -> Field {
        self.map(|z| z * c)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Pointwise multiplication by a real weight sampled on the grid.
    pub fn weighted(&self, weight: &[f64]) -> Field {
        Field {
            grid: self.grid.clone(),
            data: self.data.iter().zip(weight).map(|(&z, &w)| z * w).collect(),
        }
    }

    pub fn conj(&self) -> Field {
        self.map(|z| z.conj())
    }

    pub fn modulus_sq(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `h^d * sum |f|^p` raised to `1/p`; `p = f64::INFINITY` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm needs p >= 1");
        if p.is_infinite() {
            return self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        let sum: f64 = if p == 2.0 {
            self.data.iter().map(|z| z.norm_sqr()).sum()
        } else {
            self.data.iter().map(|z| z.norm().powf(p)).sum()
        };
        (self.grid.cell_volume() * sum).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// `int |f|^2`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// `<f, g> = int f conj(g)`: linear in the first slot, conjugate-linear in the second.
    pub fn inner_product(&self, other: &Field) -> Result<Complex64> {
        self.ensure_same_grid(other)?;
        let sum: Complex64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum();
        Ok(sum * self.grid.cell_volume())
    }

    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let sum: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((sum * self.grid.cell_volume()).sqrt())
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `int |grad f|^2`, computed exactly in the discrete Fourier frame.
    pub fn gradient_norm_sq(&self) -> f64 {
        self.forward().gradient_norm_sq()
    }

    pub fn laplacian(&self) -> Field {
        self.forward().apply_multiplier(|k2, _| -k2).inverse()
    }

    /// Partial derivative along `axis`; the Nyquist mode is dropped.
    pub fn derivative(&self, axis: usize) -> Field {
        self.forward().derivative(axis).inverse()
    }

    pub fn gradient(&self) -> Vec<Field> {
        let spec = self.forward();
        (0..self.grid.dim() as usize).map(|a| spec.derivative(a).inverse()).collect()
    }

    /// Mass-weighted centroid of `|f|^2`.
    pub fn centroid(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        let mut total = 0.0;
        for (i, z) in self.data.iter().enumerate() {
            let w = z.norm_sqr();
            let p = self.grid.position(i);
            c[0] += w * p[0];
            c[1] += w * p[1];
            total += w;
        }
        if total > 0.0 {
            c[0] /= total;
            c[1] /= total;
        }
        c
    }

    /// Position of the cell where `|f|^2` is largest.
    pub fn argmax_position(&self) -> [f64; 2] {
        let mut best = 0;
        let mut best_val = -1.0;
        for (i, z) in self.data.iter().enumerate() {
            let v = z.norm_sqr();
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        self.grid.position(best)
    }
}

impl SpectralField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.data
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn from_coefficients(grid: &Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(LabError::InvalidParameter("coefficient count mismatch".into()));
        }
        Ok(SpectralField { grid: grid.clone(), data })
    }

    pub fn inverse(&self) -> Field {
        let mut data = self.data.clone();
        self.grid.fft(&mut data, true);
        let scale = 1.0 / (self.grid.len() as f64).sqrt();
        data.iter_mut().for_each(|z| *z *= scale);
        Field { grid: self.grid.clone(), data }
    }

    /// Norm with the same `h^d` weight as the physical-space norm, so that
    /// Parseval reads `‖f‖ = ‖F‖`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn gradient_norm_sq(&self) -> f64 {
        let sum: f64 = self.data.iter().zip(self.grid.k2()).map(|(z, k2)| z.norm_sqr() * k2).sum();
        sum * self.grid.cell_volume()
    }

    /// Multiplies every coefficient by `m(|xi|^2, xi)`.
    pub fn apply_multiplier(&self, m: impl Fn(f64, [f64; 2]) -> f64) -> SpectralField {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &z)| z * m(self.grid.k2()[i], self.grid.wavevector(i)))
            .collect();
        SpectralField { grid: self.grid.clone(), data }
    }

    pub fn apply_complex_multiplier(&self, m: impl Fn(f64, [f64; 2]) -> Complex64) -> SpectralField {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &z)| z * m(self.grid.k2()[i], self.grid.wavevector(i)))
            .collect();
        SpectralField { grid: self.grid.clone(), data }
    }

    pub fn derivative(&self, axis: usize) -> SpectralField {
        let nyq = -self.grid.max_wavenumber();
        self.apply_complex_multiplier(|_, k| {
            let ka = k[axis];
            if ka == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, ka)
            }
        })
    }

    /// Fraction of `‖F‖²` carried by modes with some `|k_j|` above `fraction`
    /// of the Nyquist wavenumber.
    pub fn tail_fraction(&self, fraction: f64) -> f64 {
        let cut = fraction * self.grid.max_wavenumber();
        let mut tail = 0.0;
        let mut total = 0.0;
        for (i, z) in self.data.iter().enumerate() {
            let k = self.grid.wavevector(i);
            let w = z.norm_sqr();
            total += w;
            if k[0].abs() > cut || k[1].abs() > cut {
                tail += w;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}
