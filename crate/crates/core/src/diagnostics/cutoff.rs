//! Spatial and frequency cut-offs used by the truncated functionals.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::Grid;

/// C^∞ step: 0 for `z ≤ 0`, 1 for `z ≥ 1`.
pub fn smooth_step(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / z).exp();
        let b = (-1.0 / (1.0 - z)).exp();
        a / (a + b)
    }
}

/// Bump `ψ(s)`: 1 on `s ≤ 1`, 0 on `s ≥ 2`.
pub fn lp_bump(s: f64) -> f64 {
    1.0 - smooth_step(s - 1.0)
}

/// `χ(s)`: 1 on `s ≤ 9/10`, 0 on `s ≥ 1`.
pub fn chi_bump(s: f64) -> f64 {
    1.0 - smooth_step((s - 0.9) / 0.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    ChiBump,
    PsiVirial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub kind: CutoffKind,
    pub radius: f64,
}

impl Cutoff {
    pub fn chi(radius: f64) -> Self {
        Cutoff {
            kind: CutoffKind::ChiBump,
            radius,
        }
    }

    pub fn psi_virial(radius: f64) -> Self {
        Cutoff {
            kind: CutoffKind::PsiVirial,
            radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub radius: f64,
    pub k: f64,
    pub c: f64,
}

pub const DEFAULT_C: f64 = 8.0;

impl TruncationParams {
    pub fn new(radius: f64, k: f64, c: f64) -> Result<Self> {
        if !(radius > 0.0 && k > 0.0 && c >= 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "truncation needs R > 0, K > 0, C >= 1 (got R={radius}, K={k}, C={c})"
            )));
        }
        Ok(TruncationParams { radius, k, c })
    }

    /// Frequency cut-off `C·K` of `P_{≤CK}`.
    pub fn frequency(&self) -> f64 {
        self.c * self.k
    }
}

/// `χ(|x|/R)` sampled on the grid.
pub fn chi_weight(grid: &Grid, radius: f64) -> Vec<f64> {
    grid.positions()
        .map(|p| chi_bump((p[0] * p[0] + p[1] * p[1]).sqrt() / radius))
        .collect()
}

// Radial profile `h` with `a(x) = ψ(x/R) x = R h(|x|/R) x̂`.
// h(ρ) = ρ on ρ ≤ 1, h' = 1 − S(ρ − 1) on [1, 2] with S the C³ smootherstep,
// h ≡ 3/2 beyond. `f = ∫ a` is convex, ∂_k a_j is positive semidefinite and
// ψ(x) = h(|x|)/|x| ≤ 3/(2|x|).
fn h_derivs(rho: f64) -> [f64; 4] {
    if rho <= 1.0 {
        return [rho, 1.0, 0.0, 0.0];
    }
    if rho >= 2.0 {
        return [1.5, 0.0, 0.0, 0.0];
    }
    let z = rho - 1.0;
    let z2 = z * z;
    let z3 = z2 * z;
    let z4 = z3 * z;
    let s = z4 * (35.0 - 84.0 * z + 70.0 * z2 - 20.0 * z3);
    let s1 = z3 * (140.0 - 420.0 * z + 420.0 * z2 - 140.0 * z3);
    let s2 = z2 * (420.0 - 1680.0 * z + 2100.0 * z2 - 840.0 * z3);
    let integral = z4 * z * (7.0 - 14.0 * z + 10.0 * z2 - 2.5 * z3);
    [rho - integral, 1.0 - s, -s1, -s2]
}

/// The Virial/Morawetz weight `a(x) = ψ(x/R)·x` and the derivatives of it that
/// the Morawetz identity consumes, all closed-form.
#[derive(Clone, Debug)]
pub struct VirialWeight {
    pub radius: f64,
    /// `a_j` per axis.
    pub a: Vec<Vec<f64>>,
    /// `∂_k a_j`, indexed `[j][k]`.
    pub jacobian: Vec<Vec<Vec<f64>>>,
    /// `div a`.
    pub divergence: Vec<f64>,
    /// `Δ div a`.
    pub lap_divergence: Vec<f64>,
    /// `ψ(x/R)`.
    pub psi: Vec<f64>,
}

impl VirialWeight {
    pub fn new(grid: &Grid, radius: f64) -> Self {
        let d = grid.dim() as usize;
        let n = grid.len();
        let mut a = vec![vec![0.0; n]; d];
        let mut jacobian = vec![vec![vec![0.0; n]; d]; d];
        let mut divergence = vec![0.0; n];
        let mut lap_divergence = vec![0.0; n];
        let mut psi = vec![0.0; n];
        let r2 = radius * radius;
        for (i, p) in grid.positions().enumerate() {
            let x = &p[..d];
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rho = r / radius;
            let [h, h1, h2, h3] = h_derivs(rho);
            if rho <= 1.0 {
                for j in 0..d {
                    a[j][i] = x[j];
                    jacobian[j][j][i] = 1.0;
                }
                divergence[i] = d as f64;
                psi[i] = 1.0;
                continue;
            }
            let hr = h / rho;
            psi[i] = hr;
            for j in 0..d {
                let xj = x[j] / r;
                a[j][i] = radius * h * xj;
                for k in 0..d {
                    let xk = x[k] / r;
                    let delta = if j == k { 1.0 } else { 0.0 };
                    jacobian[j][k][i] = h1 * xj * xk + hr * (delta - xj * xk);
                }
            }
            if d == 1 {
                divergence[i] = h1;
                lap_divergence[i] = h3 / r2;
            } else {
                let phi1 = h2 + h1 / rho - h / (rho * rho);
                let phi2 = h3 + h2 / rho - 2.0 * h1 / (rho * rho) + 2.0 * h / (rho * rho * rho);
                divergence[i] = h1 + hr;
                lap_divergence[i] = (phi2 + phi1 / rho) / r2;
            }
        }
        VirialWeight {
            radius,
            a,
            jacobian,
            divergence,
            lap_divergence,
            psi,
        }
    }

    /// Smallest eigenvalue of the symmetric part of `∂_k a_j` over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.a.len();
        let n = self.divergence.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let ev = if d == 1 {
                self.jacobian[0][0][i]
            } else {
                let a = self.jacobian[0][0][i];
                let c = self.jacobian[1][1][i];
                let b = 0.5 * (self.jacobian[0][1][i] + self.jacobian[1][0][i]);
                let mean = 0.5 * (a + c);
                let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                mean - disc
            };
            best = best.min(ev);
        }
        best
    }

    /// `sup |a(x)|` over the grid.
    pub fn sup_norm(&self) -> f64 {
        let n = self.divergence.len();
        (0..n)
            .map(|i| self.a.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bumps_have_the_right_plateaus() {
        assert_eq!(lp_bump(0.5), 1.0);
        assert_eq!(lp_bump(1.0), 1.0);
        assert_eq!(lp_bump(2.0), 0.0);
        assert!(lp_bump(1.5) > 0.0 && lp_bump(1.5) < 1.0);
        assert_eq!(chi_bump(0.9), 1.0);
        assert_eq!(chi_bump(1.0), 0.0);
        for i in 0..=200 {
            let v = chi_bump(i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn profile_h_is_continuous_and_monotone() {
        let mut prev = 0.0;
        for i in 0..=3000 {
            let rho = i as f64 / 1000.0;
            let [h, h1, _, _] = h_derivs(rho);
            assert!(h1 >= -1e-15);
            assert!(h >= prev - 1e-15);
            prev = h;
        }
        let below = h_derivs(2.0 - 1e-9)[0];
        assert!((below - 1.5).abs() < 1e-8);
    }

    #[test]
    fn h_derivatives_match_finite_differences() {
        let eps = 1e-6;
        for &rho in &[1.1, 1.37, 1.8] {
            let d = h_derivs(rho);
            let p = h_derivs(rho + eps);
            let m = h_derivs(rho - eps);
            for k in 0..3 {
                let fd = (p[k] - m[k]) / (2.0 * eps);
                assert!((fd - d[k + 1]).abs() < 1e-6, "rho={rho} k={k}");
            }
        }
    }

    #[test]
    fn virial_weight_is_semidefinite() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 40.0, 64).unwrap();
            let w = VirialWeight::new(&g, 4.0);
            assert!(w.min_eigenvalue() >= -1e-10);
            assert!(w.sup_norm() <= 1.5 * 4.0 + 1e-12);
        }
    }

    #[test]
    fn truncation_params_validate() {
        assert!(TruncationParams::new(1.0, 1.0, 0.5).is_err());
        assert!(TruncationParams::new(0.0, 1.0, 8.0).is_err());
        assert_eq!(TruncationParams::new(2.0, 3.0, 8.0).unwrap().frequency(), 24.0);
    }
}
