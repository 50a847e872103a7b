//! Conserved quantities, the energy tensor, Virial and Morawetz functionals,
//! sharp Gagliardo–Nirenberg, Littlewood–Paley projections and the Strichartz
//! norm.
//!
//! All functionals use the same spectral quadrature as the solver, so drifts
//! measured here are drifts of the integrator and not of the bookkeeping.

pub mod cutoff;
mod gn;
mod morawetz;
mod projection;
mod strichartz;
mod tensor;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use cutoff::{Cutoff, CutoffKind, TruncationParams, VirialWeight};
pub use gn::{sharp_gn_defect, sharp_gn_defect_printed_form};
pub use morawetz::{
    commutator_error, morawetz_action, morawetz_terms, truncated_energy, truncated_energy_ratio,
    truncated_field, MorawetzTerms,
};
pub use projection::{lp_project, Side};
pub use strichartz::{strichartz_exponent, strichartz_norm};
pub use tensor::{energy_tensor, EnergyTensor};

use crate::error::{LabError, Result};
use crate::ground_state::nonlinearity_power;
use crate::evolution::TrajectoryRecord;
use crate::spectral::Field;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedSet {
    pub mass: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
}

/// `int |u|^{2+4/d}`.
pub fn potential_integral(u: &Field) -> f64 {
    let p = nonlinearity_power(u.grid().dim());
    u.grid().cell_volume() * u.samples().iter().map(|z| z.norm_sqr().powf(0.5 * (p + 1.0))).sum::<f64>()
}

/// `E(u) = ½∫|∇u|² − 1/(2+4/d) ∫|u|^{2+4/d}`.
pub fn energy(u: &Field) -> f64 {
    let p = nonlinearity_power(u.grid().dim());
    0.5 * u.gradient_norm_sq() - potential_integral(u) / (p + 1.0)
}

/// Energy with the nonlinear term dropped.
pub fn free_energy(u: &Field) -> f64 {
    0.5 * u.gradient_norm_sq()
}

/// `P(u) = Im ∫ ∇u · ū`, one entry per axis.
pub fn momentum(u: &Field) -> Vec<f64> {
    let dv = u.grid().cell_volume();
    u.gradient()
        .iter()
        .map(|g| dv * g.samples().iter().zip(u.samples()).map(|(a, b)| (a * b.conj()).im).sum::<f64>())
        .collect()
}

pub fn conserved(u: &Field) -> ConservedSet {
    ConservedSet {
        mass: u.mass(),
        energy: energy(u),
        momentum: momentum(u),
    }
}

/// `∫|x|²|u|²` about the box centre.
pub fn variance(u: &Field) -> f64 {
    let dv = u.grid().cell_volume();
    dv * u
        .grid()
        .positions()
        .zip(u.samples())
        .map(|(p, z)| (p[0] * p[0] + p[1] * p[1]) * z.norm_sqr())
        .sum::<f64>()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VirialReport {
    /// `(t, ∂_tt V)` at every interior sample.
    pub second_derivative: Vec<(f64, f64)>,
    pub expected: f64,
    pub max_relative_defect: f64,
}

/// Compares the three-point second difference of the variance series against
/// `16 E`.
pub fn virial_check(times: &[f64], variances: &[f64], energy: f64) -> Result<VirialReport> {
    if times.len() != variances.len() {
        return Err(LabError::InvalidParameter("times and variances differ in length".into()));
    }
    if times.len() < 3 {
        return Err(LabError::InsufficientData(format!(
            "virial check needs at least 3 samples, got {}",
            times.len()
        )));
    }
    let expected = 16.0 * energy;
    let mut second_derivative = Vec::with_capacity(times.len() - 2);
    let mut max_relative_defect: f64 = 0.0;
    for w in 1..times.len() - 1 {
        let h1 = times[w] - times[w - 1];
        let h2 = times[w + 1] - times[w];
        if !(h1 > 0.0 && h2 > 0.0) {
            return Err(LabError::InvalidParameter("times must increase strictly".into()));
        }
        let dd = 2.0 * ((variances[w + 1] - variances[w]) / h2 - (variances[w] - variances[w - 1]) / h1)
            / (h1 + h2);
        second_derivative.push((times[w], dd));
        max_relative_defect = max_relative_defect.max((dd - expected).abs() / expected.abs());
    }
    Ok(VirialReport {
        second_derivative,
        expected,
        max_relative_defect,
    })
}

/// Virial check over a recorded trajectory, using its row cadence and the
/// energy of the first row.
pub fn virial_check_trajectory(traj: &TrajectoryRecord) -> Result<VirialReport> {
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    let variances: Vec<f64> = traj.rows.iter().map(|r| r.variance).collect();
    let energy = traj
        .rows
        .first()
        .ok_or_else(|| LabError::InsufficientData("empty trajectory".into()))?
        .energy;
    virial_check(&times, &variances, energy)
}

/// `F(v) = −|v|^{4/d} v`.
pub fn nonlinearity(v: &Field) -> Field {
    let p = nonlinearity_power(v.grid().dim());
    v.map(|z| -z * z.norm_sqr().powf(0.5 * (p - 1.0)))
}

pub fn phase(u: &Field, theta: f64) -> Field {
    u.scale(Complex64::from_polar(1.0, theta))
}
