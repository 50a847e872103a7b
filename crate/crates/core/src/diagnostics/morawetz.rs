use serde::{Deserialize, Serialize};

use super::cutoff::{chi_weight, Cutoff, CutoffKind, TruncationParams, VirialWeight};
use super::projection::{lp_project, Side};
use super::{energy, nonlinearity};
use crate::error::{LabError, Result};
use crate::ground_state::nonlinearity_power;
use crate::spectral::Field;

/// `χ(x/R) · P_{≤CK} u`.
pub fn truncated_field(u: &Field, trunc: &TruncationParams) -> Field {
    let low = lp_project(u, trunc.frequency(), Side::Low);
    low.weighted(&chi_weight(u.grid(), trunc.radius))
}

/// `E(χ(x/R) P_{≤CK} u)`.
pub fn truncated_energy(u: &Field, trunc: &TruncationParams) -> f64 {
    energy(&truncated_field(u, trunc))
}

/// `E(χ P u) / ‖∇(χ P u)‖₂²`; zero for the zero field.
pub fn truncated_energy_ratio(u: &Field, trunc: &TruncationParams) -> f64 {
    let v = truncated_field(u, trunc);
    let g = v.gradient_norm_sq();
    if g == 0.0 {
        0.0
    } else {
        energy(&v) / g
    }
}

/// `‖I F(u) − F(I u)‖₂` with `I = P_{≤CK}`.
pub fn commutator_error(u: &Field, trunc: &TruncationParams) -> f64 {
    commutator(u, trunc).l2_norm()
}

fn commutator(u: &Field, trunc: &TruncationParams) -> Field {
    let n = trunc.frequency();
    let a = lp_project(&nonlinearity(u), n, Side::Low);
    let b = nonlinearity(&lp_project(u, n, Side::Low));
    a.sub(&b).expect("same grid")
}

fn require_virial(cut: &Cutoff) -> Result<()> {
    if cut.kind != CutoffKind::PsiVirial {
        return Err(LabError::InvalidParameter("Morawetz action needs the psi_virial cut-off".into()));
    }
    if !(cut.radius > 0.0) {
        return Err(LabError::InvalidParameter("cut-off radius must be positive".into()));
    }
    Ok(())
}

/// `M = ∫ ψ(x/R) x_j Im(∂_j(Iu) · conj(Iu))`, `I = P_{≤CK}`.
pub fn morawetz_action(u: &Field, cut: &Cutoff, trunc: &TruncationParams) -> Result<f64> {
    require_virial(cut)?;
    let weight = VirialWeight::new(u.grid(), cut.radius);
    let v = lp_project(u, trunc.frequency(), Side::Low);
    Ok(action_of(&v, &weight))
}

fn action_of(v: &Field, weight: &VirialWeight) -> f64 {
    let dv = v.grid().cell_volume();
    v.gradient()
        .iter()
        .zip(&weight.a)
        .map(|(g, a)| {
            g.samples()
                .iter()
                .zip(v.samples())
                .zip(a)
                .map(|((gj, vv), aj)| aj * (gj * vv.conj()).im)
                .sum::<f64>()
        })
        .sum::<f64>()
        * dv
}

/// Pieces of `dM/dt` for `v = Iu`.
///
/// `main = ½ ∫ ∂_k a_j T_jk(v)` is the derivative `v` would give if it solved
/// the equation exactly; it splits as `interior + e2 + e3`, where
/// `interior = 4 ∫_{|x|≤R} (½|∇v|² − |v|^{p+1}/(p+1))`,
/// `e2 = −½ ∫ Δ(div a) |v|²` and `e3` collects the `|x| > R` part of the
/// gradient and potential terms. `e1` is the contribution of the commutator
/// `IF(u) − F(Iu)` so that `dM/dt = main + e1` along exact solutions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MorawetzTerms {
    pub action: f64,
    pub main: f64,
    pub interior: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

pub fn morawetz_terms(u: &Field, cut: &Cutoff, trunc: &TruncationParams) -> Result<MorawetzTerms> {
    require_virial(cut)?;
    let grid = u.grid();
    let d = grid.dim() as usize;
    let p = nonlinearity_power(grid.dim());
    let dv = grid.cell_volume();
    let weight = VirialWeight::new(grid, cut.radius);
    let v = lp_project(u, trunc.frequency(), Side::Low);
    let grad = v.gradient();
    let err = commutator(u, trunc);
    let r2 = cut.radius * cut.radius;

    let mut interior = 0.0;
    let mut e2 = 0.0;
    let mut e3 = 0.0;
    let mut main = 0.0;
    let mut e1 = 0.0;
    let pot_coeff = (p - 1.0) / (p + 1.0);
    for (i, pos) in grid.positions().enumerate() {
        let vv = v.samples()[i];
        let dens = vv.norm_sqr();
        let pot = dens.powf(0.5 * (p + 1.0));
        let mut grad_term = 0.0;
        for j in 0..d {
            for k in 0..d {
                grad_term += 2.0 * weight.jacobian[j][k][i] * (grad[j].samples()[i].conj() * grad[k].samples()[i]).re;
            }
        }
        let pot_term = weight.divergence[i] * pot_coeff * pot;
        let lap_term = -0.5 * weight.lap_divergence[i] * dens;
        main += grad_term - pot_term + lap_term;
        e2 += lap_term;
        if pos[0] * pos[0] + pos[1] * pos[1] <= r2 {
            let g2: f64 = (0..d).map(|j| grad[j].samples()[i].norm_sqr()).sum();
            interior += 4.0 * (0.5 * g2 - pot / (p + 1.0));
        } else {
            e3 += grad_term - pot_term;
        }
        let e = err.samples()[i];
        let mut local = weight.divergence[i] * (e * vv.conj()).re;
        for j in 0..d {
            local += 2.0 * weight.a[j][i] * (e * grad[j].samples()[i].conj()).re;
        }
        e1 += local;
    }
    Ok(MorawetzTerms {
        action: action_of(&v, &weight),
        main: main * dv,
        interior: interior * dv,
        e1: e1 * dv,
        e2: e2 * dv,
        e3: e3 * dv,
    })
}
