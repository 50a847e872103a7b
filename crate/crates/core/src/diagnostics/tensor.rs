use crate::ground_state::nonlinearity_power;
use crate::spectral::Field;

/// Components of the energy tensor, each sampled on the field's grid.
///
/// With `p = 1 + 4/d`:
/// `T00 = |u|²`, `T0j = 2 Im(u_j ū)`,
/// `Tjk = 4 Re(ū_j u_k) − δ_jk Δ|u|² − 2 (p−1)/(p+1) |u|^{p+1} δ_jk`.
#[derive(Clone, Debug)]
pub struct EnergyTensor {
    pub t00: Vec<f64>,
    pub t0j: Vec<Vec<f64>>,
    pub tjk: Vec<Vec<Vec<f64>>>,
}

pub fn energy_tensor(u: &Field) -> EnergyTensor {
    let grid = u.grid();
    let d = grid.dim() as usize;
    let p = nonlinearity_power(grid.dim());
    let grad = u.gradient();
    let t00 = u.modulus_sq();
    let t0j = grad
        .iter()
        .map(|g| g.samples().iter().zip(u.samples()).map(|(a, b)| 2.0 * (a * b.conj()).im).collect())
        .collect();
    let dens = Field::from_real(grid, &t00).expect("same grid");
    let lap_dens: Vec<f64> = dens.laplacian().samples().iter().map(|z| z.re).collect();
    let pressure: Vec<f64> = t00
        .iter()
        .map(|m| 2.0 * (p - 1.0) / (p + 1.0) * m.powf(0.5 * (p + 1.0)))
        .collect();
    let mut tjk = vec![vec![Vec::new(); d]; d];
    for j in 0..d {
        for k in 0..d {
            let mut comp: Vec<f64> = grad[j]
                .samples()
                .iter()
                .zip(grad[k].samples())
                .map(|(a, b)| 4.0 * (a.conj() * b).re)
                .collect();
            if j == k {
                for (c, (l, pr)) in comp.iter_mut().zip(lap_dens.iter().zip(&pressure)) {
                    *c -= l + pr;
                }
            }
            tjk[j][k] = comp;
        }
    }
    EnergyTensor { t00, t0j, tjk }
}
