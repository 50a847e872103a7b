use super::energy;
use crate::spectral::Field;

/// `E(u) − ½‖∇u‖₂² [1 − (‖u‖₂/‖Q‖₂)^{4/d}]`, non-negative by the sharp
/// Gagliardo–Nirenberg inequality. `qmass` is `‖Q‖₂²`.
pub fn sharp_gn_defect(u: &Field, qmass: f64) -> f64 {
    let d = u.grid().dim() as f64;
    let ratio = (u.mass() / qmass).powf(2.0 / d);
    energy(u) - 0.5 * u.gradient_norm_sq() * (1.0 - ratio)
}

/// Same defect with the bracket `[1 − (1 − ‖u‖₂²/‖Q‖₂²)^{4/d}]`.
///
/// Kept for side-by-side comparison with [`sharp_gn_defect`]; this form is not
/// a valid lower bound near the threshold mass.
pub fn sharp_gn_defect_printed_form(u: &Field, qmass: f64) -> f64 {
    let d = u.grid().dim() as f64;
    let bracket = 1.0 - (1.0 - u.mass() / qmass).powf(4.0 / d);
    energy(u) - 0.5 * u.gradient_norm_sq() * bracket
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::closed_form_q_1d;
    use crate::spectral::Grid;

    #[test]
    fn equality_at_ground_state() {
        let q = closed_form_q_1d(&Grid::new(1, 60.0, 1024).unwrap()).unwrap();
        let defect = sharp_gn_defect(&q.field, q.mass);
        assert!(defect.abs() < 1e-6 * q.gradient_norm_sq);
    }

    #[test]
    fn multiples_of_q_are_extremizers() {
        let q = closed_form_q_1d(&Grid::new(1, 60.0, 1024).unwrap()).unwrap();
        let u = q.field.scale_real(0.9);
        assert!((u.mass() - 0.81 * q.mass).abs() < 1e-12);
        assert!(sharp_gn_defect(&u, q.mass).abs() < 1e-6 * q.gradient_norm_sq);
    }

    #[test]
    fn gaussian_has_positive_defect() {
        let g = Grid::new(1, 60.0, 1024).unwrap();
        let q = closed_form_q_1d(&g).unwrap();
        let u = Field::from_fn(&g, |p| num_complex::Complex64::new(1.2 * (-p[0] * p[0]).exp(), 0.0));
        assert!(sharp_gn_defect(&u, q.mass) > 1e-3);
    }
}
