use crate::error::{LabError, Result};
use crate::spectral::snapshot::Snapshot;

/// Space-time exponent `2(d+2)/d`.
pub fn strichartz_exponent(dim: u32) -> f64 {
    2.0 * (dim as f64 + 2.0) / dim as f64
}

/// `‖u‖_{L^q_{t,x}}`, `q = 2(d+2)/d`, with trapezoid quadrature in time over
/// the recorded snapshots.
pub fn strichartz_norm(snapshots: &[Snapshot]) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(LabError::InsufficientData(format!(
            "Strichartz norm needs at least 2 snapshots, got {}",
            snapshots.len()
        )));
    }
    let q = strichartz_exponent(snapshots[0].field.grid().dim());
    let slice: Vec<f64> = snapshots.iter().map(|s| s.field.lp_norm(q).powf(q)).collect();
    let mut total = 0.0;
    for w in 1..snapshots.len() {
        let dt = snapshots[w].t - snapshots[w - 1].t;
        if !(dt > 0.0) {
            return Err(LabError::InvalidParameter("snapshot times must increase".into()));
        }
        total += 0.5 * dt * (slice[w] + slice[w - 1]);
    }
    Ok(total.powf(1.0 / q))
}
