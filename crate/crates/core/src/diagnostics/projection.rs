use serde::{Deserialize, Serialize};

use super::cutoff::lp_bump;
use crate::spectral::Field;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Low,
    High,
}

/// Littlewood–Paley projection: `P_{<N}` has multiplier `ψ(ξ/N)` with `ψ ≡ 1`
/// on `|ξ| ≤ N` and `ψ ≡ 0` on `|ξ| ≥ 2N`; `P_{>N} = 1 − P_{<N}`.
pub fn lp_project(u: &Field, cutoff: f64, side: Side) -> Field {
    assert!(cutoff > 0.0, "projection cut-off must be positive");
    let low = u.forward().apply_multiplier(|k2, _| lp_bump(k2.sqrt() / cutoff)).inverse();
    match side {
        Side::Low => low,
        Side::High => u.sub(&low).expect("same grid"),
    }
}
