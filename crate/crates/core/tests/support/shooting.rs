//! Radial shooting for `Q'' + Q'/r − Q + Q³ = 0`, `Q'(0) = 0`: bisect on
//! `Q(0)` between undershoot (Q turns back up) and overshoot (Q crosses 0),
//! then integrate `2π ∫ Q² r dr` along the converged trajectory.

const H: f64 = 5e-4;
const R_MAX: f64 = 16.0;

fn rhs(r: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -y[1] / r + y[0] - y[0].powi(3)]
}

pub enum Outcome {
    Overshoot,
    Undershoot,
    Reached,
}

/// Integrates from the series start at `r = H`; returns the outcome and
/// the mass accumulated while the trajectory stayed positive and decreasing.
pub fn shoot(a: f64) -> (Outcome, f64) {
    let mut r = H;
    // Q = a + c r² + …, with 4c = a − a³.
    let c = 0.25 * (a - a * a * a);
    let mut y = [a + c * H * H, 2.0 * c * H];
    let mut mass = 2.0 * std::f64::consts::PI * 0.5 * H * H * a * a;
    while r < R_MAX {
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * H, [y[0] + 0.5 * H * k1[0], y[1] + 0.5 * H * k1[1]]);
        let k3 = rhs(r + 0.5 * H, [y[0] + 0.5 * H * k2[0], y[1] + 0.5 * H * k2[1]]);
        let k4 = rhs(r + H, [y[0] + H * k3[0], y[1] + H * k3[1]]);
        let next = [
            y[0] + H / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + H / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if next[0] < 0.0 {
            return (Outcome::Overshoot, mass);
        }
        if next[1] > 0.0 {
            return (Outcome::Undershoot, mass);
        }
        // Simpson-free trapezoid is enough at this step size.
        mass += std::f64::consts::PI * H * (y[0] * y[0] * r + next[0] * next[0] * (r + H));
        y = next;
        r += H;
    }
    (Outcome::Reached, mass)
}

pub fn townes() -> (f64, f64) {
    let (mut lo, mut hi) = (1.5, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match shoot(mid).0 {
            Outcome::Overshoot => hi = mid,
            Outcome::Undershoot => lo = mid,
            Outcome::Reached => return (mid, shoot(mid).1),
        }
    }
    // The trajectories straddling the separatrix agree to far below the
    // tolerance over the region carrying the mass.
    let (a, b) = (shoot(lo).1, shoot(hi).1);
    (0.5 * (lo + hi), a.max(b))
}
