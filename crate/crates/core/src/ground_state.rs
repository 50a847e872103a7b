//! Ground state `Q`: the positive decaying solution of `-ΔQ + Q = Q^{1+4/d}`.

use num_complex::Complex64;

use crate::diagnostics;
use crate::error::{LabError, Result};
use crate::spectral::{Field, Grid, RadialProfile};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// `‖∇Q‖₂²` in d = 1, where `‖Q‖₂² = √3·π/2` and `‖∇Q‖₂² = ‖Q‖₂²/2`.
pub const GRAD_NORM_SQ_1D: f64 = 1.360_349_523_175_663_4;

/// `‖∇Q‖₂² = ‖Q‖₂²` in d = 2 (the Townes mass), as produced by
/// [`solve_ground_state`] on the default grid.
pub const GRAD_NORM_SQ_2D: f64 = 11.700_896_524_2;

/// Reference `‖∇Q‖₂²` for the focusing scale `λ = ‖∇Q‖₂/‖∇u‖₂`.
pub fn reference_grad_norm_sq(dim: u32) -> f64 {
    if dim == 1 {
        GRAD_NORM_SQ_1D
    } else {
        GRAD_NORM_SQ_2D
    }
}

/// Exponent `p = 1 + 4/d` of the nonlinearity.
pub fn nonlinearity_power(dim: u32) -> f64 {
    1.0 + 4.0 / dim as f64
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub field: Field,
    pub dim: u32,
    pub mass: f64,
    pub gradient_norm_sq: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl GroundState {
    /// Wraps an already computed profile (e.g. one read from a snapshot).
    pub fn from_field(field: Field, iterations: usize) -> Self {
        let dim = field.grid().dim();
        GroundState {
            dim,
            mass: field.mass(),
            gradient_norm_sq: field.gradient_norm_sq(),
            residual: residual(&field),
            field,
            iterations,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn peak(&self) -> f64 {
        self.field.lp_norm(f64::INFINITY)
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass.sqrt()
    }

    pub fn energy(&self) -> f64 {
        diagnostics::energy(&self.field)
    }

    pub fn profile(&self) -> Result<RadialProfile> {
        RadialProfile::new(&self.field)
    }

    /// Checks positivity on the resolved support, symmetry about the centre,
    /// radial monotonicity along the axes and the residual bound.
    pub fn check_invariants(&self) -> Result<()> {
        let grid = self.grid();
        let n = grid.points();
        let c = grid.center_index();
        let peak = self.peak();
        let q = |i: usize, j: usize| -> f64 {
            match grid.dim() {
                1 => self.field.samples()[i].re,
                _ => self.field.samples()[i * n + j].re,
            }
        };
        for z in self.field.samples() {
            if z.re.abs() > 1e-12 * peak && z.re <= 0.0 {
                return Err(LabError::InvalidParameter("ground state not positive".into()));
            }
        }
        for m in 1..c {
            let (a, b) = match grid.dim() {
                1 => (q(c + m, 0), q(c - m, 0)),
                _ => (q(c, c + m), q(c - m, c)),
            };
            if (a - b).abs() > 1e-10 {
                return Err(LabError::InvalidParameter(format!("ground state not symmetric at offset {m}")));
            }
            let prev = match grid.dim() {
                1 => q(c + m - 1, 0),
                _ => q(c, c + m - 1),
            };
            if a > prev + 1e-12 {
                return Err(LabError::InvalidParameter(format!("ground state increases at offset {m}")));
            }
        }
        if self.residual >= 1e-9 {
            return Err(LabError::InvalidParameter(format!("residual {:e} too large", self.residual)));
        }
        Ok(())
    }
}

/// `sup |−ΔQ + Q − Q^{1+4/d}|` under the spectral Laplacian.
pub fn residual(q: &Field) -> f64 {
    let p = nonlinearity_power(q.grid().dim());
    let lap = q.laplacian();
    q.samples()
        .iter()
        .zip(lap.samples())
        .map(|(v, l)| (-l + v - v * v.norm().powf(p - 1.0)).norm())
        .fold(0.0, f64::max)
}

/// Samples `Q(x) = 3^{1/4} sech^{1/2}(2x)`, the d = 1 ground state, centred in the box.
pub fn closed_form_q_1d(grid: &Grid) -> Result<GroundState> {
    if grid.dim() != 1 {
        return Err(LabError::Dimension {
            expected: 1,
            actual: grid.dim(),
        });
    }
    let amp = 3f64.powf(0.25);
    let field = Field::from_fn(grid, |p| Complex64::new(amp / (2.0 * p[0]).cosh().sqrt(), 0.0));
    Ok(GroundState::from_field(field, 0))
}

/// Grid points per axis of [`reference_ground_state`].
pub fn reference_points(dim: u32) -> usize {
    if dim == 1 {
        1024
    } else {
        512
    }
}

/// `Q` on the default box: the closed form in 1D, the iteration in 2D.
pub fn reference_ground_state(dim: u32) -> Result<GroundState> {
    let grid = Grid::default_for(dim, reference_points(dim))?;
    if dim == 1 {
        closed_form_q_1d(&grid)
    } else {
        solve_ground_state(&grid, DEFAULT_TOL)
    }
}

/// Samples `Q`'s radial profile on another grid (zero beyond `Q`'s box).
pub fn place_on(q: &GroundState, grid: &Grid) -> Result<Field> {
    if q.dim != grid.dim() {
        return Err(LabError::Dimension {
            expected: q.dim,
            actual: grid.dim(),
        });
    }
    if q.grid().same_as(grid) {
        return Ok(q.field.clone());
    }
    let profile = q.profile()?;
    let reach = 0.5 * q.grid().extent();
    Ok(Field::from_fn(grid, |p| {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        Complex64::new(if r < reach { profile.value(r) } else { 0.0 }, 0.0)
    }))
}

/// Positive Gaussian `A e^{-|x|²/w²}` centred in the box, used to seed the iteration.
pub fn gaussian_seed(grid: &Grid, amplitude: f64, width: f64) -> Field {
    Field::from_fn(grid, |p| {
        Complex64::new(amplitude * (-(p[0] * p[0] + p[1] * p[1]) / (width * width)).exp(), 0.0)
    })
}

pub fn solve_ground_state(grid: &Grid, tol: f64) -> Result<GroundState> {
    solve_ground_state_from(&gaussian_seed(grid, 1.0, 1.0), tol, DEFAULT_MAX_ITER)
}

/// Spectral renormalization: iterate
/// `v ← S(v)^{p/(p-1)} (1−Δ)^{-1} v^p`, `S(v) = ⟨(1−Δ)v, v⟩ / ⟨v^p, v⟩`,
/// until successive iterates differ by less than `tol` in L².
///
/// The Rayleigh factor `S` removes the unstable direction along `v` itself;
/// no damping is applied.
pub fn solve_ground_state_from(seed: &Field, tol: f64, max_iter: usize) -> Result<GroundState> {
    let grid = seed.grid().clone();
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(LabError::InvalidParameter(format!("tol must lie in (0, 1e-6], got {tol}")));
    }
    let p = nonlinearity_power(grid.dim());
    let gamma = p / (p - 1.0);
    let k2 = grid.k2().to_vec();
    let mut v = seed.map(|z| Complex64::new(z.re, 0.0));
    let mut last_update = f64::INFINITY;
    for it in 1..=max_iter {
        let vp = v.map(|z| Complex64::new(z.re.abs().powf(p - 1.0) * z.re, 0.0));
        let vh = v.forward();
        let nh = vp.forward();
        let mut num = 0.0;
        let mut den = 0.0;
        for ((a, b), k) in vh.coefficients().iter().zip(nh.coefficients()).zip(&k2) {
            num += (1.0 + k) * a.norm_sqr();
            den += (b * a.conj()).re;
        }
        if !(den > 0.0) {
            return Err(LabError::ConvergenceFailure {
                iterations: it,
                last_update,
            });
        }
        let factor = (num / den).powf(gamma);
        let mut next = nh;
        for (c, k) in next.coefficients_mut().iter_mut().zip(&k2) {
            *c *= factor / (1.0 + k);
        }
        let next = next.inverse().map(|z| Complex64::new(z.re, 0.0));
        last_update = next.l2_distance(&v)?;
        v = next;
        if !last_update.is_finite() {
            break;
        }
        if last_update < tol {
            return Ok(GroundState::from_field(v, it));
        }
    }
    Err(LabError::ConvergenceFailure {
        iterations: max_iter,
        last_update,
    })
}
