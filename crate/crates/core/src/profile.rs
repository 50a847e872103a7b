//! Fitting rescaled ground states to fields, mass concentration, and greedy
//! multi-bubble extraction.
//!
//! A bubble with parameters `(λ, γ, x0)` is `e^{iγ} Q_{λ,x0}` where
//! `Q_{λ,x0}(x) = λ^{−d/2} Q((x − x0)/λ)`. For fixed `(λ, x0)` the best phase is
//! `γ = arg⟨u, Q_{λ,x0}⟩` and the squared distance
//! `‖λ^{d/2} u(λ· + x0) e^{−iγ} − Q‖₂²` equals
//! `‖u‖₂² + ‖Q‖₂² − 2|⟨u, Q_{λ,x0}⟩|`, so the fit maximises the overlap
//! modulus over `(λ, x0)` by coordinate ascent.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::evolution::TrajectoryRecord;
use crate::ground_state::GroundState;
use crate::spectral::snapshot::Snapshot;
use crate::spectral::{Field, Grid, RadialProfile, Resampler};
use crate::symmetry::{apply_group, GroupElement};

pub const MAX_SWEEPS: usize = 200;
pub const PARAM_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct BubbleFit {
    pub lambda: f64,
    pub gamma: f64,
    pub x0: [f64; 2],
    /// `‖λ^{d/2} u(λ· + x0) e^{−iγ} − Q‖₂`, measured on `Q`'s grid.
    pub distance: f64,
    /// The field whose norm is `distance`, on `Q`'s grid.
    pub residual: Field,
    /// Mass of the orthogonal projection of `u` onto `Q_{λ,x0}`.
    pub mass: f64,
    pub converged: bool,
    pub sweeps: usize,
}

impl BubbleFit {
    pub fn group_element(&self) -> GroupElement {
        GroupElement {
            x0: self.x0,
            lambda0: self.lambda,
            phase: self.gamma,
            ..GroupElement::identity()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Pin `x0` at the origin.
    pub radial: bool,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            radial: false,
            max_sweeps: MAX_SWEEPS,
            tol: PARAM_TOL,
        }
    }
}

// Overlap ⟨u, Q_{λ,x0}⟩ and its derivatives in (log λ, x0/λ).
struct Overlap<'a> {
    u: &'a Field,
    profile: RadialProfile,
    reach: f64,
}

struct OverlapValue {
    c: Complex64,
    norm_sq: f64,
    // d/d(log λ), then λ·d/dx0_j.
    grad: [Complex64; 3],
}

impl<'a> Overlap<'a> {
    fn new(u: &'a Field, q: &GroundState) -> Result<Self> {
        Ok(Overlap {
            u,
            profile: q.profile()?,
            reach: 0.5 * q.grid().extent(),
        })
    }

    fn eval(&self, lambda: f64, x0: [f64; 2], with_grad: bool) -> OverlapValue {
        let grid = self.u.grid();
        let d = grid.dim() as usize;
        let amp = lambda.powf(-0.5 * d as f64);
        let mut c = Complex64::new(0.0, 0.0);
        let mut norm_sq = 0.0;
        let mut grad = [Complex64::new(0.0, 0.0); 3];
        let limit = self.reach * lambda;
        for (p, z) in grid.positions().zip(self.u.samples()) {
            let dx = p[0] - x0[0];
            if dx.abs() >= limit {
                continue;
            }
            let dy = if d == 2 { p[1] - x0[1] } else { 0.0 };
            if dy.abs() >= limit {
                continue;
            }
            let y = [dx / lambda, dy / lambda];
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            if r >= self.reach {
                continue;
            }
            let q = self.profile.value(r);
            c += z * (amp * q);
            norm_sq += amp * amp * q * q;
            if with_grad {
                let qp = self.profile.slope(r);
                grad[0] += z * (amp * (-0.5 * d as f64 * q - r * qp));
                if r > 0.0 {
                    for j in 0..d {
                        grad[1 + j] += z * (-amp * qp * y[j] / r);
                    }
                }
            }
        }
        let dv = grid.cell_volume();
        OverlapValue {
            c: c * dv,
            norm_sq: norm_sq * dv,
            grad: grad.map(|g| g * dv),
        }
    }

    fn modulus(&self, lambda: f64, x0: [f64; 2]) -> f64 {
        self.eval(lambda, x0, false).c.norm()
    }

    // d log|c|² / d(coordinate).
    fn slope(&self, lambda: f64, x0: [f64; 2], coord: usize) -> f64 {
        let v = self.eval(lambda, x0, true);
        let m = v.c.norm_sqr();
        if m == 0.0 {
            return 0.0;
        }
        2.0 * (v.c.conj() * v.grad[coord]).re / m
    }
}

// Parameters as (log λ, x0); coordinate moves in x0 are measured in units of λ.
fn at(params: &[f64; 3], coord: usize, s: f64) -> (f64, [f64; 2]) {
    let lambda = params[0].exp();
    let mut x0 = [params[1], params[2]];
    match coord {
        0 => (lambda * s.exp(), x0),
        j => {
            x0[j - 1] += lambda * s;
            (lambda, x0)
        }
    }
}

// Root of the slope along one coordinate, starting from offset 0.
fn line_search(ov: &Overlap, params: &[f64; 3], coord: usize) -> f64 {
    let slope = |s: f64| {
        let (l, x) = at(params, coord, s);
        ov.slope(l, x, coord)
    };
    let g0 = slope(0.0);
    if g0 == 0.0 || !g0.is_finite() {
        return 0.0;
    }
    let dir = g0.signum();
    let mut inner = 0.0;
    let mut outer = 0.25 * dir;
    let mut found = false;
    for _ in 0..40 {
        let g = slope(outer);
        if !g.is_finite() {
            break;
        }
        if g * dir <= 0.0 {
            found = true;
            break;
        }
        inner = outer;
        outer *= 2.0;
    }
    if !found {
        return inner;
    }
    let mut conv = SimpleConvergency {
        eps: 1e-13,
        max_iter: 200,
    };
    find_root_brent(inner, outer, slope, &mut conv).unwrap_or(0.5 * (inner + outer))
}

/// Fits `e^{iγ} Q_{λ,x0}` to `u`.
///
/// `λ` starts at `‖∇Q‖₂/‖∇u‖₂` refined over a coarse dyadic scan; `x0` starts
/// at whichever of the `|u|²` centroid and the `|u|²` argmax overlaps better
/// (the origin in radial mode). Coordinate ascent with Brent root-finding on
/// the analytic derivative runs until all parameter updates fall below
/// `opts.tol`; otherwise the best parameters are returned with
/// `converged = false`.
pub fn fit_bubble_with(u: &Field, q: &GroundState, opts: &FitOptions) -> Result<BubbleFit> {
    if u.grid().dim() != q.dim {
        return Err(LabError::Dimension {
            expected: q.dim,
            actual: u.grid().dim(),
        });
    }
    let g2 = u.gradient_norm_sq();
    if u.mass() == 0.0 || g2 == 0.0 {
        return Err(LabError::InvalidParameter("cannot fit a bubble to a constant or zero field".into()));
    }
    let ov = Overlap::new(u, q)?;
    let d = q.dim as usize;

    let lambda_init = (q.gradient_norm_sq / g2).sqrt();
    let centers: Vec<[f64; 2]> = if opts.radial {
        vec![[0.0; 2]]
    } else {
        vec![u.centroid(), u.argmax_position()]
    };
    let mut best = (f64::NEG_INFINITY, lambda_init, [0.0; 2]);
    for x0 in centers {
        for k in -8..=8 {
            let lambda = lambda_init * (0.25 * k as f64).exp2();
            let m = ov.modulus(lambda, x0);
            if m > best.0 {
                best = (m, lambda, x0);
            }
        }
    }
    let mut params = [best.1.ln(), best.2[0], best.2[1]];
    let coords: Vec<usize> = if opts.radial { vec![0] } else { (0..=d).collect() };

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut largest: f64 = 0.0;
        for &coord in &coords {
            let s = line_search(&ov, &params, coord);
            let lambda = params[0].exp();
            let update = if coord == 0 { s.abs() } else { (lambda * s).abs() };
            let (l, x) = at(&params, coord, s);
            params = [l.ln(), x[0], x[1]];
            largest = largest.max(update);
        }
        if largest < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("bubble fit did not converge in {sweeps} sweeps");
    }

    let lambda = params[0].exp();
    let x0 = [params[1], if d == 2 { params[2] } else { 0.0 }];
    let v = ov.eval(lambda, x0, false);
    let gamma = v.c.arg();
    let residual = rescaled(u, lambda, gamma, x0, q.grid())?.sub(&q.field)?;
    Ok(BubbleFit {
        lambda,
        gamma,
        x0,
        distance: residual.l2_norm(),
        residual,
        mass: v.c.norm_sqr() / v.norm_sq,
        converged,
        sweeps,
    })
}

pub fn fit_bubble(u: &Field, q: &GroundState) -> Result<BubbleFit> {
    fit_bubble_with(u, q, &FitOptions::default())
}

/// `λ^{d/2} u(λy + x0) e^{−iγ}` sampled on `target`.
pub fn rescaled(u: &Field, lambda: f64, gamma: f64, x0: [f64; 2], target: &Grid) -> Result<Field> {
    let d = u.grid().dim() as f64;
    let rs = Resampler::new(u)?;
    let amp = Complex64::from_polar(lambda.powf(0.5 * d), -gamma);
    Ok(rs
        .resample_onto(target, |y| [lambda * y[0] + x0[0], lambda * y[1] + x0[1]])
        .scale(amp))
}

/// Ten fixed unit-norm test functions on `q`'s grid: Gaussians of three widths,
/// `Q` itself, two Hermite-type bumps, a shifted Gaussian, a cosine-modulated
/// Gaussian, `sech|x|` and a complex-modulated Gaussian.
pub fn frozen_dictionary(q: &GroundState) -> Vec<Field> {
    let grid = q.grid();
    let gauss = |p: [f64; 2], s: f64| (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * s * s)).exp();
    let raw: Vec<Field> = vec![
        Field::from_fn(grid, |p| Complex64::new(gauss(p, 1.0), 0.0)),
        Field::from_fn(grid, |p| Complex64::new(gauss(p, 0.5), 0.0)),
        Field::from_fn(grid, |p| Complex64::new(gauss(p, 2.0), 0.0)),
        q.field.clone(),
        Field::from_fn(grid, |p| Complex64::new(p[0] * gauss(p, 1.0), 0.0)),
        Field::from_fn(grid, |p| Complex64::new((2.0 * p[0] * p[0] - 1.0) * gauss(p, 1.0), 0.0)),
        Field::from_fn(grid, |p| Complex64::new(gauss([p[0] - 1.0, p[1]], 1.0), 0.0)),
        Field::from_fn(grid, |p| Complex64::new((2.0 * p[0]).cos() * gauss(p, 1.0), 0.0)),
        Field::from_fn(grid, |p| Complex64::new(1.0 / (p[0] * p[0] + p[1] * p[1]).sqrt().cosh(), 0.0)),
        Field::from_fn(grid, |p| Complex64::from_polar(gauss(p, 1.5), p[0])),
    ];
    raw.into_iter().map(|f| f.scale_real(1.0 / f.l2_norm())).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessReport {
    /// `⟨Q, φ⟩` per dictionary entry.
    pub reference: Vec<Complex64>,
    /// `[n][k] = ⟨λ_n^{d/2} u_n(λ_n· + x_n) e^{−iγ_n}, φ_k⟩`.
    pub pairings: Vec<Vec<Complex64>>,
    /// Max over the dictionary of `|pairing − reference|`, per sequence entry.
    pub max_deviation: Vec<f64>,
    pub terminal_max_deviation: f64,
}

/// Pairs each rescaled `u_n` against a fixed dictionary and compares with `Q`.
pub fn weak_limit_witness(
    u_seq: &[Field],
    fits: &[BubbleFit],
    dict: &[Field],
    q: &GroundState,
) -> Result<WitnessReport> {
    if dict.is_empty() {
        return Err(LabError::InvalidParameter("empty test-function dictionary".into()));
    }
    if u_seq.len() != fits.len() {
        return Err(LabError::InvalidParameter("one fit per field is required".into()));
    }
    if u_seq.is_empty() {
        return Err(LabError::InsufficientData("empty field sequence".into()));
    }
    let reference = dict
        .iter()
        .map(|phi| q.field.inner_product(phi))
        .collect::<Result<Vec<_>>>()?;
    let mut pairings = Vec::with_capacity(u_seq.len());
    let mut max_deviation = Vec::with_capacity(u_seq.len());
    for (u, fit) in u_seq.iter().zip(fits) {
        let v = rescaled(u, fit.lambda, fit.gamma, fit.x0, q.grid())?;
        let row = dict.iter().map(|phi| v.inner_product(phi)).collect::<Result<Vec<_>>>()?;
        let dev = row
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        pairings.push(row);
        max_deviation.push(dev);
    }
    Ok(WitnessReport {
        reference,
        terminal_max_deviation: *max_deviation.last().expect("non-empty"),
        pairings,
        max_deviation,
    })
}

/// `∫_{|x − center| ≤ radius} |u|²` over grid cells.
pub fn mass_in_ball(u: &Field, center: [f64; 2], radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(LabError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let grid = u.grid();
    let d = grid.dim() as usize;
    let r2 = radius * radius;
    let sum: f64 = grid
        .positions()
        .zip(u.samples())
        .filter(|(p, _)| (0..d).map(|j| (p[j] - center[j]).powi(2)).sum::<f64>() <= r2)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    Ok(sum * grid.cell_volume())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleRow {
    pub t: f64,
    pub lambda: f64,
    pub distance: Option<f64>,
    pub mass_in_window: Option<f64>,
}

/// Time series of the focusing scale and fit quality.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleSeries {
    pub rows: Vec<ScaleRow>,
    /// `λ` strictly decreasing over the final decade.
    pub lambda_monotone: bool,
    /// Fit distance strictly decreasing over the last five rows that carry one.
    pub distance_monotone: bool,
}

impl ScaleSeries {
    pub fn new(rows: Vec<ScaleRow>) -> Result<Self> {
        for w in rows.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(LabError::InvalidParameter("scale series times must increase strictly".into()));
            }
        }
        if rows.iter().any(|r| !(r.lambda > 0.0 && r.lambda.is_finite())) {
            return Err(LabError::InvalidParameter("scale series needs finite λ > 0".into()));
        }
        let mut s = ScaleSeries {
            rows,
            lambda_monotone: false,
            distance_monotone: false,
        };
        s.lambda_monotone = s.final_decade().windows(2).all(|w| w[1].lambda < w[0].lambda);
        let dists: Vec<f64> = s.rows.iter().filter_map(|r| r.distance).collect();
        s.distance_monotone =
            dists.len() >= 5 && dists[dists.len() - 5..].windows(2).all(|w| w[1] < w[0]);
        Ok(s)
    }

    pub fn from_pairs(t: &[f64], lambda: &[f64]) -> Result<Self> {
        if t.len() != lambda.len() {
            return Err(LabError::InvalidParameter("t and λ differ in length".into()));
        }
        ScaleSeries::new(
            t.iter()
                .zip(lambda)
                .map(|(&t, &lambda)| ScaleRow {
                    t,
                    lambda,
                    distance: None,
                    mass_in_window: None,
                })
                .collect(),
        )
    }

    pub fn from_trajectory(traj: &TrajectoryRecord) -> Result<Self> {
        let t: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
        let l: Vec<f64> = traj.rows.iter().map(|r| r.lambda).collect();
        ScaleSeries::from_pairs(&t, &l)
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    /// Trailing rows with `λ ≤ 10·λ_last`.
    pub fn final_decade(&self) -> &[ScaleRow] {
        let Some(last) = self.rows.last() else {
            return &self.rows;
        };
        let cut = 10.0 * last.lambda;
        let start = self
            .rows
            .iter()
            .rposition(|r| r.lambda > cut)
            .map_or(0, |i| i + 1);
        &self.rows[start..]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub t: f64,
    pub center: [f64; 2],
    pub radius: f64,
    pub mass: f64,
    pub in_final_decade: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationTable {
    pub rows: Vec<ConcentrationRow>,
    pub exponent: f64,
    pub eps: f64,
    pub threshold: f64,
    /// Every final-decade row holds at least `threshold` mass.
    pub flag: bool,
}

/// Default relative shortfall allowed below `‖Q‖₂²`.
pub const CONCENTRATION_TOL: f64 = 0.1;

/// Mass in the window `|x − x_t| ≤ (T − t)^{exponent − eps}` around the
/// `|u|²` argmax for each snapshot. The final decade is the set of snapshots
/// with `T − t ≤ 10 (T − t_last)`.
pub fn concentration_scan(
    snapshots: &[Snapshot],
    t_est: f64,
    exponent: f64,
    eps: f64,
    qmass: f64,
    tol: f64,
) -> Result<ConcentrationTable> {
    if snapshots.len() < 2 {
        return Err(LabError::NotApplicable("concentration scan needs at least two snapshots".into()));
    }
    let last = snapshots.last().expect("non-empty");
    if snapshots.iter().any(|s| s.t >= t_est) {
        return Err(LabError::NotApplicable(format!(
            "snapshot times must precede the blow-up time {t_est}"
        )));
    }
    if last.field.gradient_norm_sq() <= snapshots[0].field.gradient_norm_sq() {
        return Err(LabError::NotApplicable("trajectory is not focusing".into()));
    }
    if !(tol >= 0.0 && tol < 1.0 && qmass > 0.0) {
        return Err(LabError::InvalidParameter("need 0 <= tol < 1 and qmass > 0".into()));
    }
    let power = exponent - eps;
    let horizon = 10.0 * (t_est - last.t);
    let threshold = (1.0 - tol) * qmass;
    let mut rows = Vec::with_capacity(snapshots.len());
    let mut flag = true;
    for s in snapshots {
        let center = s.field.argmax_position();
        let radius = (t_est - s.t).powf(power);
        let mass = mass_in_ball(&s.field, center, radius)?;
        let in_final_decade = t_est - s.t <= horizon;
        if in_final_decade && mass < threshold {
            flag = false;
        }
        rows.push(ConcentrationRow {
            t: s.t,
            center,
            radius,
            mass,
            in_final_decade,
        });
    }
    Ok(ConcentrationTable {
        rows,
        exponent,
        eps,
        threshold,
        flag,
    })
}

/// Trajectory front end for [`concentration_scan`]; requires a run that ended
/// by blow-up detection.
pub fn concentration_scan_trajectory(
    traj: &TrajectoryRecord,
    t_est: f64,
    exponent: f64,
    eps: f64,
    qmass: f64,
    tol: f64,
) -> Result<ConcentrationTable> {
    if traj.termination != crate::evolution::Termination::BlowupDetected {
        return Err(LabError::NotApplicable(format!("run terminated with {:?}", traj.termination)));
    }
    concentration_scan(&traj.snapshots, t_est, exponent, eps, qmass, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    pub mass: f64,
    pub element: GroupElement,
}

/// `Σ_j √(m_j/‖Q‖₂²) · g_j Q` plus a smooth random field of mass `noise`.
pub fn synthesize_bubbles(
    grid: &Grid,
    specs: &[BubbleSpec],
    noise: f64,
    seed: u64,
    q: &GroundState,
) -> Result<Field> {
    if grid.dim() != q.dim {
        return Err(LabError::Dimension {
            expected: q.dim,
            actual: grid.dim(),
        });
    }
    let profile = q.profile()?;
    let reach = 0.5 * q.grid().extent();
    let d = grid.dim() as f64;
    let mut total = Field::zeros(grid);
    for spec in specs {
        let g = spec.element;
        g.validate()?;
        if !(spec.mass >= 0.0) {
            return Err(LabError::InvalidParameter(format!("bubble mass must be >= 0, got {}", spec.mass)));
        }
        let scale = (spec.mass / q.mass).sqrt();
        let bubble = if g.t0 == 0.0 {
            let amp = scale * g.lambda0.powf(-0.5 * d);
            let b = Field::from_fn(grid, |p| {
                let y = [(p[0] - g.x0[0]) / g.lambda0, (p[1] - g.x0[1]) / g.lambda0];
                let r = if d == 1.0 { y[0].abs() } else { (y[0] * y[0] + y[1] * y[1]).sqrt() };
                if r >= reach {
                    return Complex64::new(0.0, 0.0);
                }
                let ph = p[0] * g.xi0[0] + if d == 2.0 { p[1] * g.xi0[1] } else { 0.0 } + g.phase;
                Complex64::from_polar(amp * profile.value(r), ph)
            });
            let tail = b.forward().tail_fraction(2.0 / 3.0);
            if tail > crate::symmetry::TAIL_ERROR {
                return Err(LabError::Resolution(format!("bubble {g:?} has spectral tail {tail:e}")));
            }
            b
        } else {
            let base = Field::from_fn(grid, |p| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                Complex64::new(if r < reach { profile.value(r) } else { 0.0 }, 0.0)
            });
            apply_group(&g, &base)?.scale_real(scale)
        };
        total = total.add(&bubble)?;
    }
    if noise > 0.0 {
        total = total.add(&noise_field(grid, noise, seed))?;
    }
    Ok(total)
}

/// Smooth random field of the given mass: random low modes under a Gaussian
/// envelope of width `L/6`.
pub fn noise_field(grid: &Grid, mass: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = 6i32;
    let dim = grid.dim() as usize;
    let count = if dim == 1 { 2 * modes + 1 } else { (2 * modes + 1) * (2 * modes + 1) };
    let coeffs: Vec<Complex64> = (0..count)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let base = 2.0 * std::f64::consts::PI / grid.extent();
    let width = grid.extent() / 6.0;
    let f = Field::from_fn(grid, |p| {
        let env = (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * width * width)).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut idx = 0;
        for a in -modes..=modes {
            let ys: Vec<i32> = if dim == 1 { vec![0] } else { (-modes..=modes).collect() };
            for b in ys {
                let ph = base * (a as f64 * p[0] + b as f64 * p[1]);
                acc += coeffs[idx] * Complex64::from_polar(1.0, ph);
                idx += 1;
            }
        }
        acc * env
    });
    let m = f.mass();
    f.scale_real((mass / m).sqrt())
}

#[derive(Clone, Debug)]
pub struct Extraction {
    pub fits: Vec<BubbleFit>,
    pub residual: Field,
    pub residual_mass: f64,
}

impl Extraction {
    pub fn extracted_mass(&self) -> f64 {
        self.fits.iter().map(|f| f.mass).sum()
    }
}

/// Greedy peeling: fit a bubble, subtract its orthogonal projection, repeat up
/// to `max_j` times or until the fit distance exceeds `½‖Q‖₂`.
pub fn extract_bubbles(u: &Field, q: &GroundState, max_j: usize) -> Result<Extraction> {
    let total = u.mass();
    let stop = 0.5 * q.l2_norm();
    let profile = q.profile()?;
    let reach = 0.5 * q.grid().extent();
    let d = u.grid().dim() as f64;
    let mut residual = u.clone();
    let mut fits = Vec::new();
    for _ in 0..max_j {
        if residual.mass() <= 1e-20 * total {
            break;
        }
        let fit = fit_bubble(&residual, q)?;
        if fit.distance > stop {
            break;
        }
        let amp = fit.lambda.powf(-0.5 * d);
        let bubble = Field::from_fn(u.grid(), |p| {
            let y = [(p[0] - fit.x0[0]) / fit.lambda, (p[1] - fit.x0[1]) / fit.lambda];
            let r = if d == 1.0 { y[0].abs() } else { (y[0] * y[0] + y[1] * y[1]).sqrt() };
            Complex64::new(if r < reach { amp * profile.value(r) } else { 0.0 }, 0.0)
        });
        let c = residual.inner_product(&bubble)?;
        let n = bubble.mass();
        residual = residual.sub(&bubble.scale(c / n))?;
        fits.push(fit);
    }
    let residual_mass = residual.mass();
    Ok(Extraction {
        fits,
        residual,
        residual_mass,
    })
}
