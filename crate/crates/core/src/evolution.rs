//! Time integration of `i u_t + Δu = −|u|^{4/d} u`.
//!
//! Strang splitting: half a free step, the exact nonlinear phase rotation
//! `u ← u e^{i dt |u|^{4/d}}` (the modulus is invariant under the nonlinear
//! flow), then another half free step. The step size follows
//! `dt = c / ‖∇u‖₂²`, which is covariant under the scaling symmetry, rounded
//! down onto the ladder `dt0 · 2^{−j/8}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::error::{LabError, Result};
use crate::ground_state::{nonlinearity_power, reference_grad_norm_sq};
use crate::spectral::snapshot::Snapshot;
use crate::spectral::{Field, Grid};

/// Focusing scale at which a run is stopped, in grid cells.
pub const RESOLUTION_STOP_CELLS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub adapt_c: f64,
    pub dealias: bool,
    pub grad_max: f64,
    pub t_end: f64,
    /// `‖∇Q‖₂²` used for `λ = ‖∇Q‖₂/‖∇u‖₂`.
    pub q_grad_norm_sq: f64,
    /// Drop the nonlinear substep (free Schrödinger flow).
    #[serde(default)]
    pub linear_only: bool,
}

impl SolverConfig {
    pub fn new(dim: u32, t_end: f64) -> Self {
        SolverConfig {
            dt0: 1e-3,
            dt_min: 1e-14,
            adapt_c: 1e-3,
            dealias: dim == 2,
            grad_max: 1e6,
            t_end,
            q_grad_norm_sq: reference_grad_norm_sq(dim),
            linear_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min < self.dt0) {
            return Err(LabError::Config(format!(
                "need 0 < dt_min < dt0 (dt_min={}, dt0={})",
                self.dt_min, self.dt0
            )));
        }
        if !(self.adapt_c > 0.0 && self.adapt_c <= 1.0) {
            return Err(LabError::Config(format!("adapt_c must lie in (0, 1], got {}", self.adapt_c)));
        }
        if !(self.grad_max > 0.0 && self.t_end.is_finite() && self.q_grad_norm_sq > 0.0) {
            return Err(LabError::Config("grad_max, t_end and q_grad_norm_sq must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Every {
    Steps(usize),
    Time(f64),
}

/// When to record diagnostics rows and snapshots. Time-based schedules land
/// exactly on their sample times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rows: Every,
    pub snapshots: Option<Every>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            rows: Every::Steps(10),
            snapshots: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTEnd,
    BlowupDetected,
    DtUnderflow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
    pub grad_norm_sq: f64,
    pub variance: f64,
    pub lambda: f64,
    pub linf: f64,
}

impl DiagnosticsRow {
    pub fn measure(u: &Field, t: f64, dt: f64, q_grad_norm_sq: f64) -> Self {
        let grad_norm_sq = u.gradient_norm_sq();
        DiagnosticsRow {
            t,
            dt,
            mass: u.mass(),
            energy: diagnostics::energy(u),
            momentum: diagnostics::momentum(u),
            grad_norm_sq,
            variance: diagnostics::variance(u),
            lambda: (q_grad_norm_sq / grad_norm_sq).sqrt(),
            linf: u.lp_norm(f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    pub steps: usize,
    pub final_state: Snapshot,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// `e^{itΔ} u`: multiply the spectrum by `e^{−it|ξ|²}`.
pub fn free_propagator(u: &Field, t: f64) -> Field {
    if t == 0.0 {
        return u.clone();
    }
    u.forward()
        .apply_complex_multiplier(|k2, _| Complex64::from_polar(1.0, -t * k2))
        .inverse()
}

/// Reusable split-step kernel for one grid.
pub struct Stepper {
    grid: Grid,
    k2: Vec<f64>,
    mask: Option<Vec<bool>>,
    power: f64,
    linear_only: bool,
    scratch: Vec<Complex64>,
    // Half-step multiplier (including FFT normalisation and mask) for the last
    // `tau` used.
    cached: Option<(u64, Vec<Complex64>)>,
}

impl Stepper {
    pub fn new(grid: &Grid, dealias: bool) -> Self {
        let mask = dealias.then(|| {
            let n = grid.points() as i64;
            let keep = |j: usize| {
                let j = j as i64;
                let k = if j < n / 2 { j } else { j - n };
                3 * k.abs() <= n
            };
            (0..grid.len())
                .map(|i| match grid.dim() {
                    1 => keep(i),
                    _ => keep(i / grid.points()) && keep(i % grid.points()),
                })
                .collect()
        });
        Stepper {
            grid: grid.clone(),
            k2: grid.k2().to_vec(),
            mask,
            power: nonlinearity_power(grid.dim()),
            linear_only: false,
            scratch: Vec::new(),
            cached: None,
        }
    }

    pub fn linear_only(mut self, on: bool) -> Self {
        self.linear_only = on;
        self
    }

    fn ensure_multiplier(&mut self, tau: f64) {
        let key = tau.to_bits();
        if self.cached.as_ref().map(|c| c.0) == Some(key) {
            return;
        }
        let norm = 1.0 / self.grid.len() as f64;
        let m = self
            .k2
            .iter()
            .enumerate()
            .map(|(i, &k2)| match &self.mask {
                Some(mask) if !mask[i] => Complex64::new(0.0, 0.0),
                _ => Complex64::from_polar(norm, -tau * k2),
            })
            .collect();
        self.cached = Some((key, m));
    }

    // Free flow for time `tau` in place; returns ‖∇u‖₂² of the result.
    fn linear(&mut self, data: &mut [Complex64], tau: f64) -> f64 {
        self.ensure_multiplier(tau);
        self.grid.fft(data, false);
        let m = &self.cached.as_ref().expect("filled above").1;
        let mut g2 = 0.0;
        for ((z, m), k2) in data.iter_mut().zip(m).zip(&self.k2) {
            *z *= m;
            g2 += k2 * z.norm_sqr();
        }
        self.grid.fft(data, true);
        g2 * self.grid.len() as f64 * self.grid.cell_volume()
    }

    fn nonlinear(&self, data: &mut [Complex64], dt: f64) {
        if self.linear_only {
            return;
        }
        // |u|^{4/d} = m² in 1D and m in 2D, with m = |u|².
        let quintic = self.power > 4.0;
        for z in data.iter_mut() {
            let m = z.norm_sqr();
            let theta = dt * if quintic { m * m } else { m };
            let (s, c) = theta.sin_cos();
            *z *= Complex64::new(c, s);
        }
    }

    /// One Strang step in place; returns `‖∇u‖₂²` after the step.
    pub fn step_in_place(&mut self, data: &mut [Complex64], dt: f64) -> f64 {
        self.linear(data, 0.5 * dt);
        self.nonlinear(data, dt);
        self.linear(data, 0.5 * dt)
    }

    pub fn step(&mut self, u: &Field, dt: f64) -> Result<Field> {
        let mut data = std::mem::take(&mut self.scratch);
        data.clear();
        data.extend_from_slice(u.samples());
        self.step_in_place(&mut data, dt);
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::NumericalBlowup { t: f64::NAN });
        }
        Field::from_samples(&self.grid, data)
    }
}

/// One Strang step of size `dt` (negative `dt` steps backwards in time).
pub fn step(u: &Field, dt: f64) -> Result<Field> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(LabError::InvalidParameter(format!("dt must be finite and non-zero, got {dt}")));
    }
    Stepper::new(u.grid(), false).step(u, dt)
}

/// Largest `dt0 · 2^{−j/8}` (`j ≥ 0`) not exceeding `target`. Keeping step
/// sizes on a fixed ladder lets the free-flow multiplier be reused.
pub fn quantize_step(dt0: f64, target: f64) -> f64 {
    if target >= dt0 {
        return dt0;
    }
    let j = (8.0 * (dt0 / target).log2()).ceil();
    let dt = dt0 * (-j / 8.0).exp2();
    if dt > target {
        dt0 * (-(j + 1.0) / 8.0).exp2()
    } else {
        dt
    }
}

struct Cadence {
    every: Every,
    next_time: f64,
    last_step: usize,
}

impl Cadence {
    fn new(every: Every, t0: f64) -> Self {
        let next_time = match every {
            Every::Time(tau) => t0 + tau,
            Every::Steps(_) => f64::INFINITY,
        };
        Cadence {
            every,
            next_time,
            last_step: 0,
        }
    }

    fn due(&self, steps: usize, t: f64) -> bool {
        match self.every {
            Every::Steps(n) => steps - self.last_step >= n.max(1),
            Every::Time(_) => t >= self.next_time,
        }
    }

    fn mark(&mut self, steps: usize) {
        self.last_step = steps;
        if let Every::Time(tau) = self.every {
            self.next_time += tau;
        }
    }

    fn time_target(&self) -> f64 {
        self.next_time
    }
}

/// Advances `u0` from `t0` to `cfg.t_end` with adaptive steps, recording
/// diagnostics per `schedule`. Stops early when `‖∇u‖₂ > grad_max`, when the
/// focusing scale `λ` falls below eight grid cells, or when the step size
/// underflows `dt_min`.
pub fn evolve(u0: &Field, t0: f64, cfg: &SolverConfig, schedule: &Schedule) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let grid = u0.grid().clone();
    let g0 = u0.gradient_norm_sq();
    if cfg.grad_max * cfg.grad_max <= g0 {
        return Err(LabError::Config(format!(
            "grad_max {} does not exceed ‖∇u0‖₂ = {}",
            cfg.grad_max,
            g0.sqrt()
        )));
    }
    if !(cfg.t_end > t0) {
        return Err(LabError::Config(format!("t_end {} must exceed the start time {t0}", cfg.t_end)));
    }
    let resolution_limit = cfg.q_grad_norm_sq.sqrt() / (RESOLUTION_STOP_CELLS * grid.spacing());
    let grad_limit = cfg.grad_max.min(resolution_limit);

    let mut stepper = Stepper::new(&grid, cfg.dealias).linear_only(cfg.linear_only);
    let mut data = u0.samples().to_vec();
    let mut t = t0;
    let mut g2 = g0;
    let mut steps = 0usize;
    let mut last_dt = 0.0;

    let mut rows = vec![DiagnosticsRow::measure(u0, t0, 0.0, cfg.q_grad_norm_sq)];
    let mut snapshots = Vec::new();
    if schedule.snapshots.is_some() {
        snapshots.push(Snapshot { t: t0, field: u0.clone() });
    }
    let mut row_cadence = Cadence::new(schedule.rows, t0);
    let mut snap_cadence = schedule.snapshots.map(|e| Cadence::new(e, t0));

    let termination = loop {
        if g2.sqrt() > grad_limit {
            break Termination::BlowupDetected;
        }
        let mut dt = quantize_step(cfg.dt0, cfg.adapt_c / g2.max(f64::MIN_POSITIVE));
        if dt < cfg.dt_min {
            if steps == 0 {
                return Err(LabError::Config(format!(
                    "initial step {dt:e} is below dt_min {:e}",
                    cfg.dt_min
                )));
            }
            break Termination::DtUnderflow;
        }
        let mut target = cfg.t_end.min(row_cadence.time_target());
        if let Some(c) = &snap_cadence {
            target = target.min(c.time_target());
        }
        let mut landed = false;
        if t + dt >= target - 1e-12 * target.abs().max(1.0) {
            dt = target - t;
            landed = true;
        }
        g2 = stepper.step_in_place(&mut data, dt);
        steps += 1;
        last_dt = dt;
        t = if landed { target } else { t + dt };
        if !g2.is_finite() || data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::NumericalBlowup { t });
        }
        let at_end = t >= cfg.t_end;
        let stopping = at_end || g2.sqrt() > grad_limit;
        let record_row = stopping || row_cadence.due(steps, t);
        let record_snap = snap_cadence.as_ref().is_some_and(|c| stopping || c.due(steps, t));
        if record_row || record_snap {
            let field = Field::from_samples(&grid, data.clone())?;
            if record_row {
                rows.push(DiagnosticsRow::measure(&field, t, dt, cfg.q_grad_norm_sq));
                row_cadence.mark(steps);
            }
            if record_snap {
                snapshots.push(Snapshot { t, field });
                if let Some(c) = snap_cadence.as_mut() {
                    c.mark(steps);
                }
            }
        }
        if at_end {
            break Termination::ReachedTEnd;
        }
    };

    let final_field = Field::from_samples(&grid, data)?;
    if rows.last().map(|r| r.t) != Some(t) {
        rows.push(DiagnosticsRow::measure(&final_field, t, last_dt, cfg.q_grad_norm_sq));
    }
    if snap_cadence.is_some() && snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(Snapshot {
            t,
            field: final_field.clone(),
        });
    }
    Ok(TrajectoryRecord {
        rows,
        snapshots,
        termination,
        steps,
        final_state: Snapshot { t, field: final_field },
    })
}
