//! Experiment orchestration: build initial data from a spec, evolve, run the
//! scheduled analyses and persist CSV, snapshots and a versioned JSON report.

pub mod io;
mod rate;
mod spec;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use rate::{estimate_blowup_time, loglog_fit, LogLogReport};
pub use spec::{ExperimentSpec, InitialData, Op, SpecFile};

use crate::diagnostics::{self, Cutoff};
use crate::error::{LabError, Result};
use crate::evolution::{evolve, Termination, TrajectoryRecord};
use crate::ground_state::{place_on, reference_ground_state, GroundState};
use crate::profile::{self, ScaleSeries};
use crate::spectral::{snapshot, Field, Grid};
use crate::symmetry::{pconf_blowup, remove_chirp};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drifts {
    /// Max relative mass drift, excluding the final step of a blow-up run.
    pub mass_rel: f64,
    /// Max `|E(t) − E(0)| / max(|E(0)|, ½‖∇u(0)‖₂²)`.
    pub energy_rel: f64,
    pub momentum_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSummary {
    pub first: f64,
    pub last: f64,
    pub min: f64,
    pub monotone_final_decade: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub t: f64,
    pub lambda: f64,
    pub distance: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub exponent: f64,
    pub eps: f64,
    pub flag: bool,
    pub min_final_decade_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub termination: Termination,
    pub steps: usize,
    pub t_start: f64,
    pub t_final: f64,
    pub initial_mass: f64,
    pub initial_energy: f64,
    pub qmass: f64,
    pub drifts: Drifts,
    pub t_blowup_estimate: Option<f64>,
    pub lambda: LambdaSummary,
    pub loglog: Option<LogLogReport>,
    pub fit_distances: Vec<FitPoint>,
    pub concentration: Option<ConcentrationSummary>,
    /// `(t, E(χP u)/‖∇(χP u)‖₂²)` per snapshot.
    pub truncated_energy_ratio: Vec<(f64, f64)>,
    /// For pseudo-conformal runs, `(t, λ)` per snapshot measured after
    /// removing the chirp `e^{i|x|²/4t}`; empty otherwise.
    pub lambda_dechirped: Vec<(f64, f64)>,
    /// `(t, Morawetz action)` per snapshot.
    pub morawetz: Vec<(f64, f64)>,
    pub witness_terminal_deviation: Option<f64>,
    /// Analyses that were requested but could not run, with the reason.
    pub skipped: Vec<(String, String)>,
    pub wall_time_s: f64,
    pub outputs: Outputs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub rows_csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub report: PathBuf,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunReport = serde_json::from_str(text)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(LabError::Format(format!(
                "report schema version {} is not supported (expected {REPORT_SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// Markdown summary table.
    pub fn to_markdown(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        let mut s = format!("# Run `{}`\n\n| quantity | value |\n|---|---|\n", self.name);
        let mut row = |k: &str, v: String| s.push_str(&format!("| {k} | {v} |\n"));
        row("termination", format!("{:?}", self.termination));
        row("steps", self.steps.to_string());
        row("t range", format!("{} → {:.9}", self.t_start, self.t_final));
        row("initial mass / ‖Q‖²", format!("{:.9}", self.initial_mass / self.qmass));
        row("initial energy", format!("{:.6e}", self.initial_energy));
        row("mass drift (rel)", format!("{:.3e}", self.drifts.mass_rel));
        row("energy drift (rel)", format!("{:.3e}", self.drifts.energy_rel));
        row("momentum (abs)", format!("{:.3e}", self.drifts.momentum_abs));
        row("λ first / last / min", format!(
            "{:.4e} / {:.4e} / {:.4e}",
            self.lambda.first, self.lambda.last, self.lambda.min
        ));
        row("λ monotone (final decade)", self.lambda.monotone_final_decade.to_string());
        row("blow-up time estimate", opt(self.t_blowup_estimate));
        if let Some(l) = &self.loglog {
            row("β (power law)", format!("{:.4}", l.beta));
            row("residual power / corrected", format!("{:.3e} / {:.3e}", l.power_residual, l.corrected_residual));
            row("log-log consistent", l.loglog_consistent.to_string());
        }
        if let Some(last) = self.fit_distances.last() {
            row("terminal fit distance", format!("{:.4e}", last.distance));
        }
        if let Some(c) = &self.concentration {
            row(
                &format!("concentration (exp {:.4}, eps {})", c.exponent, c.eps),
                format!("{} (min mass {:.6})", c.flag, c.min_final_decade_mass),
            );
        }
        if let Some(&(_, r)) = self.truncated_energy_ratio.last() {
            row("terminal truncated-energy ratio", format!("{r:.4e}"));
        }
        row("witness terminal deviation", opt(self.witness_terminal_deviation));
        for (what, why) in &self.skipped {
            row(&format!("skipped: {what}"), why.clone());
        }
        row("wall time (s)", format!("{:.2}", self.wall_time_s));
        s
    }
}

/// Initial field and start time for a spec.
pub fn initial_data(spec: &ExperimentSpec, grid: &Grid, q: &GroundState) -> Result<(Field, f64)> {
    Ok(match &spec.initial {
        InitialData::GroundState => (place_on(q, grid)?, 0.0),
        InitialData::ScaledGroundState { alpha } => (place_on(q, grid)?.scale_real(1.0 + alpha), 0.0),
        InitialData::Gaussian { amplitude, width } => (
            Field::from_fn(grid, |p| {
                Complex64::new(amplitude * (-(p[0] * p[0] + p[1] * p[1]) / (width * width)).exp(), 0.0)
            }),
            0.0,
        ),
        InitialData::PconfBlowup { t_start } => (pconf_blowup(q, grid, *t_start)?, *t_start),
        InitialData::Snapshot { path } => {
            let s = snapshot::read(path).map_err(|e| e.context(format!("initial snapshot {}", path.display())))?;
            if !s.field.grid().same_as(grid) {
                return Err(LabError::Config(format!(
                    "snapshot grid {:?} differs from the spec grid {:?}",
                    s.field.grid(),
                    grid
                )));
            }
            (s.field, s.t)
        }
    })
}

/// `‖∇Q‖₂ / ‖∇(e^{−i|x|²/4t} u)‖₂`, the focusing scale with the
/// pseudo-conformal chirp divided out.
pub fn dechirped_lambda(u: &Field, t: f64, q_grad_norm_sq: f64) -> Result<f64> {
    Ok((q_grad_norm_sq / remove_chirp(u, t)?.gradient_norm_sq()).sqrt())
}

fn drifts(traj: &TrajectoryRecord) -> Drifts {
    let rows = &traj.rows;
    let first = &rows[0];
    // A blow-up run's last row is the step that crossed the resolution limit.
    let upto = if traj.termination == Termination::BlowupDetected && rows.len() > 2 {
        rows.len() - 1
    } else {
        rows.len()
    };
    let mut d = Drifts {
        mass_rel: 0.0,
        energy_rel: 0.0,
        momentum_abs: 0.0,
    };
    // E(Q) = 0, so energy drift is measured against the kinetic scale too.
    let escale = first.energy.abs().max(0.5 * first.grad_norm_sq);
    for r in &rows[..upto] {
        d.mass_rel = d.mass_rel.max((r.mass - first.mass).abs() / first.mass);
        d.energy_rel = d.energy_rel.max((r.energy - first.energy).abs() / escale);
        for (a, b) in r.momentum.iter().zip(&first.momentum) {
            d.momentum_abs = d.momentum_abs.max((a - b).abs());
        }
    }
    d
}

/// Runs one experiment end to end and writes its outputs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    let started = Instant::now();
    let ctx = |what: &str| format!("experiment {}: {what}", spec.name);
    let grid = spec.grid().map_err(|e| e.context(ctx("grid")))?;
    let q = reference_ground_state(spec.dim).map_err(|e| e.context(ctx("ground state")))?;
    let (u0, t0) = initial_data(spec, &grid, &q).map_err(|e| e.context(ctx("initial data")))?;
    let mut solver = spec.solver.clone();
    solver.q_grad_norm_sq = q.gradient_norm_sq;
    let traj = evolve(&u0, t0, &solver, &spec.schedule).map_err(|e| e.context(ctx("evolution")))?;

    let out = &spec.output_dir;
    fs::create_dir_all(out).map_err(|e| LabError::from(e).context(ctx("output directory")))?;
    let rows_csv = out.join(io::ROWS_FILE);
    io::write_rows_csv(&rows_csv, spec.dim, &traj.rows)?;
    let snapshots = io::write_snapshots(out, &traj.snapshots)?;

    let series = ScaleSeries::from_trajectory(&traj)?;
    let lambdas = series.lambdas();
    let lambda = LambdaSummary {
        first: lambdas[0],
        last: *lambdas.last().expect("rows are never empty"),
        min: lambdas.iter().copied().fold(f64::INFINITY, f64::min),
        monotone_final_decade: series.lambda_monotone,
    };

    let mut skipped = Vec::new();
    let blowup = traj.termination == Termination::BlowupDetected;
    let t_blowup_estimate = if blowup {
        match estimate_blowup_time(&series) {
            Ok(t) => Some(t),
            Err(e) => {
                skipped.push(("blow-up time".to_string(), e.to_string()));
                None
            }
        }
    } else {
        None
    };
    let loglog = match t_blowup_estimate {
        Some(t) => match loglog_fit(&series, t) {
            Ok(r) => Some(r),
            Err(e) => {
                skipped.push(("log-log fit".to_string(), e.to_string()));
                None
            }
        },
        None => None,
    };

    let mut fit_distances = Vec::new();
    let mut fits = Vec::new();
    if spec.has(Op::Fit) || spec.has(Op::Witness) {
        for s in &traj.snapshots {
            let fit = profile::fit_bubble(&s.field, &q).map_err(|e| e.context(ctx("bubble fit")))?;
            fit_distances.push(FitPoint {
                t: s.t,
                lambda: fit.lambda,
                distance: fit.distance,
                converged: fit.converged,
            });
            fits.push(fit);
        }
    }
    let witness_terminal_deviation = if spec.has(Op::Witness) && !fits.is_empty() {
        let fields: Vec<Field> = traj.snapshots.iter().map(|s| s.field.clone()).collect();
        let dict = profile::frozen_dictionary(&q);
        Some(profile::weak_limit_witness(&fields, &fits, &dict, &q)?.terminal_max_deviation)
    } else {
        None
    };

    let concentration = if spec.has(Op::Concentration) {
        match t_blowup_estimate {
            Some(t) => {
                let table = profile::concentration_scan_trajectory(
                    &traj,
                    t,
                    spec.conc_exponent,
                    spec.conc_eps,
                    q.mass,
                    spec.conc_tol,
                )?;
                let min = table
                    .rows
                    .iter()
                    .filter(|r| r.in_final_decade)
                    .map(|r| r.mass)
                    .fold(f64::INFINITY, f64::min);
                Some(ConcentrationSummary {
                    exponent: table.exponent,
                    eps: table.eps,
                    flag: table.flag,
                    min_final_decade_mass: min,
                })
            }
            None => {
                skipped.push(("concentration".to_string(), "no blow-up time estimate".to_string()));
                None
            }
        }
    } else {
        None
    };

    let truncated_energy_ratio = if spec.has(Op::TruncatedEnergy) {
        traj.snapshots
            .iter()
            .map(|s| (s.t, diagnostics::truncated_energy_ratio(&s.field, &spec.truncation)))
            .collect()
    } else {
        Vec::new()
    };
    let morawetz = if spec.has(Op::Morawetz) {
        let cut = Cutoff::psi_virial(spec.truncation.radius);
        traj.snapshots
            .iter()
            .map(|s| Ok((s.t, diagnostics::morawetz_action(&s.field, &cut, &spec.truncation)?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let lambda_dechirped = if matches!(spec.initial, InitialData::PconfBlowup { .. }) {
        traj.snapshots
            .iter()
            .filter(|s| s.t < 0.0)
            .map(|s| Ok((s.t, dechirped_lambda(&s.field, s.t, q.gradient_norm_sq)?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let report_path = out.join(io::REPORT_FILE);
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        name: spec.name.clone(),
        seed: spec.seed,
        termination: traj.termination,
        steps: traj.steps,
        t_start: t0,
        t_final: traj.final_state.t,
        initial_mass: traj.rows[0].mass,
        initial_energy: traj.rows[0].energy,
        qmass: q.mass,
        drifts: drifts(&traj),
        t_blowup_estimate,
        lambda,
        loglog,
        fit_distances,
        concentration,
        truncated_energy_ratio,
        lambda_dechirped,
        morawetz,
        witness_terminal_deviation,
        skipped,
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: Outputs {
            rows_csv,
            snapshots,
            report: report_path.clone(),
        },
    };
    fs::write(&report_path, report.to_json()?)?;
    Ok(report)
}
