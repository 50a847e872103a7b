use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use nlslab::diagnostics::{self, Cutoff, TruncationParams};
use nlslab::evolution::{evolve, Every, Schedule, SolverConfig};
use nlslab::ground_state::{self, reference_ground_state, GroundState};
use nlslab::lab::{self, io, ExperimentSpec, RunReport};
use nlslab::profile::{self, ScaleSeries, CONCENTRATION_TOL};
use nlslab::spectral::{snapshot, Field, Grid};
use nlslab::symmetry::{self, GroupElement};
use nlslab::LabError;

/// Numerical laboratory for the mass-critical focusing NLS.
#[derive(Parser)]
#[command(name = "nlslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state Q; prints its reference quantities as JSON.
    GroundState {
        #[arg(long, default_value_t = 1)]
        dim: u32,
        /// Box length per axis.
        #[arg(long = "L")]
        extent: Option<f64>,
        /// Points per axis.
        #[arg(long = "N")]
        points: Option<usize>,
        #[arg(long, default_value_t = ground_state::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a snapshot; writes a diagnostics CSV and optional snapshots.
    Evolve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt0: Option<f64>,
        #[arg(long)]
        dt_min: Option<f64>,
        #[arg(long)]
        adapt_c: Option<f64>,
        #[arg(long)]
        grad_max: Option<f64>,
        #[arg(long)]
        csv: PathBuf,
        /// Snapshot period in time units.
        #[arg(long)]
        snap_every: Option<f64>,
        /// Directory for snapshots; defaults to the CSV's directory.
        #[arg(long)]
        snap_dir: Option<PathBuf>,
        /// Diagnostics row every this many steps.
        #[arg(long, default_value_t = 10)]
        row_every: usize,
    },
    /// Run one or more experiment spec files, one worker per spec.
    Blowup {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
    },
    /// Fit a soliton bubble to a snapshot; prints the fit as JSON.
    FitProfile {
        #[arg(long = "in")]
        input: PathBuf,
        /// Ground-state snapshot; the reference Q when omitted.
        #[arg(long)]
        q: Option<PathBuf>,
    },
    /// Concentration scan over a run directory; prints a CSV table.
    Concentration {
        #[arg(long)]
        traj: PathBuf,
        /// Blow-up time; read from report.json or re-estimated when omitted.
        #[arg(long = "T")]
        t_blowup: Option<f64>,
        #[arg(long = "exp", default_value_t = 2.0 / 3.0)]
        exponent: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = CONCENTRATION_TOL)]
        tol: f64,
    },
    /// Unitarity and round-trip defects of the symmetries.
    SymmetryCheck {
        /// Snapshot to transform; the reference Q of --dim when omitted.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        dim: u32,
        /// Single operation; all of them when omitted.
        #[arg(long, value_enum)]
        op: Option<SymOp>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.3, -0.2])]
        x0: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, -0.25])]
        xi: Vec<f64>,
        #[arg(long, default_value_t = 1.25)]
        lambda: f64,
        /// Time parameter of the group element and the Galilean map.
        #[arg(long, default_value_t = 0.3)]
        t: f64,
        /// Time parameter of the pseudo-conformal map.
        #[arg(long, default_value_t = 1.5)]
        pc_t: f64,
        #[arg(long, default_value_t = 1.1)]
        theta: f64,
        /// Exit with status 3 when any unitarity defect exceeds this.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Functionals of a snapshot as one JSON object.
    Diagnose {
        #[arg(long = "in")]
        input: PathBuf,
        /// Evaluate every functional (the default).
        #[arg(long, conflicts_with = "op")]
        all: bool,
        #[arg(long, value_enum)]
        op: Option<DiagOp>,
        /// Spatial truncation radius; a quarter of the box when omitted.
        #[arg(long = "R")]
        radius: Option<f64>,
        #[arg(long = "K", default_value_t = 1.0)]
        k: f64,
        #[arg(long = "C", default_value_t = diagnostics::cutoff::DEFAULT_C)]
        c: f64,
    },
    /// Re-render a report.json as a Markdown table.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SymOp {
    Group,
    Galilean,
    Scale,
    Phase,
    Translate,
    Pconf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiagOp {
    Conserved,
    Variance,
    Lambda,
    GnDefect,
    TruncatedEnergy,
    CommutatorError,
    Morawetz,
    Tail,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<LabError>()) {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("NLSLAB_THREADS") else {
        return Ok(());
    };
    let n = v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
        anyhow!(LabError::Config(format!("NLSLAB_THREADS must be a positive integer, got {v:?}")))
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn print_json(v: &Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read_snapshot(path: &Path) -> anyhow::Result<snapshot::Snapshot> {
    snapshot::read(path).with_context(|| format!("reading snapshot {}", path.display()))
}

fn vec2(v: &[f64], what: &str) -> anyhow::Result<[f64; 2]> {
    match *v {
        [a] => Ok([a, 0.0]),
        [a, b] => Ok([a, b]),
        _ => bail!(LabError::InvalidParameter(format!("--{what} takes one or two components"))),
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::GroundState {
            dim,
            extent,
            points,
            tol,
            out,
        } => {
            let points = points.unwrap_or_else(|| ground_state::reference_points(dim));
            let grid = match extent {
                Some(l) => Grid::new(dim, l, points)?,
                None => Grid::default_for(dim, points)?,
            };
            let q = ground_state::solve_ground_state(&grid, tol)?;
            if let Some(p) = &out {
                snapshot::write(p, &q.field, 0.0).with_context(|| format!("writing {}", p.display()))?;
            }
            print_json(&json!({
                "dim": dim,
                "L": grid.extent(),
                "N": points,
                "mass": q.mass,
                "gradient_norm_sq": q.gradient_norm_sq,
                "residual": ground_state::residual(&q.field),
                "energy": q.energy(),
                "peak": q.peak(),
                "iterations": q.iterations,
            }))
        }
        Command::Evolve {
            input,
            t_end,
            dt0,
            dt_min,
            adapt_c,
            grad_max,
            csv,
            snap_every,
            snap_dir,
            row_every,
        } => {
            let s = read_snapshot(&input)?;
            let dim = s.field.grid().dim();
            let mut cfg = SolverConfig::new(dim, t_end);
            cfg.q_grad_norm_sq = ground_state::reference_grad_norm_sq(dim);
            if let Some(v) = dt0 {
                cfg.dt0 = v;
            }
            if let Some(v) = dt_min {
                cfg.dt_min = v;
            }
            if let Some(v) = adapt_c {
                cfg.adapt_c = v;
            }
            if let Some(v) = grad_max {
                cfg.grad_max = v;
            }
            if row_every == 0 {
                bail!(LabError::Config("--row-every must be positive".into()));
            }
            let schedule = Schedule {
                rows: Every::Steps(row_every),
                snapshots: snap_every.map(Every::Time),
            };
            let traj = evolve(&s.field, s.t, &cfg, &schedule)?;
            io::write_rows_csv(&csv, dim, &traj.rows).with_context(|| format!("writing {}", csv.display()))?;
            let dir = snap_dir.unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
            let snaps = if snap_every.is_some() {
                io::write_snapshots(&dir, &traj.snapshots)?
            } else {
                Vec::new()
            };
            let last = traj.rows.last().expect("rows are never empty");
            print_json(&json!({
                "termination": traj.termination,
                "steps": traj.steps,
                "t_final": traj.final_state.t,
                "lambda_final": last.lambda,
                "mass_drift_rel": (last.mass - traj.rows[0].mass).abs() / traj.rows[0].mass,
                "csv": csv,
                "snapshots": snaps.len(),
            }))
        }
        Command::Blowup { specs } => {
            let loaded: Vec<ExperimentSpec> = specs
                .iter()
                .map(|p| ExperimentSpec::load(p).with_context(|| format!("spec {}", p.display())))
                .collect::<anyhow::Result<_>>()?;
            let mut dirs: Vec<&PathBuf> = loaded.iter().map(|s| &s.output_dir).collect();
            dirs.sort();
            if dirs.windows(2).any(|w| w[0] == w[1]) {
                bail!(LabError::Config("specs in one batch must use distinct output directories".into()));
            }
            let results: Vec<anyhow::Result<RunReport>> = loaded
                .par_iter()
                .map(|s| lab::run_experiment(s).with_context(|| format!("spec {}", s.name)))
                .collect();
            let mut first_err = None;
            for r in results {
                match r {
                    Ok(report) => println!("{}", report.to_markdown()),
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            first_err.map_or(Ok(()), Err)
        }
        Command::FitProfile { input, q } => {
            let s = read_snapshot(&input)?;
            let q = match q {
                Some(p) => GroundState::from_field(read_snapshot(&p)?.field, 0),
                None => reference_ground_state(s.field.grid().dim())?,
            };
            let fit = profile::fit_bubble(&s.field, &q)?;
            print_json(&json!({
                "t": s.t,
                "lambda": fit.lambda,
                "gamma": fit.gamma,
                "x0": fit.x0,
                "distance": fit.distance,
                "mass": fit.mass,
                "converged": fit.converged,
                "sweeps": fit.sweeps,
            }))
        }
        Command::Concentration {
            traj,
            t_blowup,
            exponent,
            eps,
            tol,
        } => {
            let snaps = io::read_snapshots(&traj)?;
            let first = snaps
                .first()
                .ok_or_else(|| anyhow!(LabError::InsufficientData("run has no snapshots".into())))?;
            let q = reference_ground_state(first.field.grid().dim())?;
            let t_est = match t_blowup {
                Some(t) => t,
                None => blowup_time_of(&traj)?,
            };
            let table = profile::concentration_scan(&snaps, t_est, exponent, eps, q.mass, tol)?;
            println!("t,center_x,center_y,radius,mass,in_final_decade");
            for r in &table.rows {
                println!(
                    "{},{},{},{},{},{}",
                    r.t, r.center[0], r.center[1], r.radius, r.mass, r.in_final_decade
                );
            }
            eprintln!("T = {t_est}, threshold = {}, flag = {}", table.threshold, table.flag);
            Ok(())
        }
        Command::SymmetryCheck {
            input,
            dim,
            op,
            x0,
            xi,
            lambda,
            t,
            pc_t,
            theta,
            tol,
        } => {
            let u = match &input {
                Some(p) => read_snapshot(p)?.field,
                None => reference_ground_state(dim)?.field,
            };
            let mut x0 = vec2(&x0, "x0")?;
            let mut xi = vec2(&xi, "xi")?;
            if u.grid().dim() == 1 {
                x0[1] = 0.0;
                xi[1] = 0.0;
            }
            let params = SymParams {
                x0,
                xi,
                lambda,
                t,
                pc_t,
                theta,
            };
            let ops = match op {
                Some(o) => vec![o],
                None => SymOp::value_variants().to_vec(),
            };
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for o in ops {
                let (unitarity, roundtrip) = symmetry_defects(&u, o, &params)?;
                worst = worst.max(unitarity);
                let name = o.to_possible_value().expect("no skipped variants").get_name().to_string();
                rows.push(json!({ "op": name, "unitarity_defect": unitarity, "roundtrip_defect": roundtrip }));
            }
            print_json(&json!({ "checks": rows, "max_unitarity_defect": worst, "tol": tol }))?;
            if worst > tol {
                bail!(LabError::Resolution(format!("unitarity defect {worst:e} exceeds {tol:e}")));
            }
            Ok(())
        }
        Command::Diagnose {
            input,
            all: _,
            op,
            radius,
            k,
            c,
        } => {
            let s = read_snapshot(&input)?;
            let trunc = TruncationParams::new(radius.unwrap_or(0.25 * s.field.grid().extent()), k, c)?;
            let mut out = Map::new();
            out.insert("t".into(), json!(s.t));
            let ops = match op {
                Some(o) => vec![o],
                None => DiagOp::value_variants().to_vec(),
            };
            for o in ops {
                diagnose(&s.field, o, &trunc, &mut out)?;
            }
            print_json(&Value::Object(out))
        }
        Command::Report { report, out } => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let r = RunReport::from_json(&text)?;
            let md = r.to_markdown();
            match out {
                Some(p) => std::fs::write(&p, md).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{md}"),
            }
            Ok(())
        }
    }
}

fn diagnose(u: &Field, op: DiagOp, trunc: &TruncationParams, out: &mut Map<String, Value>) -> anyhow::Result<()> {
    let dim = u.grid().dim();
    let qg = ground_state::reference_grad_norm_sq(dim);
    // ‖∇Q‖² = (d/2)‖Q‖².
    let qmass = 2.0 * qg / dim as f64;
    let mut put = |k: &str, v: Value| {
        out.insert(k.into(), v);
    };
    match op {
        DiagOp::Conserved => {
            let c = diagnostics::conserved(u);
            put("mass", json!(c.mass));
            put("energy", json!(c.energy));
            put("momentum", json!(c.momentum));
            put("mass_over_q_mass", json!(c.mass / qmass));
        }
        DiagOp::Variance => put("variance", json!(diagnostics::variance(u))),
        DiagOp::Lambda => {
            let g = u.gradient_norm_sq();
            put("gradient_norm_sq", json!(g));
            put("lambda", json!((qg / g).sqrt()));
            put("linf", json!(u.lp_norm(f64::INFINITY)));
        }
        DiagOp::GnDefect => {
            put("sharp_gn_defect", json!(diagnostics::sharp_gn_defect(u, qmass)));
            put(
                "sharp_gn_defect_printed_form",
                json!(diagnostics::sharp_gn_defect_printed_form(u, qmass)),
            );
        }
        DiagOp::TruncatedEnergy => {
            put("truncated_energy", json!(diagnostics::truncated_energy(u, trunc)));
            put("truncated_energy_ratio", json!(diagnostics::truncated_energy_ratio(u, trunc)));
        }
        DiagOp::CommutatorError => put("commutator_error", json!(diagnostics::commutator_error(u, trunc))),
        DiagOp::Morawetz => {
            let cut = Cutoff::psi_virial(trunc.radius);
            put("morawetz_action", json!(diagnostics::morawetz_action(u, &cut, trunc)?));
        }
        DiagOp::Tail => put("spectral_tail", json!(u.forward().tail_fraction(2.0 / 3.0))),
    }
    Ok(())
}

/// Blow-up time of a run directory: from its report when present, otherwise
/// estimated from its diagnostics rows.
fn blowup_time_of(run: &Path) -> anyhow::Result<f64> {
    if let Ok(text) = std::fs::read_to_string(run.join(io::REPORT_FILE)) {
        if let Some(t) = RunReport::from_json(&text)?.t_blowup_estimate {
            return Ok(t);
        }
    }
    let rows = io::read_rows_csv(run.join(io::ROWS_FILE))?;
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let l: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    Ok(lab::estimate_blowup_time(&ScaleSeries::from_pairs(&t, &l)?)?)
}

struct SymParams {
    x0: [f64; 2],
    xi: [f64; 2],
    lambda: f64,
    t: f64,
    pc_t: f64,
    theta: f64,
}

/// `(|‖Tu‖ − ‖u‖|/‖u‖, ‖T⁻¹Tu − u‖/‖u‖)`.
fn symmetry_defects(u: &Field, op: SymOp, p: &SymParams) -> anyhow::Result<(f64, f64)> {
    let (fwd, back) = match op {
        SymOp::Group => {
            let g = GroupElement::new(p.x0, p.xi, p.lambda, p.t)?.with_phase(p.theta);
            let v = symmetry::apply_group(&g, u)?;
            let w = symmetry::apply_group(&g.inverse(), &v)?;
            (v, w)
        }
        SymOp::Galilean => {
            let v = symmetry::galilean(u, p.t, p.xi)?;
            let w = symmetry::galilean(&v, p.t, [-p.xi[0], -p.xi[1]])?;
            (v, w)
        }
        SymOp::Scale => {
            let v = symmetry::scale_sym(u, p.lambda)?;
            let w = symmetry::scale_sym(&v, 1.0 / p.lambda)?;
            (v, w)
        }
        SymOp::Phase => {
            let v = symmetry::phase_sym(u, p.theta);
            let w = symmetry::phase_sym(&v, -p.theta);
            (v, w)
        }
        SymOp::Translate => {
            let v = symmetry::translate_sym(u, p.x0)?;
            let w = symmetry::translate_sym(&v, [-p.x0[0], -p.x0[1]])?;
            (v, w)
        }
        SymOp::Pconf => {
            let v = symmetry::pseudo_conformal(u, p.pc_t)?;
            let w = symmetry::pseudo_conformal(&v, 1.0 / p.pc_t)?;
            (v, w)
        }
    };
    let m = u.l2_norm();
    Ok(((fwd.l2_norm() - m).abs() / m, back.l2_distance(u)? / m))
}
