//! Declarative experiment description.
//!
//! Specs are flat TOML tables. Dimensional keys carry their unit as a suffix:
//! `_s` for times, `_len` for lengths, `_inv_len` for wavenumbers.
//!
//! ```toml
//! name = "negative-energy"
//! output_dir = "runs/negative-energy"
//! seed = 1
//! dim = 1
//! extent_len = 60.0
//! points = 16384
//! initial = "scaled_ground_state"
//! alpha = 0.05
//! t_end_s = 10.0
//! dt0_s = 1e-3
//! dt_min_s = 1e-14
//! adapt_c = 1e-3
//! grad_max = 1e6
//! row_every_steps = 50
//! snapshot_period_s = 0.05
//! ops = ["fit", "concentration"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{cutoff::DEFAULT_C, TruncationParams};
use crate::error::{LabError, Result};
use crate::evolution::{Every, Schedule, SolverConfig};
use crate::ground_state::reference_grad_norm_sq;
use crate::profile::CONCENTRATION_TOL;
use crate::spectral::{default_extent, Grid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    GroundState,
    /// `(1 + α) Q`.
    ScaledGroundState { alpha: f64 },
    /// `A e^{−|x|²/w²}`.
    Gaussian { amplitude: f64, width: f64 },
    /// The explicit blow-up solution sampled at `t_start < 0`.
    PconfBlowup { t_start: f64 },
    Snapshot { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Fit,
    Concentration,
    TruncatedEnergy,
    Morawetz,
    Witness,
}

/// Raw key-value form, as written in a spec file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub name: String,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub dim: u32,
    pub extent_len: Option<f64>,
    pub points: usize,
    pub initial: String,
    pub alpha: Option<f64>,
    pub amplitude: Option<f64>,
    pub width_len: Option<f64>,
    pub t_start_s: Option<f64>,
    pub snapshot_path: Option<PathBuf>,
    pub t_end_s: f64,
    pub dt0_s: Option<f64>,
    pub dt_min_s: Option<f64>,
    pub adapt_c: Option<f64>,
    pub grad_max: Option<f64>,
    pub dealias: Option<bool>,
    pub row_period_s: Option<f64>,
    pub row_every_steps: Option<usize>,
    pub snapshot_period_s: Option<f64>,
    #[serde(default)]
    pub ops: Vec<Op>,
    pub trunc_radius_len: Option<f64>,
    pub trunc_k_inv_len: Option<f64>,
    pub trunc_c: Option<f64>,
    pub conc_exponent: Option<f64>,
    pub conc_eps: Option<f64>,
    pub conc_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub dim: u32,
    pub extent: f64,
    pub points: usize,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub schedule: Schedule,
    pub ops: Vec<Op>,
    pub truncation: TruncationParams,
    pub conc_exponent: f64,
    pub conc_eps: f64,
    pub conc_tol: f64,
}

fn config(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: SpecFile = toml::from_str(text).map_err(|e| config(format!("spec parse error: {e}")))?;
        ExperimentSpec::from_file_form(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::from(e).context(format!("reading spec {}", path.display())))?;
        let mut spec = ExperimentSpec::from_toml_str(&text)?;
        // Relative snapshot paths are resolved against the spec's directory.
        if let InitialData::Snapshot { path: p } = &mut spec.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(spec)
    }

    pub fn from_file_form(raw: SpecFile) -> Result<Self> {
        if raw.name.trim().is_empty() {
            return Err(config("name must not be empty"));
        }
        if raw.dim != 1 && raw.dim != 2 {
            return Err(config(format!("dim must be 1 or 2, got {}", raw.dim)));
        }
        let extent = raw.extent_len.unwrap_or_else(|| default_extent(raw.dim));
        Grid::new(raw.dim, extent, raw.points).map_err(|e| e.context("grid"))?;

        let given: Vec<&str> = [
            ("alpha", raw.alpha.is_some()),
            ("amplitude", raw.amplitude.is_some()),
            ("width_len", raw.width_len.is_some()),
            ("t_start_s", raw.t_start_s.is_some()),
            ("snapshot_path", raw.snapshot_path.is_some()),
        ]
        .iter()
        .filter(|(_, present)| *present)
        .map(|(k, _)| *k)
        .collect();
        let expect = |keys: &[&str]| -> Result<()> {
            let mut a: Vec<&str> = given.clone();
            let mut b: Vec<&str> = keys.to_vec();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(config(format!(
                    "initial = \"{}\" takes exactly the keys {:?}, got {:?}",
                    raw.initial, keys, given
                )));
            }
            Ok(())
        };
        let initial = match raw.initial.as_str() {
            "ground_state" => {
                expect(&[])?;
                InitialData::GroundState
            }
            "scaled_ground_state" => {
                expect(&["alpha"])?;
                let alpha = raw.alpha.expect("checked");
                if !(alpha > -0.5 && alpha < 0.5) {
                    return Err(config(format!("alpha must lie in (-0.5, 0.5), got {alpha}")));
                }
                InitialData::ScaledGroundState { alpha }
            }
            "gaussian" => {
                expect(&["amplitude", "width_len"])?;
                let (amplitude, width) = (raw.amplitude.expect("checked"), raw.width_len.expect("checked"));
                if !(amplitude.is_finite() && width > 0.0) {
                    return Err(config("gaussian needs finite amplitude and width_len > 0"));
                }
                InitialData::Gaussian { amplitude, width }
            }
            "pconf_blowup" => {
                expect(&["t_start_s"])?;
                let t_start = raw.t_start_s.expect("checked");
                if !(t_start < 0.0) {
                    return Err(config(format!("t_start_s must be negative, got {t_start}")));
                }
                InitialData::PconfBlowup { t_start }
            }
            "snapshot" => {
                expect(&["snapshot_path"])?;
                InitialData::Snapshot {
                    path: raw.snapshot_path.clone().expect("checked"),
                }
            }
            other => return Err(config(format!("unknown initial data kind \"{other}\""))),
        };

        let mut solver = SolverConfig::new(raw.dim, raw.t_end_s);
        solver.q_grad_norm_sq = reference_grad_norm_sq(raw.dim);
        if let Some(v) = raw.dt0_s {
            solver.dt0 = v;
        }
        if let Some(v) = raw.dt_min_s {
            solver.dt_min = v;
        }
        if let Some(v) = raw.adapt_c {
            solver.adapt_c = v;
        }
        if let Some(v) = raw.grad_max {
            solver.grad_max = v;
        }
        if let Some(v) = raw.dealias {
            solver.dealias = v;
        }
        solver.validate()?;

        let rows = match (raw.row_period_s, raw.row_every_steps) {
            (Some(_), Some(_)) => return Err(config("give at most one of row_period_s and row_every_steps")),
            (Some(p), None) if p > 0.0 => Every::Time(p),
            (None, Some(n)) if n > 0 => Every::Steps(n),
            (None, None) => Every::Steps(10),
            _ => return Err(config("row period must be positive")),
        };
        let snapshots = match raw.snapshot_period_s {
            Some(p) if p > 0.0 => Some(Every::Time(p)),
            Some(p) => return Err(config(format!("snapshot_period_s must be positive, got {p}"))),
            None => None,
        };
        let needs_snapshots = raw.ops.iter().any(|op| *op != Op::Morawetz);
        if needs_snapshots && snapshots.is_none() {
            return Err(config("ops other than morawetz need snapshot_period_s"));
        }
        let truncation = TruncationParams::new(
            raw.trunc_radius_len.unwrap_or(0.25 * extent),
            raw.trunc_k_inv_len.unwrap_or(1.0),
            raw.trunc_c.unwrap_or(DEFAULT_C),
        )?;
        let conc_tol = raw.conc_tol.unwrap_or(CONCENTRATION_TOL);
        if !(0.0..1.0).contains(&conc_tol) {
            return Err(config("conc_tol must lie in [0, 1)"));
        }

        let out = raw.output_dir.clone();
        if out.as_os_str().is_empty() {
            return Err(config("output_dir must not be empty"));
        }
        Ok(ExperimentSpec {
            name: raw.name,
            output_dir: out,
            seed: raw.seed,
            dim: raw.dim,
            extent,
            points: raw.points,
            initial,
            solver,
            schedule: Schedule { rows, snapshots },
            ops: raw.ops,
            truncation,
            conc_exponent: raw.conc_exponent.unwrap_or(2.0 / 3.0),
            conc_eps: raw.conc_eps.unwrap_or(0.05),
            conc_tol,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.extent, self.points)
    }

    pub fn has(&self, op: Op) -> bool {
        self.ops.contains(&op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "soliton"
output_dir = "out"
dim = 1
points = 1024
initial = "ground_state"
t_end_s = 2.0
"#;

    #[test]
    fn minimal_spec_parses_with_defaults() {
        let s = ExperimentSpec::from_toml_str(BASE).unwrap();
        assert_eq!(s.initial, InitialData::GroundState);
        assert_eq!(s.extent, 60.0);
        assert_eq!(s.schedule.rows, Every::Steps(10));
        assert!(!s.solver.dealias);
    }

    #[test]
    fn descriptor_keys_must_match_kind() {
        let bad = BASE.to_string() + "alpha = 0.1\n";
        assert!(matches!(ExperimentSpec::from_toml_str(&bad), Err(LabError::Config(_))));
        let scaled = BASE.replace("\"ground_state\"", "\"scaled_ground_state\"");
        assert!(ExperimentSpec::from_toml_str(&scaled).is_err());
        let ok = scaled.clone() + "alpha = 0.05\n";
        assert_eq!(
            ExperimentSpec::from_toml_str(&ok).unwrap().initial,
            InitialData::ScaledGroundState { alpha: 0.05 }
        );
        let out_of_range = scaled + "alpha = 0.5\n";
        assert!(ExperimentSpec::from_toml_str(&out_of_range).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = BASE.to_string() + "t_end = 3.0\n";
        assert!(ExperimentSpec::from_toml_str(&bad).is_err());
    }

    #[test]
    fn analysis_ops_need_snapshots() {
        let bad = BASE.to_string() + "ops = [\"fit\"]\n";
        assert!(ExperimentSpec::from_toml_str(&bad).is_err());
        let ok = BASE.to_string() + "ops = [\"fit\"]\nsnapshot_period_s = 0.5\n";
        assert!(ExperimentSpec::from_toml_str(&ok).is_ok());
    }
}
