//! On-disk layout of a run: `rows.csv`, `snapshots/snap_NNNNN.nlsf` and
//! `report.json` inside the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{LabError, Result};
use crate::evolution::DiagnosticsRow;
use crate::spectral::snapshot::{self, Snapshot};

pub const ROWS_FILE: &str = "rows.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const REPORT_FILE: &str = "report.json";

fn csv_err(e: csv::Error) -> LabError {
    LabError::Format(format!("csv: {e}"))
}

pub fn csv_header(dim: u32) -> Vec<&'static str> {
    let mut h = vec!["t", "dt", "mass", "energy", "momentum_x"];
    if dim == 2 {
        h.push("momentum_y");
    }
    h.extend(["grad_norm_sq", "variance", "lambda", "linf"]);
    h
}

/// Writes diagnostics rows with shortest round-trip float formatting, so
/// identical runs give byte-identical files.
pub fn write_rows_csv(path: impl AsRef<Path>, dim: u32, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
    w.write_record(csv_header(dim)).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.t, r.dt, r.mass, r.energy];
        rec.extend(r.momentum.iter().take(dim as usize));
        rec.extend([r.grad_norm_sq, r.variance, r.lambda, r.linf]);
        w.write_record(rec.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv(path: impl AsRef<Path>) -> Result<Vec<DiagnosticsRow>> {
    let mut r = csv::Reader::from_path(path.as_ref()).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    let dim = match header.len() {
        9 => 1,
        10 => 2,
        n => return Err(LabError::Format(format!("unexpected CSV column count {n}"))),
    };
    let expected = csv_header(dim);
    if header.iter().ne(expected.iter().copied()) {
        return Err(LabError::Format(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| LabError::Format(format!("bad number {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        let m = 4 + dim as usize;
        rows.push(DiagnosticsRow {
            t: v[0],
            dt: v[1],
            mass: v[2],
            energy: v[3],
            momentum: v[4..m].to_vec(),
            grad_norm_sq: v[m],
            variance: v[m + 1],
            lambda: v[m + 2],
            linf: v[m + 3],
        });
    }
    Ok(rows)
}

pub fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(SNAPSHOT_DIR).join(format!("snap_{index:05}.nlsf"))
}

pub fn write_snapshots(dir: &Path, snapshots: &[Snapshot]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
    snapshots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = snapshot_path(dir, i);
            snapshot::write(&p, &s.field, s.t)?;
            Ok(p)
        })
        .collect()
}

/// Snapshots of a run directory in time order.
pub fn read_snapshots(dir: &Path) -> Result<Vec<Snapshot>> {
    let sdir = dir.join(SNAPSHOT_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&sdir)
        .map_err(|e| LabError::from(e).context(format!("reading {}", sdir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "nlsf"))
        .collect();
    paths.sort();
    let mut snaps: Vec<Snapshot> = paths.iter().map(snapshot::read).collect::<Result<_>>()?;
    snaps.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(snaps)
}
