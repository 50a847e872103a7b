//! Binary field snapshots.
//!
//! Layout (little-endian): `b"NLSF"`, version `u32`, dimension `u32`,
//! points per axis `u32`, extent `f64`, time `f64`, then `N^d` samples as
//! `(re, im)` `f64` pairs in row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::Field;
use super::grid::Grid;
use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 4] = b"NLSF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

pub fn encode(field: &Field, t: f64) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&grid.dim().to_le_bytes());
    out.extend_from_slice(&(grid.points() as u32).to_le_bytes());
    out.extend_from_slice(&grid.extent().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for z in field.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(LabError::Format("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(LabError::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(bytes, 8);
    let points = read_u32(bytes, 12) as usize;
    let extent = read_f64(bytes, 16);
    let t = read_f64(bytes, 24);
    let grid = Grid::new(dim, extent, points)?;
    let expected = HEADER_LEN + 16 * grid.len();
    if bytes.len() != expected {
        return Err(LabError::Format(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let samples = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(read_f64(c, 0), read_f64(c, 8)))
        .collect();
    Ok(Snapshot {
        t,
        field: Field::from_samples(&grid, samples)?,
    })
}

pub fn write(path: impl AsRef<Path>, field: &Field, t: f64) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode(field, t))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}
