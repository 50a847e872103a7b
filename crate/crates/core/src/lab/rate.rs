//! Blow-up time and rate estimation from a focusing scale series.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::profile::{ScaleRow, ScaleSeries};

/// Ordinary least squares `y ≈ c + β x`; returns `(c, β, rms residual)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - beta * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - c - beta * a).powi(2)).sum();
    (c, beta, (ss / n).sqrt())
}

fn ensure_focusing(series: &ScaleSeries) -> Result<&[ScaleRow]> {
    let rows = &series.rows;
    if rows.len() < 10 {
        return Err(LabError::InsufficientData(format!(
            "rate estimation needs at least 10 rows, got {}",
            rows.len()
        )));
    }
    let first = rows[0].lambda;
    let last = rows[rows.len() - 1].lambda;
    if !(last < 0.9 * first) {
        return Err(LabError::NotApplicable(format!(
            "series is not focusing (λ from {first:e} to {last:e})"
        )));
    }
    let decade = series.final_decade();
    Ok(if decade.len() >= 5 { decade } else { &rows[rows.len() - 10..] })
}

// RMS residual of log λ = c + β log(T − t) on `rows`.
fn power_residual(rows: &[ScaleRow], t_blow: f64) -> f64 {
    let x: Vec<f64> = rows.iter().map(|r| (t_blow - r.t).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.lambda.ln()).collect();
    linear_fit(&x, &y).2
}

/// Estimated blow-up time `T`.
///
/// Over the final decade of focusing, fits `log λ = c + β log(T − t)` by least
/// squares and chooses `T` minimising the residual. `T` is searched as
/// `t_last + s·(t_last − t_start)`, which makes the estimate equivariant under
/// `(t, λ) → (μ²t, μλ)`. With `β` free the scaling-law ansatz `λ² ∝ T − t` is
/// the special case `β = ½`, and pseudo-conformal focusing (`β = 1`) is also
/// captured exactly.
pub fn estimate_blowup_time(series: &ScaleSeries) -> Result<f64> {
    let rows = ensure_focusing(series)?;
    let t_last = rows[rows.len() - 1].t;
    let span = t_last - rows[0].t;
    let objective = |u: f64| power_residual(rows, t_last + u.exp() * span);

    // Coarse scan of log s, then golden-section refinement.
    let (lo, hi, steps) = ((1e-7f64).ln(), (1e3f64).ln(), 400);
    let h = (hi - lo) / steps as f64;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let u = lo + h * i as f64;
        let r = objective(u);
        if r < best.0 {
            best = (r, u);
        }
    }
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(d);
        }
    }
    Ok(t_last + (0.5 * (a + b)).exp() * span)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogReport {
    pub t_blowup: f64,
    /// Exponent of the pure power law `λ ~ (T − t)^β`.
    pub beta: f64,
    pub power_residual: f64,
    /// Exponent after dividing out `ln|ln(T − t)|^{−1/2}`.
    pub corrected_beta: f64,
    pub corrected_residual: f64,
    pub rows_used: usize,
    pub loglog_consistent: bool,
}

/// Compares `λ ~ (T − t)^β` with `λ ~ (T − t)^β / √(ln|ln(T − t)|)` over the
/// final-decade rows with `T − t < 1/e`.
pub fn loglog_fit(series: &ScaleSeries, t_blowup: f64) -> Result<LogLogReport> {
    let rows = ensure_focusing(series)?;
    let used: Vec<&ScaleRow> = rows
        .iter()
        .filter(|r| {
            let s = t_blowup - r.t;
            s > 0.0 && s < (-1.0f64).exp()
        })
        .collect();
    if used.len() < 5 {
        return Err(LabError::InsufficientData(format!(
            "only {} rows with 0 < T − t < 1/e",
            used.len()
        )));
    }
    let x: Vec<f64> = used.iter().map(|r| (t_blowup - r.t).ln()).collect();
    let y: Vec<f64> = used.iter().map(|r| r.lambda.ln()).collect();
    let (_, beta, power_residual) = linear_fit(&x, &y);
    let yc: Vec<f64> = y
        .iter()
        .zip(&x)
        .map(|(y, x)| y + 0.5 * x.abs().ln().ln())
        .collect();
    let (_, corrected_beta, corrected_residual) = linear_fit(&x, &yc);
    Ok(LogLogReport {
        t_blowup,
        beta,
        power_residual,
        corrected_beta,
        corrected_residual,
        rows_used: used.len(),
        loglog_consistent: (0.45..=0.55).contains(&beta) && corrected_residual < power_residual,
    })
}
