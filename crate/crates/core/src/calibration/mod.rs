//! Recovers the environment coefficient `k` from observed infection
//! fractions and fits the linear activity model `k(E) = k1·E + k2`.
//!
//! Each observation is one carrier at a fixed separation `r` for `z` hours
//! with infection fraction `f`. Inverting `f = 1 − e^{kz/r²}` gives
//! `k = (r²/z)·ln(1 − f)`.

mod tables;

pub use tables::{
    CalibrationSet, CalibrationTable, InversionCheck, PublishedFit, RegressionOverride, TableRow,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::risk_model::ActivityLevel;

/// Six feet, the separation the calibration tables assume.
pub const SIX_FEET_M: f64 = 1.8288;

fn check_inputs(z: f64, f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Domain(format!("infection fraction {f} must lie strictly inside (0, 1)")));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("duration {z} must be positive")));
    }
    Ok(())
}

/// `k = (r²/z)·ln(1 − f)` for one carrier at distance `r`.
pub fn k_from_single(r: f64, z: f64, f: f64) -> Result<f64> {
    check_inputs(z, f)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("separation {r} must be positive")));
    }
    Ok(r * r / z * (-f).ln_1p())
}

/// `k = r1²r2² / (z(r1² + r2²))·ln(1 − f)` for two carriers.
///
/// Evaluated as `1 / (1/r1² + 1/r2²)`, so an infinitely distant carrier
/// drops out cleanly.
pub fn k_from_pair(r1: f64, r2: f64, z: f64, f: f64) -> Result<f64> {
    check_inputs(z, f)?;
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Domain(format!("separations {r1}, {r2} must be positive")));
    }
    let inv = 1.0 / (r1 * r1) + 1.0 / (r2 * r2);
    Ok((-f).ln_1p() / (z * inv))
}

/// Car coefficient from a time-to-infection observation given in minutes.
pub fn car_k_solve(z_minutes: f64, f: f64, r: f64) -> Result<f64> {
    k_from_single(r, z_minutes / 60.0, f)
}

/// One row of a calibration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservationRow {
    pub duration_hours: f64,
    pub infection_fraction: f64,
    pub room_area_m2: f64,
    pub separation_m: f64,
    pub activity: ActivityLevel,
}

/// An `(E, k)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationPoint {
    pub air_intake: f64,
    pub k: f64,
}

/// Inverts every row of every group, in order.
pub fn build_dataset(groups: &[Vec<ObservationRow>]) -> Result<Vec<CalibrationPoint>> {
    let mut points = Vec::with_capacity(groups.iter().map(Vec::len).sum());
    for (g, rows) in groups.iter().enumerate() {
        for (i, row) in rows.iter().enumerate() {
            let k = k_from_single(row.separation_m, row.duration_hours, row.infection_fraction)
                .map_err(|e| Error::parse(format!("table {} row {}", g + 1, i + 1), e.to_string()))?;
            points.push(CalibrationPoint {
                air_intake: row.activity.air_intake(),
                k,
            });
        }
    }
    Ok(points)
}

struct Moments {
    n: f64,
    mean_e: f64,
    mean_k: f64,
    see: f64,
    skk: f64,
    sek: f64,
}

fn moments(points: &[CalibrationPoint]) -> Result<Moments> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mean_e = points.iter().map(|p| p.air_intake).sum::<f64>() / n;
    let mean_k = points.iter().map(|p| p.k).sum::<f64>() / n;
    let (mut see, mut skk, mut sek) = (0.0, 0.0, 0.0);
    for p in points {
        let de = p.air_intake - mean_e;
        let dk = p.k - mean_k;
        see += de * de;
        skk += dk * dk;
        sek += de * dk;
    }
    Ok(Moments {
        n,
        mean_e,
        mean_k,
        see,
        skk,
        sek,
    })
}

/// Pearson product-moment correlation between `E` and `k`.
pub fn pearson(points: &[CalibrationPoint]) -> Result<f64> {
    let m = moments(points)?;
    if m.see == 0.0 || m.skk == 0.0 {
        return Err(Error::Degenerate("zero variance in E or k".into()));
    }
    Ok((m.sek / (m.see * m.skk).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub pearson: f64,
    /// Coefficient of determination, `pearson²`.
    pub r_score: f64,
    pub points: usize,
}

/// Unweighted ordinary least squares of `k` on `E`, one sample per row.
pub fn fit_line(points: &[CalibrationPoint]) -> Result<FitResult> {
    let m = moments(points)?;
    if m.see == 0.0 {
        return Err(Error::RankDeficient(m.mean_e));
    }
    let slope = m.sek / m.see;
    let intercept = m.mean_k - slope * m.mean_e;
    let r = pearson(points)?;
    Ok(FitResult {
        slope,
        intercept,
        pearson: r,
        r_score: r * r,
        points: m.n as usize,
    })
}
