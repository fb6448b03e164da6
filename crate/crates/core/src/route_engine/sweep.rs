//! Walking-environment sweep: one-hour risk against corridor length for a
//! set of crowd densities.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{mean_distance_closed, Rectangle};
use crate::risk_model::{hazard_probability, ActivityLevel, EnvironmentProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub length_m: f64,
    /// Persons per square meter.
    pub density: f64,
    pub probability: f64,
}

/// Probability for every `(length, density)` pair, lengths varying fastest.
///
/// Carriers present are `density·length·width·prevalence`; separation is the
/// closed-form mean distance of the `length × width` rectangle.
pub fn walking_sweep(
    profile: &EnvironmentProfile,
    width_m: f64,
    lengths: &[f64],
    densities: &[f64],
    hours: f64,
    activity: ActivityLevel,
    prevalence: f64,
) -> Result<Vec<SweepPoint>> {
    if !(hours >= 0.0) {
        return Err(Error::validation("hours", "must be non-negative"));
    }
    if !(0.0..=1.0).contains(&prevalence) {
        return Err(Error::validation("prevalence", "must be in [0, 1]"));
    }
    if let Some(d) = densities.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(Error::validation("densities", format!("{d} is not a non-negative density")));
    }
    let rects = lengths
        .iter()
        .map(|&l| Rectangle::new(l, width_m))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(lengths.len() * densities.len());
    for &density in densities {
        for rect in &rects {
            let area = rect.length() * rect.width();
            let n = density * area * prevalence;
            let rate = profile.environment_rate(activity, n, mean_distance_closed(rect))?;
            out.push(SweepPoint {
                length_m: rect.length(),
                density,
                probability: hazard_probability(rate, hours)?.value(),
            });
        }
    }
    Ok(out)
}

/// Comma-separated `length_m,density,probability` rows with a header.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("length_m,density,probability\n");
    for p in points {
        writeln!(s, "{},{},{:.9e}", p.length_m, p.density, p.probability).unwrap();
    }
    s
}
