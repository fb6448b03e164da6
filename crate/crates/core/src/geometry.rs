//! Mean distance between two uniformly random points in a rectangle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum sample count accepted by [`mean_distance_mc`].
pub const MIN_MC_SAMPLES: u64 = 1000;

const MC_CHUNKS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rectangle {
    length_m: f64,
    width_m: f64,
}

impl Rectangle {
    pub fn new(length_m: f64, width_m: f64) -> Result<Self> {
        if !(length_m > 0.0 && width_m > 0.0) || !length_m.is_finite() || !width_m.is_finite() {
            return Err(Error::Domain(format!(
                "rectangle sides must be positive and finite, got {length_m} x {width_m}"
            )));
        }
        Ok(Rectangle { length_m, width_m })
    }

    pub fn length(&self) -> f64 {
        self.length_m
    }

    pub fn width(&self) -> f64 {
        self.width_m
    }

    pub fn diagonal(&self) -> f64 {
        self.length_m.hypot(self.width_m)
    }
}

/// Closed-form expected distance `E‖P − Q‖` for `P, Q` uniform in `rect`.
pub fn mean_distance_closed(rect: &Rectangle) -> f64 {
    let (a, b) = (rect.length_m, rect.width_m);
    let d = rect.diagonal();
    let (a2, b2) = (a * a, b * b);
    let logs = b2 / a * ((a + d) / b).ln() + a2 / b * ((b + d) / a).ln();
    (a2 * a / b2 + b2 * b / a2 + d * (3.0 - a2 / b2 - b2 / a2) + 2.5 * logs) / 15.0
}

/// Monte Carlo estimate of the mean distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Estimates the mean distance from `samples` independent point pairs.
///
/// Work is split into a fixed number of chunks, each with its own ChaCha
/// stream derived from `seed`, so the result does not depend on the thread
/// count.
pub fn mean_distance_mc(rect: &Rectangle, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::Config(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {samples}"
        )));
    }
    let (a, b) = (rect.length_m, rect.width_m);
    let sums: Vec<(f64, f64)> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let n = samples / MC_CHUNKS + u64::from(chunk < samples % MC_CHUNKS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let dx = a * (rng.random::<f64>() - rng.random::<f64>());
                let dy = b * (rng.random::<f64>() - rng.random::<f64>());
                let dist = dx.hypot(dy);
                sum += dist;
                sum_sq += dist * dist;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = sums
        .iter()
        .fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let n = samples as f64;
    let mean = sum / n;
    let variance = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_error: (variance / n).sqrt(),
        samples,
    })
}
