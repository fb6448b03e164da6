//! Airborne infection risk along multi-modal urban routes.
//!
//! Each route segment is an exposure with a constant hazard rate, so the
//! probability of infection over `z` hours is `1 − e^{−λz}` and independent
//! segments combine as `1 − Π(1 − pᵢ)`. Rates come from per-environment
//! presets, either as published constants or recomputed from a calibrated
//! coefficient line `k(E)`, the expected number of carriers and the mean
//! separation between occupants.
//!
//! The crate also carries the pieces those presets are built from: the
//! calibration tables and fits ([`calibration`]), the rectangle mean-distance
//! formula ([`geometry`]) and a grid simulation that checks the closed-form
//! path probability by Monte Carlo ([`grid_sim`]).

// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
mod error;
pub mod geometry;
pub mod grid_sim;
pub mod presets;
pub mod risk_model;
pub mod route_engine;

pub use error::{Error, Result};
pub use presets::PresetTable;
pub use risk_model::{
    combine_probabilities, combine_route_probabilities, expected_infected, hazard_probability,
    prevalence_fraction, ActivityLevel, EnvironmentProfile, HazardRate, KLine, KModel, Mode,
    PrevalenceModel, Probability,
};
pub use route_engine::{
    parse_routes, serialize_routes, DurationSource, RateMode, RiskReport, Route, Scorer,
    ScoringConfig, Segment, SegmentRisk,
};

/// Version string reported by the service and CLI.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
