//! JSON request and response bodies, and the scoring entry points shared by
//! the CLI and the HTTP handlers.
//!
//! `POST /api/score` takes
//!
//! ```json
//! {
//!   "routes": [
//!     { "id": "r1", "label": "bus",
//!       "segments": [{ "mode": "walking", "distance_m": 300 },
//!                    { "mode": "city_bus", "stops": 6 }] }
//!   ],
//!   "prevalence": 0.0087,
//!   "derived": false,
//!   "activity_overrides": { "walking": "intense" }
//! }
//! ```
//!
//! `prevalence` is either a fraction or `{ "active_cases": .., "population": .. }`
//! and defaults to the preset's value. Only `routes` is required.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use routerisk::route_engine::{routes_from_specs, walking_sweep, RouteSpec, SweepPoint};
use routerisk::{
    ActivityLevel, Error, KModel, Mode, PresetTable, PrevalenceModel, RateMode, RiskReport, Route,
    Scorer, ScoringConfig, ENGINE_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrevalenceInput {
    Fraction(f64),
    Counts { active_cases: u64, population: u64 },
}

impl PrevalenceInput {
    pub fn resolve(&self) -> Result<f64, ApiError> {
        match *self {
            PrevalenceInput::Fraction(f) if (0.0..=1.0).contains(&f) => Ok(f),
            PrevalenceInput::Fraction(f) => Err(ApiError::field(400, "prevalence", format!("{f} is outside [0, 1]"))),
            PrevalenceInput::Counts {
                active_cases,
                population,
            } => PrevalenceModel::new(active_cases, population)
                .map(|m| m.fraction())
                .map_err(|e| ApiError::field(400, "prevalence", e.to_string())),
        }
    }
}

fn resolve_prevalence(presets: &PresetTable, input: Option<&PrevalenceInput>) -> Result<f64, ApiError> {
    input.map_or(Ok(presets.canonical_prevalence.fraction()), PrevalenceInput::resolve)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub routes: Vec<RouteSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prevalence: Option<PrevalenceInput>,
    #[serde(default)]
    pub derived: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub activity_overrides: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walking_speed_kmh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minutes_per_stop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreResponse {
    pub engine_version: &'static str,
    pub preset_version: String,
    pub prevalence: f64,
    pub rate_mode: RateMode,
    /// Ascending by total.
    pub reports: Vec<RiskReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// An error body: `{"errors": [{"field": .., "message": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub errors: Vec<FieldError>,
}

impl ApiError {
    pub fn field(status: u16, field: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            errors: vec![FieldError {
                field: field.into(),
                message: message.into(),
            }],
        }
    }

    /// Unknown modes and out-of-range activities are well-formed but
    /// unprocessable (422); everything else is a bad request (400).
    pub fn from_errors(errors: Vec<Error>) -> Self {
        let status = if errors
            .iter()
            .any(|e| matches!(e, Error::UnknownMode(_) | Error::CalibrationRange { .. }))
        {
            422
        } else {
            400
        };
        let errors = errors
            .into_iter()
            .map(|e| match e {
                Error::Validation { field, message } => FieldError { field, message },
                other => FieldError {
                    field: String::new(),
                    message: other.to_string(),
                },
            })
            .collect();
        ApiError { status, errors }
    }

    pub fn message(&self) -> String {
        self.errors
            .iter()
            .map(|e| if e.field.is_empty() { e.message.clone() } else { format!("{}: {}", e.field, e.message) })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::from_errors(vec![e])
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message())
    }
}

/// Prevalence and scoring settings after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOptions {
    pub prevalence: f64,
    pub config: ScoringConfig,
}

impl ScoreOptions {
    pub fn from_request(presets: &PresetTable, req: &ScoreRequest) -> Result<Self, ApiError> {
        let mut config = ScoringConfig {
            rate_mode: if req.derived { RateMode::Derived } else { RateMode::Exact },
            ..ScoringConfig::default()
        };
        if let Some(v) = req.walking_speed_kmh {
            config.walking_speed_kmh = v;
        }
        if let Some(v) = req.minutes_per_stop {
            config.minutes_per_stop = v;
        }
        let mut errors = Vec::new();
        for (mode, activity) in &req.activity_overrides {
            let field = format!("activity_overrides.{mode}");
            match (mode.parse::<Mode>(), activity.parse::<ActivityLevel>()) {
                (Ok(m), Ok(a)) => {
                    config.activity_overrides.insert(m, a);
                }
                (Err(e), _) => errors.push(e),
                (_, Err(e)) => errors.push(Error::Validation {
                    field,
                    message: e.to_string(),
                }),
            }
        }
        if !errors.is_empty() {
            return Err(ApiError::from_errors(errors));
        }
        Ok(ScoreOptions {
            prevalence: resolve_prevalence(presets, req.prevalence.as_ref())?,
            config,
        })
    }
}

/// Ranks already-validated routes. Both front ends end up here.
pub fn rank(presets: &PresetTable, routes: &[Route], options: &ScoreOptions) -> Result<ScoreResponse, ApiError> {
    if routes.is_empty() {
        return Err(ApiError::field(400, "routes", "no routes"));
    }
    let scorer = Scorer::new(presets, options.prevalence, options.config.clone())?;
    Ok(ScoreResponse {
        engine_version: ENGINE_VERSION,
        preset_version: presets.version.clone(),
        prevalence: options.prevalence,
        rate_mode: options.config.rate_mode,
        reports: scorer.rank_routes(routes)?,
    })
}

pub fn score(presets: &PresetTable, req: &ScoreRequest) -> Result<ScoreResponse, ApiError> {
    if req.routes.is_empty() {
        return Err(ApiError::field(400, "routes", "no routes"));
    }
    let options = ScoreOptions::from_request(presets, req)?;
    let routes = routes_from_specs(&req.routes, "routes").map_err(ApiError::from_errors)?;
    rank(presets, &routes, &options)
}

pub const DEFAULT_SWEEP_DENSITIES: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 1.0];

/// 4 m to 100 m in 4 m steps.
pub fn default_sweep_lengths() -> Vec<f64> {
    (1..=25).map(|i| f64::from(i) * 4.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    #[serde(default = "default_width")]
    pub width_m: f64,
    #[serde(default = "default_hours")]
    pub hours: f64,
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
    #[serde(default)]
    pub densities: Option<Vec<f64>>,
    #[serde(default)]
    pub activity: Option<String>,
    #[serde(default)]
    pub prevalence: Option<PrevalenceInput>,
}

fn default_width() -> f64 {
    4.0
}

fn default_hours() -> f64 {
    1.0
}

impl Default for SweepRequest {
    fn default() -> Self {
        SweepRequest {
            width_m: default_width(),
            hours: default_hours(),
            lengths: None,
            densities: None,
            activity: None,
            prevalence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResponse {
    pub width_m: f64,
    pub hours: f64,
    pub activity: ActivityLevel,
    pub prevalence: f64,
    pub points: Vec<SweepPoint>,
}

pub fn sweep(presets: &PresetTable, req: &SweepRequest) -> Result<SweepResponse, ApiError> {
    let activity = match &req.activity {
        Some(a) => a
            .parse::<ActivityLevel>()
            .map_err(|e| ApiError::field(400, "activity", e.to_string()))?,
        None => ActivityLevel::Moderate,
    };
    let prevalence = resolve_prevalence(presets, req.prevalence.as_ref())?;
    let lengths = req.lengths.clone().unwrap_or_else(default_sweep_lengths);
    let densities = req.densities.clone().unwrap_or_else(|| DEFAULT_SWEEP_DENSITIES.to_vec());
    let walking = presets.get(Mode::Walking)?;
    let points = walking_sweep(walking, req.width_m, &lengths, &densities, req.hours, activity, prevalence)
        .map_err(|e| match e {
            Error::Domain(message) => ApiError::field(400, "", message),
            other => other.into(),
        })?;
    Ok(SweepResponse {
        width_m: req.width_m,
        hours: req.hours,
        activity,
        prevalence,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetView {
    pub mode: Mode,
    pub length_m: f64,
    pub width_m: f64,
    pub capacity: u32,
    pub k_model: KModel,
    pub canonical_activity: Option<ActivityLevel>,
    pub canonical_r_mean_m: f64,
    pub canonical_n_infected: f64,
    /// Published rate constant, per hour.
    pub exact_rate: f64,
    /// Rate recomputed from the k model, carriers and separation.
    pub derived_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetsResponse {
    pub engine_version: &'static str,
    pub version: String,
    pub prevalence: PrevalenceModel,
    pub prevalence_fraction: f64,
    pub environments: Vec<PresetView>,
}

pub fn presets_view(presets: &PresetTable) -> Result<PresetsResponse, ApiError> {
    let environments = presets
        .profiles()
        .map(|p| {
            Ok(PresetView {
                mode: p.mode,
                length_m: p.length_m,
                width_m: p.width_m,
                capacity: p.capacity,
                k_model: p.k_model,
                canonical_activity: p.canonical_activity,
                canonical_r_mean_m: p.canonical_r_mean_m,
                canonical_n_infected: p.canonical_n_infected,
                exact_rate: p.canonical_rate.per_hour(),
                derived_rate: p.derived_canonical_rate()?.per_hour(),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(PresetsResponse {
        engine_version: ENGINE_VERSION,
        version: presets.version.clone(),
        prevalence: presets.canonical_prevalence,
        prevalence_fraction: presets.canonical_prevalence.fraction(),
        environments,
    })
}
