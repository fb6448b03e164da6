//! Route documents.
//!
//! Routes are stored as TOML (`.routes`); the same [`RouteSpec`] shape is the
//! JSON body of the scoring API. A segment names its `mode` and exactly one
//! duration source:
//!
//! ```toml
//! [[route]]
//! id = "neshan-4"
//! label = "Walking, BRT and subway"
//! segments = [
//!     { mode = "walking", distance_m = 190.0 },
//!     { mode = "brt", stops = 2 },
//!     { mode = "car", minutes = 8.0 },
//!     { mode = "walking", hours = 0.5, activity = "intense" },
//! ]
//! ```

use serde::{Deserialize, Serialize};

use super::{DurationSource, Route, Segment};
use crate::error::{Error, Result};
use crate::presets::toml_error;
use crate::risk_model::{ActivityLevel, Mode};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stops: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minutes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hours: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteDocument {
    #[serde(default)]
    route: Vec<RouteSpec>,
}

impl SegmentSpec {
    fn to_segment(&self, at: &str) -> Result<Segment> {
        let mode: Mode = self.mode.parse()?;
        let sources = [
            self.distance_m.map(DurationSource::DistanceM),
            self.stops.map(DurationSource::Stops),
            self.minutes.map(DurationSource::Minutes),
            self.hours.map(DurationSource::Hours),
        ];
        let mut given = sources.into_iter().flatten();
        let duration = match (given.next(), given.next()) {
            (Some(d), None) => d,
            _ => {
                return Err(Error::validation(
                    at,
                    "give exactly one of distance_m, stops, minutes or hours",
                ))
            }
        };
        let activity = self
            .activity
            .as_deref()
            .map(|a| a.parse::<ActivityLevel>())
            .transpose()
            .map_err(|e| Error::validation(format!("{at}.activity"), e.to_string()))?;
        Segment::new(mode, duration, activity).map_err(|e| match e {
            Error::Validation { field, message } => Error::validation(format!("{at}.{field}"), message),
            other => other,
        })
    }
}

impl From<&Segment> for SegmentSpec {
    fn from(seg: &Segment) -> Self {
        let mut spec = SegmentSpec {
            mode: seg.mode.name().to_string(),
            activity: seg.activity.map(|a| a.name().to_string()),
            ..SegmentSpec::default()
        };
        match seg.duration {
            DurationSource::DistanceM(d) => spec.distance_m = Some(d),
            DurationSource::Stops(n) => spec.stops = Some(n),
            DurationSource::Minutes(m) => spec.minutes = Some(m),
            DurationSource::Hours(h) => spec.hours = Some(h),
        }
        spec
    }
}

impl From<&Route> for RouteSpec {
    fn from(route: &Route) -> Self {
        RouteSpec {
            id: route.id.clone(),
            label: route.label.clone(),
            segments: route.segments.iter().map(SegmentSpec::from).collect(),
        }
    }
}

/// Validates specs into routes, collecting every problem.
///
/// Field paths are rooted at `prefix`, e.g. `routes[0].segments[2].stops`.
/// Unknown modes are reported as [`Error::UnknownMode`].
pub fn routes_from_specs(specs: &[RouteSpec], prefix: &str) -> std::result::Result<Vec<Route>, Vec<Error>> {
    let mut routes = Vec::with_capacity(specs.len());
    let mut errors = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let at = format!("{prefix}[{i}]");
        let mut segments = Vec::with_capacity(spec.segments.len());
        for (j, seg) in spec.segments.iter().enumerate() {
            match seg.to_segment(&format!("{at}.segments[{j}]")) {
                Ok(s) => segments.push(s),
                Err(e) => errors.push(e),
            }
        }
        if segments.len() != spec.segments.len() {
            continue;
        }
        match Route::new(spec.id.clone(), spec.label.clone(), segments) {
            Ok(r) => routes.push(r),
            Err(Error::Validation { field, message }) => errors.push(Error::validation(format!("{at}.{field}"), message)),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(routes)
    } else {
        Err(errors)
    }
}

/// Parses a route document. An empty document yields no routes.
pub fn parse_routes(text: &str) -> Result<Vec<Route>> {
    let doc: RouteDocument = toml::from_str(text).map_err(|e| toml_error("routes", text, &e))?;
    routes_from_specs(&doc.route, "route").map_err(|mut errors| errors.swap_remove(0))
}

/// Canonical TOML form of `routes`.
pub fn serialize_routes(routes: &[Route]) -> String {
    let doc = RouteDocument {
        route: routes.iter().map(RouteSpec::from).collect(),
    };
    toml::to_string(&doc).expect("routes serialize")
}
