//! Segment-level scoring, whole-route combination and ranking.
//!
//! A route is an ordered list of single-mode segments. Each segment gets a
//! duration (explicit, from walking distance, or from a stop count) and a
//! hazard rate from its environment preset; the route total combines the
//! segment probabilities as independent exposures.

mod file;
mod sweep;

pub use file::{parse_routes, routes_from_specs, serialize_routes, RouteSpec, SegmentSpec};
pub use sweep::{sweep_csv, walking_sweep, SweepPoint};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presets::PresetTable;
use crate::risk_model::{
    combine_probabilities, expected_infected, hazard_probability, ActivityLevel, HazardRate, KModel,
    Mode, Probability,
};

/// How long a segment lasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationSource {
    Hours(f64),
    Minutes(f64),
    /// Walking distance in meters.
    DistanceM(f64),
    /// Number of transit stops travelled.
    Stops(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub mode: Mode,
    pub duration: DurationSource,
    pub activity: Option<ActivityLevel>,
}

impl Segment {
    pub fn new(mode: Mode, duration: DurationSource, activity: Option<ActivityLevel>) -> Result<Self> {
        let seg = Segment {
            mode,
            duration,
            activity,
        };
        seg.validate()?;
        Ok(seg)
    }

    pub fn walk(distance_m: f64) -> Result<Self> {
        Segment::new(Mode::Walking, DurationSource::DistanceM(distance_m), None)
    }

    pub fn stops(mode: Mode, stops: u32) -> Result<Self> {
        Segment::new(mode, DurationSource::Stops(stops), None)
    }

    pub fn minutes(mode: Mode, minutes: f64) -> Result<Self> {
        Segment::new(mode, DurationSource::Minutes(minutes), None)
    }

    pub fn hours(mode: Mode, hours: f64) -> Result<Self> {
        Segment::new(mode, DurationSource::Hours(hours), None)
    }

    fn validate(&self) -> Result<()> {
        let non_negative = |field: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be a non-negative number, got {v}")))
            }
        };
        match self.duration {
            DurationSource::Hours(h) => non_negative("hours", h),
            DurationSource::Minutes(m) => non_negative("minutes", m),
            DurationSource::DistanceM(d) if self.mode == Mode::Walking => non_negative("distance_m", d),
            DurationSource::DistanceM(_) => Err(Error::validation(
                "distance_m",
                format!("only walking segments take a distance, not {}", self.mode),
            )),
            DurationSource::Stops(_) if self.mode.is_transit() => Ok(()),
            DurationSource::Stops(_) => Err(Error::validation(
                "stops",
                format!("only subway, brt and city_bus segments take stops, not {}", self.mode),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    pub id: String,
    pub label: String,
    pub segments: Vec<Segment>,
}

impl Route {
    pub fn new(id: impl Into<String>, label: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(Error::validation("id", "must not be empty"));
        }
        if segments.is_empty() {
            return Err(Error::validation("segments", "a route needs at least one segment"));
        }
        Ok(Route {
            id,
            label: label.into(),
            segments,
        })
    }
}

/// Where segment hazard rates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// Published per-environment rate constants.
    #[default]
    Exact,
    /// Recomputed from k(E), expected carriers and mean separation.
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoringConfig {
    pub walking_speed_kmh: f64,
    pub minutes_per_stop: f64,
    pub rate_mode: RateMode,
    /// Per-mode activity used when a segment does not set its own.
    pub activity_overrides: BTreeMap<Mode, ActivityLevel>,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            walking_speed_kmh: 5.0,
            minutes_per_stop: 3.0,
            rate_mode: RateMode::Exact,
            activity_overrides: BTreeMap::new(),
        }
    }
}

/// Activity assumed when nothing overrides it: moderate on foot, low on
/// transit. Fixed-k modes have none.
pub fn default_activity(mode: Mode) -> Option<ActivityLevel> {
    match mode {
        Mode::Walking => Some(ActivityLevel::Moderate),
        Mode::Subway | Mode::Brt | Mode::CityBus => Some(ActivityLevel::Low),
        Mode::Car => None,
    }
}

/// Duration of `segment` in hours.
pub fn segment_duration(segment: &Segment, config: &ScoringConfig) -> Result<f64> {
    segment.validate()?;
    Ok(match segment.duration {
        DurationSource::Hours(h) => h,
        DurationSource::Minutes(m) => m / 60.0,
        DurationSource::DistanceM(d) => d / (config.walking_speed_kmh * 1000.0),
        DurationSource::Stops(n) => f64::from(n) * config.minutes_per_stop / 60.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentRisk {
    pub index: usize,
    pub mode: Mode,
    pub duration_hours: f64,
    pub rate: HazardRate,
    pub probability: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub route_id: String,
    pub label: String,
    pub per_segment: Vec<SegmentRisk>,
    pub total: Probability,
}

/// Scores segments and routes against a preset table at a given prevalence.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    presets: &'a PresetTable,
    prevalence: f64,
    config: ScoringConfig,
}

impl<'a> Scorer<'a> {
    pub fn new(presets: &'a PresetTable, prevalence: f64, config: ScoringConfig) -> Result<Self> {
        if !(0.0..=1.0).contains(&prevalence) {
            return Err(Error::validation("prevalence", format!("{prevalence} is outside [0, 1]")));
        }
        if !(config.walking_speed_kmh > 0.0) {
            return Err(Error::validation("walking_speed_kmh", "must be positive"));
        }
        if !(config.minutes_per_stop >= 0.0) {
            return Err(Error::validation("minutes_per_stop", "must be non-negative"));
        }
        Ok(Scorer {
            presets,
            prevalence,
            config,
        })
    }

    /// Scorer at the prevalence the presets were published for.
    pub fn canonical(presets: &'a PresetTable) -> Self {
        let prevalence = presets.canonical_prevalence.fraction();
        Scorer::new(presets, prevalence, ScoringConfig::default()).expect("canonical prevalence is valid")
    }

    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }

    pub fn config(&self) -> &ScoringConfig {
        &self.config
    }

    pub fn segment_duration(&self, segment: &Segment) -> Result<f64> {
        segment_duration(segment, &self.config)
    }

    fn activity_for(&self, segment: &Segment) -> Option<ActivityLevel> {
        segment
            .activity
            .or_else(|| self.config.activity_overrides.get(&segment.mode).copied())
            .or_else(|| default_activity(segment.mode))
    }

    /// Hazard rate for `segment`.
    ///
    /// In exact mode the published constant is used, scaled linearly by
    /// prevalence relative to the preset's canonical prevalence (the rate is
    /// proportional to the expected carrier count). Segments whose activity
    /// differs from the one the constant was published for fall back to the
    /// derived rate.
    pub fn segment_rate(&self, segment: &Segment) -> Result<HazardRate> {
        let profile = self.presets.get(segment.mode)?;
        let activity = self.activity_for(segment);
        let canonical_prevalence = self.presets.canonical_prevalence.fraction();
        let matches_canonical = matches!(profile.k_model, KModel::Fixed { .. })
            || activity.is_none()
            || activity == profile.canonical_activity;
        if self.config.rate_mode == RateMode::Exact && matches_canonical && canonical_prevalence > 0.0 {
            return profile.canonical_rate.scaled(self.prevalence / canonical_prevalence);
        }
        let activity = activity
            .or(profile.canonical_activity)
            .unwrap_or(ActivityLevel::Low);
        let n = expected_infected(profile.capacity, self.prevalence)?;
        profile.environment_rate(activity, n, profile.canonical_r_mean_m)
    }

    pub fn segment_risk(&self, index: usize, segment: &Segment) -> Result<SegmentRisk> {
        let duration_hours = self.segment_duration(segment)?;
        let rate = self.segment_rate(segment)?;
        Ok(SegmentRisk {
            index,
            mode: segment.mode,
            duration_hours,
            rate,
            probability: hazard_probability(rate, duration_hours)?,
        })
    }

    pub fn segment_probability(&self, segment: &Segment) -> Result<Probability> {
        Ok(self.segment_risk(0, segment)?.probability)
    }

    pub fn route_probability(&self, route: &Route) -> Result<RiskReport> {
        let per_segment = route
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| self.segment_risk(i, s))
            .collect::<Result<Vec<_>>>()?;
        let total = combine_probabilities(per_segment.iter().map(|s| s.probability));
        Ok(RiskReport {
            route_id: route.id.clone(),
            label: route.label.clone(),
            per_segment,
            total,
        })
    }

    /// Reports in ascending order of total probability; ties keep input order.
    pub fn rank_routes(&self, routes: &[Route]) -> Result<Vec<RiskReport>> {
        if routes.is_empty() {
            return Err(Error::validation("routes", "no routes"));
        }
        let mut reports = routes
            .par_iter()
            .map(|r| self.route_probability(r))
            .collect::<Result<Vec<_>>>()?;
        reports.sort_by(|a, b| a.total.value().total_cmp(&b.total.value()));
        Ok(reports)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn durations() {
        let cfg = ScoringConfig::default();
        assert_abs_diff_eq!(segment_duration(&Segment::walk(1080.0).unwrap(), &cfg).unwrap(), 0.216, epsilon = 1e-15);
        assert_abs_diff_eq!(
            segment_duration(&Segment::stops(Mode::CityBus, 18).unwrap(), &cfg).unwrap(),
            0.9,
            epsilon = 1e-15
        );
        assert_eq!(
            segment_duration(&Segment::minutes(Mode::Car, 28.0).unwrap(), &cfg).unwrap(),
            28.0 / 60.0
        );
        let slow = ScoringConfig {
            walking_speed_kmh: 4.0,
            minutes_per_stop: 2.0,
            ..ScoringConfig::default()
        };
        assert_abs_diff_eq!(segment_duration(&Segment::walk(1000.0).unwrap(), &slow).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(
            segment_duration(&Segment::stops(Mode::Brt, 3).unwrap(), &slow).unwrap(),
            0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mismatched_duration_source() {
        assert!(matches!(
            Segment::new(Mode::Car, DurationSource::DistanceM(100.0), None),
            Err(Error::Validation { ref field, .. }) if field == "distance_m"
        ));
        assert!(matches!(
            Segment::new(Mode::Walking, DurationSource::Stops(3), None),
            Err(Error::Validation { ref field, .. }) if field == "stops"
        ));
        assert!(Segment::new(Mode::Car, DurationSource::Stops(3), None).is_err());
        assert!(Segment::walk(-5.0).is_err());
        assert!(Segment::hours(Mode::Brt, 0.5).is_ok());
    }

    #[test]
    fn segment_examples() {
        let presets = PresetTable::builtin();
        let scorer = Scorer::canonical(&presets);
        let p = scorer.segment_probability(&Segment::walk(126.0).unwrap()).unwrap();
        assert_abs_diff_eq!(p.value(), 0.0006, epsilon = 1e-4);
        let p = scorer.segment_probability(&Segment::stops(Mode::Brt, 9).unwrap()).unwrap();
        assert_abs_diff_eq!(p.value(), 0.0235, epsilon = 1e-4);
        assert_eq!(scorer.segment_probability(&Segment::walk(0.0).unwrap()).unwrap(), Probability::ZERO);
    }

    #[test]
    fn exact_mode_uses_published_constants_at_canonical_prevalence() {
        let presets = PresetTable::builtin();
        let scorer = Scorer::canonical(&presets);
        for profile in presets.profiles() {
            let seg = Segment::hours(profile.mode, 1.0).unwrap();
            assert_eq!(scorer.segment_rate(&seg).unwrap(), profile.canonical_rate);
        }
    }

    #[test]
    fn zero_prevalence_zeroes_everything() {
        let presets = PresetTable::builtin();
        for rate_mode in [RateMode::Exact, RateMode::Derived] {
            let cfg = ScoringConfig {
                rate_mode,
                ..ScoringConfig::default()
            };
            let scorer = Scorer::new(&presets, 0.0, cfg).unwrap();
            let route = Route::new(
                "r",
                "",
                vec![Segment::walk(900.0).unwrap(), Segment::minutes(Mode::Car, 20.0).unwrap()],
            )
            .unwrap();
            assert_eq!(scorer.route_probability(&route).unwrap().total, Probability::ZERO);
        }
    }

    #[test]
    fn activity_override_falls_back_to_derived() {
        let presets = PresetTable::builtin();
        let scorer = Scorer::canonical(&presets);
        let seg = Segment::new(Mode::Subway, DurationSource::Stops(4), Some(ActivityLevel::Moderate)).unwrap();
        let profile = presets.get(Mode::Subway).unwrap();
        let n = expected_infected(profile.capacity, scorer.prevalence()).unwrap();
        let expected = profile
            .environment_rate(ActivityLevel::Moderate, n, profile.canonical_r_mean_m)
            .unwrap();
        assert_eq!(scorer.segment_rate(&seg).unwrap(), expected);
        // Sitting is outside the subway line's validity.
        let sitting = Segment::new(Mode::Subway, DurationSource::Stops(4), Some(ActivityLevel::Sitting)).unwrap();
        assert!(matches!(scorer.segment_rate(&sitting), Err(Error::CalibrationRange { .. })));
    }

    #[test]
    fn derived_mode_close_to_exact() {
        let presets = PresetTable::builtin();
        let exact = Scorer::new(&presets, 0.008656, ScoringConfig::default()).unwrap();
        let derived = Scorer::new(
            &presets,
            0.008656,
            ScoringConfig {
                rate_mode: RateMode::Derived,
                ..ScoringConfig::default()
            },
        )
        .unwrap();
        for mode in Mode::ALL {
            let seg = Segment::hours(mode, 1.0).unwrap();
            let a = exact.segment_rate(&seg).unwrap().per_hour();
            let b = derived.segment_rate(&seg).unwrap().per_hour();
            assert!(((a - b) / a).abs() < 0.01, "{mode}: {a} vs {b}");
        }
    }

    #[test]
    fn single_segment_route_and_stable_ranking() {
        let presets = PresetTable::builtin();
        let scorer = Scorer::canonical(&presets);
        let seg = Segment::stops(Mode::Subway, 5).unwrap();
        let route = Route::new("only", "", vec![seg.clone()]).unwrap();
        assert_eq!(
            scorer.route_probability(&route).unwrap().total,
            scorer.segment_probability(&seg).unwrap()
        );
        let twin = Route { id: "twin".into(), ..route.clone() };
        let ranked = scorer.rank_routes(&[route, twin]).unwrap();
        assert_eq!(ranked[0].route_id, "only");
        assert_eq!(ranked[1].route_id, "twin");
        assert!(matches!(scorer.rank_routes(&[]), Err(Error::Validation { .. })));
    }

    #[test]
    fn scorer_validates_inputs() {
        let presets = PresetTable::builtin();
        assert!(Scorer::new(&presets, 1.5, ScoringConfig::default()).is_err());
        let bad = ScoringConfig {
            walking_speed_kmh: 0.0,
            ..ScoringConfig::default()
        };
        assert!(Scorer::new(&presets, 0.01, bad).is_err());
        assert!(Route::new("", "x", vec![Segment::walk(1.0).unwrap()]).is_err());
        assert!(Route::new("a", "x", vec![]).is_err());
    }
}
