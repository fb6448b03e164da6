//! Versioned environment presets loaded from a TOML data file.
//!
//! See `data/presets.toml` for the schema; the built-in set is compiled in
//! and can be replaced at runtime with [`PresetTable::from_path`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk_model::{
    ActivityLevel, EnvironmentProfile, HazardRate, KLine, KModel, Mode, PrevalenceModel,
};

const BUILTIN: &str = include_str!("../data/presets.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPresets {
    version: String,
    prevalence: PrevalenceModel,
    environment: Vec<RawEnvironment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    mode: String,
    length_m: f64,
    width_m: f64,
    capacity: u32,
    k1: Option<f64>,
    k2: Option<f64>,
    fixed_k: Option<f64>,
    canonical_activity: Option<ActivityLevel>,
    canonical_r_mean_m: f64,
    canonical_n_infected: f64,
    canonical_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetTable {
    pub version: String,
    pub canonical_prevalence: PrevalenceModel,
    profiles: BTreeMap<Mode, EnvironmentProfile>,
}

impl PresetTable {
    /// The compiled-in preset set.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in presets are valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawPresets = toml::from_str(text).map_err(|e| toml_error("presets", text, &e))?;
        let canonical_prevalence =
            PrevalenceModel::new(raw.prevalence.active_cases, raw.prevalence.population)?;
        let mut profiles = BTreeMap::new();
        for (i, env) in raw.environment.into_iter().enumerate() {
            let field = |name: &str| format!("environment[{i}].{name}");
            let mode: Mode = env.mode.parse()?;
            let k_model = match (env.k1, env.k2, env.fixed_k) {
                (Some(slope), Some(intercept), None) => KModel::Line(KLine { slope, intercept }),
                (None, None, Some(k)) => KModel::Fixed { k },
                _ => {
                    return Err(Error::validation(
                        field("k1"),
                        "give either both k1 and k2, or fixed_k alone",
                    ))
                }
            };
            if matches!(k_model, KModel::Line(_)) && env.canonical_activity.is_none() {
                return Err(Error::validation(
                    field("canonical_activity"),
                    "required when the profile uses a k-line",
                ));
            }
            for (name, value) in [
                ("length_m", env.length_m),
                ("width_m", env.width_m),
                ("canonical_r_mean_m", env.canonical_r_mean_m),
            ] {
                if !(value > 0.0) {
                    return Err(Error::validation(field(name), "must be positive"));
                }
            }
            if env.capacity == 0 {
                return Err(Error::validation(field("capacity"), "must be positive"));
            }
            if !(env.canonical_n_infected >= 0.0) {
                return Err(Error::validation(field("canonical_n_infected"), "must be non-negative"));
            }
            let canonical_rate = HazardRate::new(env.canonical_rate)
                .map_err(|e| Error::validation(field("canonical_rate"), e.to_string()))?;
            let profile = EnvironmentProfile {
                mode,
                length_m: env.length_m,
                width_m: env.width_m,
                capacity: env.capacity,
                k_model,
                canonical_activity: env.canonical_activity,
                canonical_r_mean_m: env.canonical_r_mean_m,
                canonical_n_infected: env.canonical_n_infected,
                canonical_rate,
            };
            if profiles.insert(mode, profile).is_some() {
                return Err(Error::validation(field("mode"), format!("duplicate mode {mode}")));
            }
        }
        Ok(PresetTable {
            version: raw.version,
            canonical_prevalence,
            profiles,
        })
    }

    pub fn get(&self, mode: Mode) -> Result<&EnvironmentProfile> {
        self.profiles
            .get(&mode)
            .ok_or_else(|| Error::Config(format!("no preset for mode {mode}")))
    }

    pub fn profiles(&self) -> impl Iterator<Item = &EnvironmentProfile> {
        self.profiles.values()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Maps a TOML error onto [`Error::Parse`] with a `line:column` location.
pub(crate) fn toml_error(what: &str, text: &str, err: &toml::de::Error) -> Error {
    let location = match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("{what} {line}:{column}")
        }
        None => what.to_string(),
    };
    Error::parse(location, err.message())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_has_five_environments() {
        let presets = PresetTable::builtin();
        assert_eq!(presets.len(), 5);
        assert_eq!(presets.get(Mode::Car).unwrap().k_model, KModel::Fixed { k: -2.729480 });
        for mode in [Mode::Walking, Mode::Subway, Mode::Brt, Mode::CityBus] {
            assert!(matches!(presets.get(mode).unwrap().k_model, KModel::Line(_)));
        }
    }

    #[test]
    fn builtin_canonical_values() {
        let presets = PresetTable::builtin();
        let walking = presets.get(Mode::Walking).unwrap();
        assert_eq!(walking.canonical_r_mean_m, 4.95);
        assert_eq!(walking.canonical_n_infected, 0.34656);
        assert_eq!(walking.canonical_rate.per_hour(), 0.025299);
        assert_eq!(walking.canonical_activity, Some(ActivityLevel::Moderate));
        assert_relative_eq!(walking.density_x(), 40.0 / 240.0);
    }

    #[test]
    fn derived_rates_within_one_percent() {
        let presets = PresetTable::builtin();
        for profile in presets.profiles() {
            let derived = profile.derived_canonical_rate().unwrap().per_hour();
            let exact = profile.canonical_rate.per_hour();
            assert!(
                ((derived - exact) / exact).abs() < 0.01,
                "{}: derived {derived} vs {exact}",
                profile.mode
            );
        }
    }

    #[test]
    fn rejects_mixed_k_model() {
        let text = BUILTIN.replace("fixed_k = -2.729480", "fixed_k = -2.729480\nk1 = 0.1");
        let err = PresetTable::parse(&text).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "environment[4].k1"));
    }

    #[test]
    fn rejects_unknown_mode_and_bad_toml() {
        let text = BUILTIN.replace("mode = \"car\"", "mode = \"tram\"");
        assert!(matches!(PresetTable::parse(&text), Err(Error::UnknownMode(_))));
        assert!(matches!(PresetTable::parse("version = "), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_mode_is_config_error() {
        let text = BUILTIN.split("[[environment]]\nmode = \"car\"").next().unwrap();
        let presets = PresetTable::parse(text).unwrap();
        assert!(matches!(presets.get(Mode::Car), Err(Error::Config(_))));
    }
}
