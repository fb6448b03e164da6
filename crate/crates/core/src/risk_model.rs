//! Closed-form infection probability.
//!
//! Exposure in one environment is modelled as a constant hazard: over `z`
//! hours at rate `λ` the probability of infection is `1 − e^{−λz}`.
//! Independent exposures combine as `1 − Π(1 − pᵢ)`.
//!
//! The hazard rate of an environment follows from its calibration
//! coefficient `k` (negative), the expected number of carriers `n` and the
//! mean separation `r` between occupants: `λ = −k·n / r²`. For every mode
//! except the car, `k` depends linearly on the activity level `E`, the
//! volume of air inhaled per hour.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest air intake (L/h) covered by the calibration tables.
pub const MIN_AIR_INTAKE: f64 = 300.0;
/// Highest air intake (L/h) covered by the calibration tables.
pub const MAX_AIR_INTAKE: f64 = 3180.0;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::Domain(format!("probability {value} is outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.0)
    }
}

/// Infection hazard per hour, `λ ≥ 0`.
///
/// Published coefficients are negative exponents (`f = 1 − e^{cz}`); the
/// rate stores `λ = −c` so that composition never has to track signs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct HazardRate(f64);

impl HazardRate {
    pub const ZERO: HazardRate = HazardRate(0.0);

    pub fn new(per_hour: f64) -> Result<Self> {
        if per_hour.is_finite() && per_hour >= 0.0 {
            Ok(HazardRate(per_hour))
        } else {
            Err(Error::Domain(format!("hazard rate {per_hour} must be finite and non-negative")))
        }
    }

    /// Builds the rate from an exponent coefficient `c ≤ 0`.
    pub fn from_exponent(c: f64) -> Result<Self> {
        HazardRate::new(-c)
    }

    pub fn per_hour(self) -> f64 {
        self.0
    }

    /// Multiplies the rate by a non-negative factor.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        HazardRate::new(self.0 * factor)
    }
}

/// Activity level, identified by average air inhalation in liters per hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityLevel {
    Sitting,
    Low,
    Moderate,
    Intense,
}

impl ActivityLevel {
    pub const ALL: [ActivityLevel; 4] = [
        ActivityLevel::Sitting,
        ActivityLevel::Low,
        ActivityLevel::Moderate,
        ActivityLevel::Intense,
    ];

    /// Air intake `E` in liters per hour.
    pub fn air_intake(self) -> f64 {
        match self {
            ActivityLevel::Sitting => 300.0,
            ActivityLevel::Low => 780.0,
            ActivityLevel::Moderate => 1740.0,
            ActivityLevel::Intense => 3180.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLevel::Sitting => "sitting",
            ActivityLevel::Low => "low",
            ActivityLevel::Moderate => "moderate",
            ActivityLevel::Intense => "intense",
        }
    }
}

impl fmt::Display for ActivityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sitting" | "resting" => Ok(ActivityLevel::Sitting),
            "low" => Ok(ActivityLevel::Low),
            "moderate" => Ok(ActivityLevel::Moderate),
            "intense" => Ok(ActivityLevel::Intense),
            other => Err(Error::Domain(format!("unknown activity level `{other}`"))),
        }
    }
}

/// Travel environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Walking,
    Subway,
    Brt,
    CityBus,
    Car,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Walking, Mode::Subway, Mode::Brt, Mode::CityBus, Mode::Car];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Walking => "walking",
            Mode::Subway => "subway",
            Mode::Brt => "brt",
            Mode::CityBus => "city_bus",
            Mode::Car => "car",
        }
    }

    /// Whether a segment in this mode can be measured in stops.
    pub fn is_transit(self) -> bool {
        matches!(self, Mode::Subway | Mode::Brt | Mode::CityBus)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "walking" | "walk" | "pedestrian" => Ok(Mode::Walking),
            "subway" | "metro" => Ok(Mode::Subway),
            "brt" => Ok(Mode::Brt),
            "city_bus" | "bus" => Ok(Mode::CityBus),
            "car" => Ok(Mode::Car),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

/// `k(E) = slope·E + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KLine {
    pub slope: f64,
    pub intercept: f64,
}

impl KLine {
    pub fn eval(&self, air_intake: f64) -> f64 {
        self.slope * air_intake + self.intercept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KModel {
    Line(KLine),
    Fixed { k: f64 },
}

/// Physical and epidemiological constants of one travel environment.
///
/// A profile carries both the pipeline inputs (k-model, capacity, mean
/// separation) and the published rate constant, so the two routes to a
/// hazard rate can be checked against each other.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvironmentProfile {
    pub mode: Mode,
    pub length_m: f64,
    pub width_m: f64,
    pub capacity: u32,
    pub k_model: KModel,
    /// Activity the canonical rate was computed for; `None` for fixed-k modes.
    pub canonical_activity: Option<ActivityLevel>,
    pub canonical_r_mean_m: f64,
    pub canonical_n_infected: f64,
    pub canonical_rate: HazardRate,
}

impl EnvironmentProfile {
    /// Occupants per square meter at capacity.
    pub fn density_x(&self) -> f64 {
        f64::from(self.capacity) / (self.length_m * self.width_m)
    }

    /// Calibration coefficient for the given activity.
    pub fn k_of_activity(&self, activity: ActivityLevel) -> Result<f64> {
        self.k_at_intake(activity.air_intake())
    }

    /// Calibration coefficient at an arbitrary air intake `E` (L/h).
    ///
    /// Intakes outside the calibrated range, or values where the line is no
    /// longer negative, are rejected rather than extrapolated.
    pub fn k_at_intake(&self, air_intake: f64) -> Result<f64> {
        match self.k_model {
            KModel::Fixed { k } => Ok(k),
            KModel::Line(line) => {
                let k = line.eval(air_intake);
                if !(MIN_AIR_INTAKE..=MAX_AIR_INTAKE).contains(&air_intake) || k >= 0.0 {
                    return Err(Error::CalibrationRange {
                        mode: self.mode.to_string(),
                        air_intake,
                        k,
                    });
                }
                Ok(k)
            }
        }
    }

    /// `λ = −k·n / r²` for this environment.
    pub fn environment_rate(
        &self,
        activity: ActivityLevel,
        n_infected: f64,
        r_mean_m: f64,
    ) -> Result<HazardRate> {
        if !(n_infected >= 0.0) {
            return Err(Error::Domain(format!("infected count {n_infected} must be non-negative")));
        }
        if r_mean_m == 0.0 {
            return Err(Error::Singularity("mean separation is zero".into()));
        }
        if !(r_mean_m > 0.0) {
            return Err(Error::Domain(format!("mean separation {r_mean_m} must be positive")));
        }
        let k = self.k_of_activity(activity)?;
        HazardRate::new(-k * n_infected / (r_mean_m * r_mean_m))
    }

    /// Rate recomputed from the canonical activity, carrier count and
    /// separation. Should agree with `canonical_rate` to about 1%.
    pub fn derived_canonical_rate(&self) -> Result<HazardRate> {
        // Fixed-k profiles ignore the activity.
        let activity = self.canonical_activity.unwrap_or(ActivityLevel::Low);
        self.environment_rate(activity, self.canonical_n_infected, self.canonical_r_mean_m)
    }
}

/// Share of the population currently infectious.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceModel {
    pub active_cases: u64,
    pub population: u64,
}

impl PrevalenceModel {
    pub fn new(active_cases: u64, population: u64) -> Result<Self> {
        if population == 0 {
            return Err(Error::Domain("population must be positive".into()));
        }
        if active_cases > population {
            return Err(Error::Domain(format!(
                "active cases {active_cases} exceed population {population}"
            )));
        }
        Ok(PrevalenceModel {
            active_cases,
            population,
        })
    }

    pub fn fraction(&self) -> f64 {
        self.active_cases as f64 / self.population as f64
    }
}

/// `active_cases / population`, validated.
pub fn prevalence_fraction(model: &PrevalenceModel) -> Result<f64> {
    PrevalenceModel::new(model.active_cases, model.population).map(|m| m.fraction())
}

/// Expected carriers among `capacity` occupants. Deliberately not rounded.
pub fn expected_infected(capacity: u32, prevalence: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prevalence) {
        return Err(Error::Domain(format!("prevalence {prevalence} is outside [0, 1]")));
    }
    Ok(f64::from(capacity) * prevalence)
}

/// `1 − e^{−λz}` for `z` hours of exposure.
pub fn hazard_probability(rate: HazardRate, hours: f64) -> Result<Probability> {
    if !(hours >= 0.0) {
        return Err(Error::Domain(format!("exposure duration {hours} h must be non-negative")));
    }
    // -expm1 keeps precision for tiny exposures.
    Ok(Probability((-(-rate.per_hour() * hours).exp_m1()).clamp(0.0, 1.0)))
}

/// Probability of at least one infection over independent exposures.
pub fn combine_probabilities<I>(probs: I) -> Probability
where
    I: IntoIterator<Item = Probability>,
{
    let total = probs
        .into_iter()
        .fold(0.0, |acc, p| acc + p.value() - acc * p.value());
    Probability(total.clamp(0.0, 1.0))
}

/// [`combine_probabilities`] over raw values, rejecting anything outside `[0, 1]`.
pub fn combine_route_probabilities(probs: &[f64]) -> Result<Probability> {
    let checked = probs
        .iter()
        .map(|&p| Probability::new(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_probabilities(checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line_profile(mode: Mode, slope: f64, intercept: f64) -> EnvironmentProfile {
        EnvironmentProfile {
            mode,
            length_m: 10.0,
            width_m: 2.0,
            capacity: 10,
            k_model: KModel::Line(KLine { slope, intercept }),
            canonical_activity: Some(ActivityLevel::Low),
            canonical_r_mean_m: 1.0,
            canonical_n_infected: 1.0,
            canonical_rate: HazardRate::ZERO,
        }
    }

    #[test]
    fn combine_worked_route() {
        let p = combine_route_probabilities(&[0.0006, 0.0777, 0.0054]).unwrap();
        assert_abs_diff_eq!(p.value(), 0.0833, epsilon = 1e-4);
    }

    #[test]
    fn combine_trivial_cases() {
        assert_eq!(combine_route_probabilities(&[]).unwrap(), Probability::ZERO);
        assert_eq!(combine_route_probabilities(&[0.37]).unwrap().value(), 0.37);
        assert_eq!(combine_route_probabilities(&[0.5, 0.5]).unwrap().value(), 0.75);
    }

    #[test]
    fn combine_rejects_out_of_range() {
        assert!(matches!(combine_route_probabilities(&[0.2, 1.5]), Err(Error::Domain(_))));
        assert!(matches!(combine_route_probabilities(&[-0.1]), Err(Error::Domain(_))));
        assert!(combine_route_probabilities(&[f64::NAN]).is_err());
    }

    #[test]
    fn hazard_examples() {
        let walk = HazardRate::new(0.025299).unwrap();
        assert_abs_diff_eq!(hazard_probability(walk, 1.6).unwrap().value(), 0.0397, epsilon = 1e-4);
        assert_eq!(hazard_probability(walk, 0.0).unwrap(), Probability::ZERO);
        let car = HazardRate::new(0.407105).unwrap();
        assert_abs_diff_eq!(
            hazard_probability(car, 28.0 / 60.0).unwrap().value(),
            0.1730,
            epsilon = 1e-4
        );
        assert!(matches!(hazard_probability(walk, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn hazard_rate_sign_convention() {
        assert_eq!(HazardRate::from_exponent(-0.4).unwrap().per_hour(), 0.4);
        assert!(HazardRate::from_exponent(0.4).is_err());
        assert!(HazardRate::new(f64::INFINITY).is_err());
    }

    #[test]
    fn k_line_rejects_extrapolation() {
        let walking = line_profile(Mode::Walking, -0.00143853, 0.71455401);
        assert_abs_diff_eq!(
            walking.k_of_activity(ActivityLevel::Moderate).unwrap(),
            -1.78849,
            epsilon = 1e-4
        );
        // The walking line crosses zero near E = 497 L/h.
        assert!(matches!(
            walking.k_of_activity(ActivityLevel::Sitting),
            Err(Error::CalibrationRange { .. })
        ));
        assert!(matches!(walking.k_at_intake(4000.0), Err(Error::CalibrationRange { .. })));
        assert!(walking.k_at_intake(299.0).is_err());
    }

    #[test]
    fn fixed_k_ignores_activity() {
        let mut car = line_profile(Mode::Car, 0.0, 0.0);
        car.k_model = KModel::Fixed { k: -2.729480 };
        for a in ActivityLevel::ALL {
            assert_eq!(car.k_of_activity(a).unwrap(), -2.729480);
        }
    }

    #[test]
    fn environment_rate_edges() {
        let bus = line_profile(Mode::CityBus, -0.00220276, 0.56565911);
        let rate = bus.environment_rate(ActivityLevel::Low, 0.69248, 2.98).unwrap();
        assert_abs_diff_eq!(rate.per_hour(), 0.089870, epsilon = 1e-6);
        assert_eq!(
            bus.environment_rate(ActivityLevel::Low, 0.0, 7.0).unwrap(),
            HazardRate::ZERO
        );
        assert!(matches!(
            bus.environment_rate(ActivityLevel::Low, 1.0, 0.0),
            Err(Error::Singularity(_))
        ));
        assert!(bus.environment_rate(ActivityLevel::Low, -1.0, 1.0).is_err());
    }

    #[test]
    fn prevalence() {
        let iran = PrevalenceModel::new(727_550, 84_055_000).unwrap();
        assert_abs_diff_eq!(prevalence_fraction(&iran).unwrap(), 0.008656, epsilon = 1e-6);
        assert_eq!(PrevalenceModel::new(0, 10).unwrap().fraction(), 0.0);
        assert_eq!(PrevalenceModel::new(10, 10).unwrap().fraction(), 1.0);
        assert!(PrevalenceModel::new(11, 10).is_err());
        assert!(PrevalenceModel::new(0, 0).is_err());
        let bad = PrevalenceModel {
            active_cases: 5,
            population: 4,
        };
        assert!(prevalence_fraction(&bad).is_err());
    }

    #[test]
    fn expected_infected_is_real_valued() {
        assert_abs_diff_eq!(expected_infected(180, 0.008656).unwrap(), 1.55808, epsilon = 1e-12);
        assert_abs_diff_eq!(expected_infected(150, 0.008656).unwrap(), 1.2984, epsilon = 1e-12);
        assert_eq!(expected_infected(0, 0.3).unwrap(), 0.0);
        assert!(expected_infected(10, 1.2).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("bus".parse::<Mode>().unwrap(), Mode::CityBus);
        assert_eq!("city_bus".parse::<Mode>().unwrap(), Mode::CityBus);
        assert!(matches!("tram".parse::<Mode>(), Err(Error::UnknownMode(_))));
        assert_eq!("Moderate".parse::<ActivityLevel>().unwrap(), ActivityLevel::Moderate);
    }
}
