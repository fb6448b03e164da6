use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_dataset, fit_line, k_from_single, CalibrationPoint, FitResult, ObservationRow};
use crate::error::{Error, Result};
use crate::presets::toml_error;
use crate::risk_model::{ActivityLevel, Mode};

const BUILTIN_MANIFEST: &str = include_str!("../../data/calibration/manifest.toml");

const BUILTIN_TABLES: &[(&str, &str)] = &[
    ("table01.txt", include_str!("../../data/calibration/table01.txt")),
    ("table02.txt", include_str!("../../data/calibration/table02.txt")),
    ("table03.txt", include_str!("../../data/calibration/table03.txt")),
    ("table04.txt", include_str!("../../data/calibration/table04.txt")),
    ("table06.txt", include_str!("../../data/calibration/table06.txt")),
    ("table07.txt", include_str!("../../data/calibration/table07.txt")),
    ("table08.txt", include_str!("../../data/calibration/table08.txt")),
    ("table09.txt", include_str!("../../data/calibration/table09.txt")),
    ("table10.txt", include_str!("../../data/calibration/table10.txt")),
    ("table11.txt", include_str!("../../data/calibration/table11.txt")),
    ("table12.txt", include_str!("../../data/calibration/table12.txt")),
    ("table13.txt", include_str!("../../data/calibration/table13.txt")),
    ("table14.txt", include_str!("../../data/calibration/table14.txt")),
    ("table15.txt", include_str!("../../data/calibration/table15.txt")),
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: String,
    separation_m: f64,
    #[serde(default)]
    table: Vec<ManifestTable>,
    #[serde(default)]
    regression_override: Vec<RegressionOverride>,
    #[serde(default)]
    published: Vec<PublishedFit>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestTable {
    file: String,
    environment: String,
    activity: ActivityLevel,
    room_area_m2: f64,
}

/// Replaces one row's infection percentage in the regression input only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionOverride {
    pub file: String,
    /// 1-based data row within the file.
    pub row: usize,
    pub infection_percent: f64,
}

/// Reference fit to compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedFit {
    pub environment: Mode,
    pub slope: f64,
    pub intercept: f64,
    pub pearson: f64,
    pub r_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub line: usize,
    pub hours: f64,
    pub infection_percent: f64,
    pub published_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationTable {
    pub file: String,
    pub environment: Mode,
    pub activity: ActivityLevel,
    pub room_area_m2: f64,
    pub rows: Vec<TableRow>,
}

/// All calibration tables plus their manifest metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSet {
    pub version: String,
    pub separation_m: f64,
    pub tables: Vec<CalibrationTable>,
    pub overrides: Vec<RegressionOverride>,
    pub published: Vec<PublishedFit>,
}

/// Parses `hours percent [published_k]` rows; `#` starts a comment line.
pub fn parse_table(name: &str, text: &str) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let at = || format!("{name} line {line_no}");
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(Error::parse(at(), format!("expected 2 or 3 columns, found {}", cols.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(at(), format!("{what} `{s}` is not a number")))
        };
        let hours = num(cols[0], "hours")?;
        let infection_percent = num(cols[1], "infection percent")?;
        if !(hours > 0.0) {
            return Err(Error::parse(at(), "hours must be positive"));
        }
        if !(infection_percent > 0.0 && infection_percent < 100.0) {
            return Err(Error::parse(at(), "infection percent must lie strictly inside (0, 100)"));
        }
        let published_k = cols.get(2).map(|s| num(s, "published k")).transpose()?;
        rows.push(TableRow {
            line: line_no,
            hours,
            infection_percent,
            published_k,
        });
    }
    Ok(rows)
}

/// One recomputed-vs-published coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionCheck {
    pub file: String,
    pub row: usize,
    pub hours: f64,
    pub infection_percent: f64,
    pub published_k: f64,
    pub recomputed_k: f64,
}

impl CalibrationSet {
    /// The compiled-in tables.
    pub fn builtin() -> Self {
        Self::from_sources(BUILTIN_MANIFEST, |file| {
            BUILTIN_TABLES
                .iter()
                .find(|(name, _)| *name == file)
                .map(|(_, text)| text.to_string())
                .ok_or_else(|| format!("{file}: not bundled"))
        })
        .expect("built-in calibration tables are valid")
    }

    /// Loads `manifest.toml` and every table it lists from `dir`.
    ///
    /// Problems with individual tables are collected so that one error
    /// names every missing or malformed file.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("manifest.toml");
        let manifest = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        Self::from_sources(&manifest, |file| {
            let path = dir.join(file);
            std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))
        })
    }

    fn from_sources<F>(manifest: &str, mut read: F) -> Result<Self>
    where
        F: FnMut(&str) -> std::result::Result<String, String>,
    {
        let manifest: Manifest = toml::from_str(manifest).map_err(|e| toml_error("manifest.toml", manifest, &e))?;
        if !(manifest.separation_m > 0.0) {
            return Err(Error::validation("separation_m", "must be positive"));
        }
        if manifest.table.is_empty() {
            return Err(Error::Config("calibration manifest lists no tables".into()));
        }
        let mut tables = Vec::new();
        let mut problems = Vec::new();
        for entry in manifest.table {
            let environment: Mode = match entry.environment.parse() {
                Ok(m) => m,
                Err(e) => {
                    problems.push(format!("{}: {e}", entry.file));
                    continue;
                }
            };
            match read(&entry.file).and_then(|text| parse_table(&entry.file, &text).map_err(|e| e.to_string())) {
                Ok(rows) if rows.is_empty() => problems.push(format!("{}: no data rows", entry.file)),
                Ok(rows) => tables.push(CalibrationTable {
                    file: entry.file,
                    environment,
                    activity: entry.activity,
                    room_area_m2: entry.room_area_m2,
                    rows,
                }),
                Err(msg) => problems.push(msg),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(format!("calibration tables unusable: {}", problems.join("; "))));
        }
        for o in &manifest.regression_override {
            let known = tables
                .iter()
                .find(|t| t.file == o.file)
                .is_some_and(|t| (1..=t.rows.len()).contains(&o.row));
            if !known || !(o.infection_percent > 0.0 && o.infection_percent < 100.0) {
                return Err(Error::validation(
                    "regression_override",
                    format!("{} row {} does not name a valid table row", o.file, o.row),
                ));
            }
        }
        Ok(CalibrationSet {
            version: manifest.version,
            separation_m: manifest.separation_m,
            tables,
            overrides: manifest.regression_override,
            published: manifest.published,
        })
    }

    /// Environments present, in first-seen order.
    pub fn environments(&self) -> Vec<Mode> {
        let mut modes = Vec::new();
        for t in &self.tables {
            if !modes.contains(&t.environment) {
                modes.push(t.environment);
            }
        }
        modes
    }

    pub fn tables_for(&self, mode: Mode) -> impl Iterator<Item = &CalibrationTable> {
        self.tables.iter().filter(move |t| t.environment == mode)
    }

    /// Observation groups for `mode`, one per table. With `apply_overrides`
    /// the manifest's regression overrides replace the printed percentages.
    pub fn observations(&self, mode: Mode, apply_overrides: bool) -> Vec<Vec<ObservationRow>> {
        self.tables_for(mode)
            .map(|t| {
                t.rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let percent = self
                            .overrides
                            .iter()
                            .find(|o| apply_overrides && o.file == t.file && o.row == i + 1)
                            .map_or(row.infection_percent, |o| o.infection_percent);
                        ObservationRow {
                            duration_hours: row.hours,
                            infection_fraction: percent / 100.0,
                            room_area_m2: t.room_area_m2,
                            separation_m: self.separation_m,
                            activity: t.activity,
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Regression input for `mode` (overrides applied).
    pub fn dataset(&self, mode: Mode) -> Result<Vec<CalibrationPoint>> {
        build_dataset(&self.observations(mode, true))
    }

    /// The tables exactly as printed, without overrides.
    pub fn printed_dataset(&self, mode: Mode) -> Result<Vec<CalibrationPoint>> {
        build_dataset(&self.observations(mode, false))
    }

    pub fn fit(&self, mode: Mode) -> Result<FitResult> {
        fit_line(&self.dataset(mode)?)
    }

    pub fn published_for(&self, mode: Mode) -> Option<&PublishedFit> {
        self.published.iter().find(|p| p.environment == mode)
    }

    /// Recomputes every tabulated `k` from its printed `(hours, percent)`.
    pub fn inversion_audit(&self) -> Result<Vec<InversionCheck>> {
        let mut checks = Vec::new();
        for t in &self.tables {
            for (i, row) in t.rows.iter().enumerate() {
                let Some(published_k) = row.published_k else { continue };
                checks.push(InversionCheck {
                    file: t.file.clone(),
                    row: i + 1,
                    hours: row.hours,
                    infection_percent: row.infection_percent,
                    published_k,
                    recomputed_k: k_from_single(self.separation_m, row.hours, row.infection_percent / 100.0)?,
                });
            }
        }
        Ok(checks)
    }
}
