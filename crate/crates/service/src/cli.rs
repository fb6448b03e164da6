//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::api::{self, ApiError, PrevalenceInput, ScoreOptions, ScoreRequest, SweepRequest};
use routerisk::calibration::{CalibrationSet, FitResult, PublishedFit};
use routerisk::grid_sim::{closed_form_path_probability, effective_c, simulate, SceneFixture};
use routerisk::route_engine::sweep_csv;
use routerisk::{parse_routes, Error, Mode, PresetTable};

#[derive(Debug, Parser)]
#[command(name = "routerisk", version, about = "Airborne infection risk for multi-modal routes")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Environment preset file (TOML); defaults to the built-in set.
    #[arg(long, global = true, value_name = "FILE")]
    pub presets: Option<PathBuf>,
    /// Share of the population that is infectious.
    #[arg(long, global = true, value_name = "FRACTION")]
    pub prevalence: Option<f64>,
    /// Recompute rates from the k-lines instead of using published constants.
    #[arg(long, global = true)]
    pub derived: bool,
    /// Seed for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score and rank the routes in a route file.
    Score {
        file: PathBuf,
        /// Print only the id of the lowest-risk route.
        #[arg(long)]
        best: bool,
    },
    /// Fit k(E) lines from calibration tables.
    Calibrate {
        /// Directory holding manifest.toml and the tables; built-in set if omitted.
        dir: Option<PathBuf>,
        /// Compare against the published fits and fail on a breach.
        #[arg(long)]
        check: bool,
        /// Restrict to one environment.
        #[arg(long, value_name = "MODE")]
        env: Option<String>,
    },
    /// Compare the grid Monte Carlo with the closed-form path probability.
    Simulate {
        /// Scene file; the built-in 60 x 40 scene if omitted.
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Walking risk against corridor length for several densities, as CSV.
    Sweep {
        #[arg(long, default_value_t = 4.0)]
        width: f64,
        #[arg(long, default_value_t = 1.0)]
        hours: f64,
        /// Comma-separated lengths in meters.
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<f64>>,
        /// Comma-separated densities in persons per square meter.
        #[arg(long, value_delimiter = ',')]
        densities: Option<Vec<f64>>,
        #[arg(long)]
        activity: Option<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "ROUTERISK_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(1, e.to_string())
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::new(1, e.message())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(1, e.to_string())
    }
}

/// `x` with at least six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.6}");
    }
    let decimals = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn load_presets(global: &GlobalArgs) -> Result<PresetTable, CliError> {
    match &global.presets {
        Some(path) => Ok(PresetTable::from_path(path)?),
        None => Ok(PresetTable::builtin()),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(1, format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let presets = load_presets(&cli.global)?;
    match cli.command {
        Command::Score { file, best } => score(&presets, &cli.global, &read(&file)?, best, out),
        Command::Calibrate { dir, check, env } => calibrate(dir.as_deref(), check, env.as_deref(), out),
        Command::Simulate { scene, trials } => {
            let fixture = match scene {
                Some(path) => SceneFixture::parse(&read(&path)?)?,
                None => SceneFixture::builtin(),
            };
            simulate_scene(&fixture, trials, cli.global.seed, out)
        }
        Command::Sweep {
            width,
            hours,
            lengths,
            densities,
            activity,
        } => {
            let req = SweepRequest {
                width_m: width,
                hours,
                lengths,
                densities,
                activity,
                prevalence: cli.global.prevalence.map(PrevalenceInput::Fraction),
            };
            let resp = api::sweep(&presets, &req)?;
            out.write_all(sweep_csv(&resp.points).as_bytes())?;
            Ok(())
        }
        Command::Serve { port, host } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::http::serve(Arc::new(presets), (host, port).into()))?;
            Ok(())
        }
    }
}

/// Scores a route document. An empty document exits with code 2.
pub fn score(
    presets: &PresetTable,
    global: &GlobalArgs,
    text: &str,
    best: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let routes = parse_routes(text)?;
    if routes.is_empty() {
        return Err(CliError::new(2, "no routes"));
    }
    let request = ScoreRequest {
        prevalence: global.prevalence.map(PrevalenceInput::Fraction),
        derived: global.derived,
        ..ScoreRequest::default()
    };
    let options = ScoreOptions::from_request(presets, &request)?;
    let resp = api::rank(presets, &routes, &options)?;
    if best {
        writeln!(out, "{}", resp.reports[0].route_id)?;
        return Ok(());
    }
    writeln!(
        out,
        "# presets {}, prevalence {}, {:?} rates",
        resp.preset_version,
        sig6(resp.prevalence),
        resp.rate_mode
    )?;
    writeln!(out, "{:<4} {:<16} {:>12}  label", "rank", "route", "total")?;
    for (rank, report) in resp.reports.iter().enumerate() {
        writeln!(
            out,
            "{:<4} {:<16} {:>12}  {}",
            rank + 1,
            report.route_id,
            sig6(report.total.value()),
            report.label
        )?;
        for seg in &report.per_segment {
            writeln!(
                out,
                "       {:>2} {:<9} {:>10} h  rate {:>10}  p {:>12}",
                seg.index,
                seg.mode.name(),
                sig6(seg.duration_hours),
                sig6(seg.rate.per_hour()),
                sig6(seg.probability.value())
            )?;
        }
    }
    Ok(())
}

const FIT_TOLERANCES: [(&str, f64); 4] = [("slope", 1e-7), ("intercept", 1e-4), ("pearson", 1e-4), ("r_score", 1e-3)];

/// Breaches of the published fit, one message per quantity.
pub fn check_fit(fit: &FitResult, published: &PublishedFit) -> Vec<String> {
    let pairs = [
        (fit.slope, published.slope),
        (fit.intercept, published.intercept),
        (fit.pearson, published.pearson),
        (fit.r_score, published.r_score),
    ];
    FIT_TOLERANCES
        .iter()
        .zip(pairs)
        .filter(|(&(_, tol), (got, want))| (got - want).abs() > tol)
        .map(|(&(name, tol), (got, want))| format!("{name} {} vs {} (tolerance {tol:e})", sig6(got), sig6(want)))
        .collect()
}

pub fn calibrate(dir: Option<&Path>, check: bool, env: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    let set = match dir {
        Some(d) => CalibrationSet::load_dir(d)?,
        None => CalibrationSet::builtin(),
    };
    let modes = match env {
        Some(name) => {
            let mode: Mode = name.parse()?;
            if !set.environments().contains(&mode) {
                return Err(CliError::new(1, format!("no calibration tables for {mode}")));
            }
            vec![mode]
        }
        None => set.environments(),
    };
    let mut breaches = Vec::new();
    writeln!(
        out,
        "{:<9} {:>14} {:>12} {:>10} {:>9} {:>6}{}",
        "env",
        "slope",
        "intercept",
        "pearson",
        "r_score",
        "rows",
        if check { "  check" } else { "" }
    )?;
    for mode in modes {
        let fit = set.fit(mode)?;
        let verdict = if check {
            match set.published_for(mode) {
                Some(published) => {
                    let problems = check_fit(&fit, published);
                    let v = if problems.is_empty() { "  ok" } else { "  FAIL" };
                    breaches.extend(problems.into_iter().map(|p| format!("{mode}: {p}")));
                    v
                }
                None => {
                    breaches.push(format!("{mode}: no published fit to compare against"));
                    "  FAIL"
                }
            }
        } else {
            ""
        };
        writeln!(
            out,
            "{:<9} {:>14.8e} {:>12} {:>10} {:>9} {:>6}{verdict}",
            mode.name(),
            fit.slope,
            sig6(fit.intercept),
            sig6(fit.pearson),
            sig6(fit.r_score),
            fit.points
        )?;
    }
    if breaches.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(1, format!("calibration check failed: {}", breaches.join("; "))))
    }
}

pub fn simulate_scene(fixture: &SceneFixture, trials: u64, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let SceneFixture { scene, path, k } = fixture;
    let closed = closed_form_path_probability(scene, path, *k)?.value();
    let c = effective_c(scene, path, *k)?.per_hour();
    let mc = simulate(scene, path, *k, trials, seed)?;
    let sigmas = if mc.std_error > 0.0 {
        (mc.estimate - closed).abs() / mc.std_error
    } else {
        0.0
    };
    writeln!(
        out,
        "scene        {} x {} cells, {} carriers, path {} cells, {} h",
        scene.length_cells(),
        scene.width_cells(),
        scene.carriers().len(),
        path.len(),
        sig6(path.total_hours())
    )?;
    writeln!(out, "k            {}", sig6(*k))?;
    writeln!(out, "effective_c  {} per hour", sig6(c))?;
    writeln!(out, "closed_form  {}", sig6(closed))?;
    writeln!(out, "monte_carlo  {} ± {} ({} trials, seed {seed})", sig6(mc.estimate), sig6(mc.std_error), mc.trials)?;
    writeln!(out, "deviation    {} standard errors", sig6(sigmas))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.026229), "0.0262290");
        assert_eq!(sig6(1.25), "1.25000");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(-0.925089), "-0.925089");
        assert_eq!(sig6(0.0), "0.000000");
    }
}
