//! Grid-walk disease-rate model.
//!
//! A susceptible walker crosses an `m × l` lattice on which `n` carriers sit
//! in fixed cells. In cell `j` the walker is exposed for `T_j` hours to a
//! hazard proportional to `Σᵢ 1/r_ij²`, so the per-cell infection
//! probability is `1 − e^{k·T_j·Σᵢ 1/r_ij²}` with `k < 0`. Cells are
//! independent, which makes the whole-path probability an exponential in
//! total exposure with a time-independent coefficient.
//!
//! Distances are Euclidean between cell centers, scaled by the cell size.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presets::toml_error;
use crate::risk_model::{combine_probabilities, HazardRate, Probability};

/// Minimum trial count accepted by [`simulate`].
pub const MIN_TRIALS: u64 = 1000;

const SIM_CHUNKS: u64 = 64;

/// Lattice cell; `x` runs along the walk (`0..m`), `y` across it (`0..l`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

impl From<[u32; 2]> for Cell {
    fn from([x, y]: [u32; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [u32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scene {
    length_cells: u32,
    width_cells: u32,
    cell_size_m: f64,
    carriers: Vec<Cell>,
    seed: u64,
}

impl Scene {
    pub fn new(
        length_cells: u32,
        width_cells: u32,
        cell_size_m: f64,
        carriers: Vec<Cell>,
        seed: u64,
    ) -> Result<Self> {
        if length_cells == 0 || width_cells == 0 {
            return Err(Error::Domain("grid dimensions must be positive".into()));
        }
        if !(cell_size_m > 0.0) || !cell_size_m.is_finite() {
            return Err(Error::Domain(format!("cell size {cell_size_m} must be positive")));
        }
        let mut seen = BTreeSet::new();
        for (i, c) in carriers.iter().enumerate() {
            if c.x >= length_cells || c.y >= width_cells {
                return Err(Error::validation(
                    format!("carriers[{i}]"),
                    format!("cell ({}, {}) lies outside the {length_cells}x{width_cells} grid", c.x, c.y),
                ));
            }
            if !seen.insert(*c) {
                return Err(Error::validation(
                    format!("carriers[{i}]"),
                    format!("duplicate carrier cell ({}, {})", c.x, c.y),
                ));
            }
        }
        Ok(Scene {
            length_cells,
            width_cells,
            cell_size_m,
            carriers,
            seed,
        })
    }

    pub fn length_cells(&self) -> u32 {
        self.length_cells
    }

    pub fn width_cells(&self) -> u32 {
        self.width_cells
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn carriers(&self) -> &[Cell] {
        &self.carriers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.length_cells && cell.y < self.width_cells
    }

    /// Center-to-center distance in meters.
    pub fn distance_m(&self, a: Cell, b: Cell) -> f64 {
        let dx = f64::from(a.x) - f64::from(b.x);
        let dy = f64::from(a.y) - f64::from(b.y);
        dx.hypot(dy) * self.cell_size_m
    }

    /// `Σᵢ 1/r_i²` over all carriers, seen from `cell`.
    pub fn inverse_square_sum(&self, cell: Cell) -> Result<f64> {
        if !self.contains(cell) {
            return Err(Error::Domain(format!(
                "walker cell ({}, {}) lies outside the grid",
                cell.x, cell.y
            )));
        }
        self.carriers.iter().try_fold(0.0, |acc, &carrier| {
            let r = self.distance_m(cell, carrier);
            if r == 0.0 {
                Err(Error::Singularity(format!(
                    "walker shares cell ({}, {}) with a carrier",
                    cell.x, cell.y
                )))
            } else {
                Ok(acc + 1.0 / (r * r))
            }
        })
    }
}

/// Places `n` carriers uniformly without replacement on an `m × l` grid.
pub fn build_scene(m: u32, l: u32, n: usize, cell_size_m: f64, seed: u64) -> Result<Scene> {
    build_scene_avoiding(m, l, n, cell_size_m, seed, &[])
}

/// As [`build_scene`], but never places a carrier on one of `avoid`.
pub fn build_scene_avoiding(
    m: u32,
    l: u32,
    n: usize,
    cell_size_m: f64,
    seed: u64,
    avoid: &[Cell],
) -> Result<Scene> {
    if m == 0 || l == 0 {
        return Err(Error::Domain("grid dimensions must be positive".into()));
    }
    let avoid: BTreeSet<Cell> = avoid.iter().copied().collect();
    let free: Vec<Cell> = (0..l)
        .flat_map(|y| (0..m).map(move |x| Cell { x, y }))
        .filter(|c| !avoid.contains(c))
        .collect();
    if n > free.len() {
        return Err(Error::Capacity {
            requested: n,
            available: free.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, free.len(), n).into_vec();
    picked.sort_unstable();
    let carriers = picked.into_iter().map(|i| free[i]).collect();
    Scene::new(m, l, cell_size_m, carriers, seed)
}

/// The walker's trajectory with the time spent in each cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    cells: Vec<Cell>,
    dwell_hours: Vec<f64>,
}

impl Path {
    pub fn new(cells: Vec<Cell>, dwell_hours: Vec<f64>) -> Result<Self> {
        if cells.len() != dwell_hours.len() {
            return Err(Error::Domain(format!(
                "{} cells but {} dwell times",
                cells.len(),
                dwell_hours.len()
            )));
        }
        if let Some(t) = dwell_hours.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::Domain(format!("dwell time {t} must be non-negative")));
        }
        Ok(Path { cells, dwell_hours })
    }

    /// Spreads `total_hours` evenly over `cells`.
    pub fn uniform(cells: Vec<Cell>, total_hours: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Domain("a path needs at least one cell".into()));
        }
        let dwell = vec![total_hours / cells.len() as f64; cells.len()];
        Path::new(cells, dwell)
    }

    /// Straight walk across the full grid length at row `y`.
    pub fn straight(scene: &Scene, y: u32, total_hours: f64) -> Result<Self> {
        if y >= scene.width_cells {
            return Err(Error::Domain(format!("row {y} lies outside the grid")));
        }
        Path::uniform((0..scene.length_cells).map(|x| Cell { x, y }).collect(), total_hours)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn dwell_hours(&self) -> &[f64] {
        &self.dwell_hours
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Total exposure `z`.
    pub fn total_hours(&self) -> f64 {
        self.dwell_hours.iter().sum()
    }

    /// Splits into `[0, at)` and `[at, len)`.
    pub fn split_at(&self, at: usize) -> (Path, Path) {
        let (c1, c2) = self.cells.split_at(at);
        let (t1, t2) = self.dwell_hours.split_at(at);
        (
            Path {
                cells: c1.to_vec(),
                dwell_hours: t1.to_vec(),
            },
            Path {
                cells: c2.to_vec(),
                dwell_hours: t2.to_vec(),
            },
        )
    }

    /// Same cells, every dwell time multiplied by `factor`.
    pub fn time_scaled(&self, factor: f64) -> Result<Path> {
        Path::new(
            self.cells.clone(),
            self.dwell_hours.iter().map(|t| t * factor).collect(),
        )
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k <= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("coefficient k = {k} must be finite and non-positive")))
    }
}

/// Infection probability for `dwell_hours` spent in `cell`.
pub fn per_cell_probability(scene: &Scene, cell: Cell, k: f64, dwell_hours: f64) -> Result<Probability> {
    check_k(k)?;
    if !(dwell_hours >= 0.0) {
        return Err(Error::Domain(format!("dwell time {dwell_hours} must be non-negative")));
    }
    let exposure = scene.inverse_square_sum(cell)?;
    Probability::new(-(k * dwell_hours * exposure).exp_m1())
}

/// `Σ_j k·T_j·Σᵢ 1/r_ij²`, the (non-positive) log survival along the path.
fn log_survival(scene: &Scene, path: &Path, k: f64) -> Result<f64> {
    check_k(k)?;
    path.cells
        .iter()
        .zip(&path.dwell_hours)
        .try_fold(0.0, |acc, (&cell, &t)| Ok(acc + k * t * scene.inverse_square_sum(cell)?))
}

/// `1 − Π_j (1 − p_j)` over the path's cells.
///
/// With uniform dwell `z/m` this is `1 − exp(Σ_j Σᵢ k·z / (m·r_ij²))`.
pub fn closed_form_path_probability(scene: &Scene, path: &Path, k: f64) -> Result<Probability> {
    let exponent = log_survival(scene, path, k)?;
    Probability::new(-exponent.exp_m1())
}

/// Time-independent hazard `λ = −Σ_j (T_j/z) Σᵢ k/r_ij²`, which for uniform
/// dwell is `−Σ_j Σᵢ k/(m·r_ij²)`.
pub fn effective_c(scene: &Scene, path: &Path, k: f64) -> Result<HazardRate> {
    let z = path.total_hours();
    if !(z > 0.0) {
        return Err(Error::Domain("path has zero total exposure".into()));
    }
    check_k(k)?;
    let weighted = path
        .cells
        .iter()
        .zip(&path.dwell_hours)
        .try_fold(0.0, |acc, (&cell, &t)| Ok::<_, Error>(acc + (t / z) * scene.inverse_square_sum(cell)?))?;
    HazardRate::new(-k * weighted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Monte Carlo over independent per-cell Bernoulli events.
///
/// A trial counts as infected when any cell on the path fires. Trials are
/// split into fixed chunks, each seeded as its own ChaCha stream, so results
/// are reproducible per seed regardless of thread count.
pub fn simulate(scene: &Scene, path: &Path, k: f64, trials: u64, seed: u64) -> Result<SimEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::Config(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let probs = path
        .cells
        .iter()
        .zip(&path.dwell_hours)
        .map(|(&cell, &t)| per_cell_probability(scene, cell, k, t).map(Probability::value))
        .collect::<Result<Vec<f64>>>()?;
    let infected: u64 = (0..SIM_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let n = trials / SIM_CHUNKS + u64::from(chunk < trials % SIM_CHUNKS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            (0..n)
                .filter(|_| probs.iter().any(|&p| rng.random::<f64>() < p))
                .count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let estimate = infected as f64 / trials as f64;
    Ok(SimEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        trials,
    })
}

/// Combining the halves of a split path with the route law.
pub fn split_path_probability(scene: &Scene, path: &Path, k: f64, at: usize) -> Result<Probability> {
    let (head, tail) = path.split_at(at);
    Ok(combine_probabilities([
        closed_form_path_probability(scene, &head, k)?,
        closed_form_path_probability(scene, &tail, k)?,
    ]))
}

// ---------------------------------------------------------------------------
// Scene fixtures

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFileRaw {
    length_cells: u32,
    width_cells: u32,
    cell_size_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    carriers: Option<Vec<Cell>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    random_carriers: Option<usize>,
    #[serde(default)]
    seed: u64,
    k: f64,
    path: PathRaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathRaw {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<Cell>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hours: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dwell_hours: Option<Vec<f64>>,
}

/// A scene, a walk across it, and the coefficient to evaluate it with.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFixture {
    pub scene: Scene,
    pub path: Path,
    pub k: f64,
}

/// The 60 × 40 grid with ten random carriers used as the default scene.
pub const DEFAULT_SCENE: &str = include_str!("../data/scenes/default.scene");

impl SceneFixture {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_SCENE).expect("built-in scene is valid")
    }

    /// Parses the TOML scene format documented in `data/scenes/default.scene`.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: SceneFileRaw = toml::from_str(text).map_err(|e| toml_error("scene", text, &e))?;
        let path_cells: Vec<Cell> = match (&raw.path.row, &raw.path.cells) {
            (Some(y), None) => (0..raw.length_cells).map(|x| Cell { x, y: *y }).collect(),
            (None, Some(cells)) => cells.clone(),
            _ => return Err(Error::validation("path", "give exactly one of `row` or `cells`")),
        };
        if path_cells.is_empty() {
            return Err(Error::validation("path", "path has no cells"));
        }
        let scene = match (raw.carriers, raw.random_carriers) {
            (Some(carriers), None) => Scene::new(
                raw.length_cells,
                raw.width_cells,
                raw.cell_size_m,
                carriers,
                raw.seed,
            )?,
            (None, Some(n)) => build_scene_avoiding(
                raw.length_cells,
                raw.width_cells,
                n,
                raw.cell_size_m,
                raw.seed,
                &path_cells,
            )?,
            _ => {
                return Err(Error::validation(
                    "carriers",
                    "give exactly one of `carriers` or `random_carriers`",
                ))
            }
        };
        if let Some(c) = path_cells.iter().find(|c| !scene.contains(**c)) {
            return Err(Error::validation(
                "path.cells",
                format!("cell ({}, {}) lies outside the grid", c.x, c.y),
            ));
        }
        let path = match (raw.path.hours, raw.path.dwell_hours) {
            (Some(hours), None) => Path::uniform(path_cells, hours)?,
            (None, Some(dwell)) => Path::new(path_cells, dwell)?,
            _ => return Err(Error::validation("path", "give exactly one of `hours` or `dwell_hours`")),
        };
        check_k(raw.k).map_err(|e| Error::validation("k", e.to_string()))?;
        Ok(SceneFixture {
            scene,
            path,
            k: raw.k,
        })
    }

    /// Writes the fixture with explicit carriers, cells and dwell times.
    pub fn to_toml(&self) -> String {
        let raw = SceneFileRaw {
            length_cells: self.scene.length_cells,
            width_cells: self.scene.width_cells,
            cell_size_m: self.scene.cell_size_m,
            carriers: Some(self.scene.carriers.clone()),
            random_carriers: None,
            seed: self.scene.seed,
            k: self.k,
            path: PathRaw {
                row: None,
                cells: Some(self.path.cells.clone()),
                hours: None,
                dwell_hours: Some(self.path.dwell_hours.clone()),
            },
        };
        toml::to_string(&raw).expect("scene serializes")
    }
}
