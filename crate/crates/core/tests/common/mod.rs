//! Property checks shared by the proptest suite and the acceptance run.
#![allow(dead_code)]

use std::sync::LazyLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use routerisk::geometry::{mean_distance_closed, Rectangle};
use routerisk::grid_sim::{
    build_scene_avoiding, closed_form_path_probability, effective_c, split_path_probability, Cell, Path,
};
use routerisk::route_engine::walking_sweep;
use routerisk::{
    combine_probabilities, hazard_probability, parse_routes, serialize_routes, ActivityLevel, HazardRate,
    Mode, PresetTable, Probability, Route, Scorer, Segment,
};

pub type Check = Result<(), TestCaseError>;

pub static PRESETS: LazyLock<PresetTable> = LazyLock::new(PresetTable::builtin);

fn prob(p: f64) -> Probability {
    Probability::new(p).unwrap()
}

fn f(rate: f64, hours: f64) -> f64 {
    hazard_probability(HazardRate::new(rate).unwrap(), hours).unwrap().value()
}

fn close(a: f64, b: f64, tol: f64) -> Check {
    prop_assert!((a - b).abs() <= tol, "{a} vs {b} (diff {:e}, tol {tol:e})", (a - b).abs());
    Ok(())
}

pub fn combination_law(p: f64, q: f64) -> Check {
    let got = combine_probabilities([prob(p), prob(q)]).value();
    close(got, p + q - p * q, 1e-12)?;
    close(got, 1.0 - (1.0 - p) * (1.0 - q), 1e-12)
}

pub fn associative_commutative(ps: Vec<f64>, split: usize) -> Check {
    let probs: Vec<Probability> = ps.iter().map(|&p| prob(p)).collect();
    let whole = combine_probabilities(probs.iter().copied()).value();
    let reversed = combine_probabilities(probs.iter().rev().copied()).value();
    let at = split % (probs.len() + 1);
    let grouped = combine_probabilities([
        combine_probabilities(probs[..at].iter().copied()),
        combine_probabilities(probs[at..].iter().copied()),
    ])
    .value();
    let oracle = 1.0 - ps.iter().map(|p| 1.0 - p).product::<f64>();
    close(whole, reversed, 1e-12)?;
    close(whole, grouped, 1e-12)?;
    close(whole, oracle, 1e-12)
}

pub fn time_composition(rate: f64, a: f64, b: f64) -> Check {
    let joined = f(rate, a + b);
    let composed = combine_probabilities([prob(f(rate, a)), prob(f(rate, b))]).value();
    close(joined, composed, 1e-12)
}

pub fn scaling_law(rate: f64, z: f64) -> Check {
    for k in [2, 3, 10] {
        let piecewise = 1.0 - (1.0 - f(rate, z / f64::from(k))).powi(k);
        close(piecewise, f(rate, z), 1e-10)?;
    }
    Ok(())
}

pub fn monotone_in_time_and_rate(rate: f64, z: f64, bump: f64) -> Check {
    prop_assert!(f(rate, z * (1.0 + bump)) > f(rate, z));
    prop_assert!(f(rate * (1.0 + bump), z) > f(rate, z));
    Ok(())
}

pub fn monotone_in_density(length: f64, density: f64, bump: f64) -> Check {
    let walking = PRESETS.get(Mode::Walking).unwrap();
    let pts = walking_sweep(
        walking,
        4.0,
        &[length],
        &[density, density * (1.0 + bump)],
        1.0,
        ActivityLevel::Moderate,
        PRESETS.canonical_prevalence.fraction(),
    )
    .unwrap();
    prop_assert!(pts[1].probability > pts[0].probability, "{pts:?}");
    Ok(())
}

fn total(segments: Vec<Segment>) -> f64 {
    let scorer = Scorer::canonical(&PRESETS);
    let route = Route::new("r", "", segments).unwrap();
    scorer.route_probability(&route).unwrap().total.value()
}

pub fn segment_order_invariance(segments: Vec<Segment>, rotate: usize) -> Check {
    let mut shuffled = segments.clone();
    shuffled.reverse();
    let n = shuffled.len();
    shuffled.rotate_left(rotate % n);
    close(total(segments), total(shuffled), 1e-12)
}

pub fn walking_split_invariance(mut segments: Vec<Segment>, d: f64, frac: f64, at: usize) -> Check {
    let at = at % (segments.len() + 1);
    let mut split = segments.clone();
    segments.insert(at, Segment::walk(d).unwrap());
    split.insert(at, Segment::walk(d * frac).unwrap());
    split.insert(at + 1, Segment::walk(d - d * frac).unwrap());
    close(total(segments), total(split), 1e-12)
}

pub fn dominance(segments: Vec<Segment>, extra: Segment) -> Check {
    let before = total(segments.clone());
    let mut more = segments;
    more.push(extra);
    prop_assert!(total(more) > before);
    Ok(())
}

pub fn route_file_round_trip(segments: Vec<Segment>, label: String) -> Check {
    let routes = vec![
        Route::new("first", label.clone(), segments.clone()).unwrap(),
        Route::new("second", label, segments.into_iter().rev().collect()).unwrap(),
    ];
    let text = serialize_routes(&routes);
    let parsed = parse_routes(&text).unwrap();
    prop_assert_eq!(&parsed, &routes);
    prop_assert_eq!(serialize_routes(&parsed), text);
    Ok(())
}

pub fn geometry_symmetry_and_scaling(a: f64, b: f64, s: f64) -> Check {
    let d = mean_distance_closed(&Rectangle::new(a, b).unwrap());
    let swapped = mean_distance_closed(&Rectangle::new(b, a).unwrap());
    let scaled = mean_distance_closed(&Rectangle::new(a * s, b * s).unwrap());
    close(swapped / d, 1.0, 1e-9)?;
    close(scaled / (s * d), 1.0, 1e-9)
}

fn grid_case(m: u32, l: u32, n: usize, seed: u64) -> (routerisk::grid_sim::Scene, Path) {
    let row = l / 2;
    let avoid: Vec<Cell> = (0..m).map(|x| Cell::new(x, row)).collect();
    let scene = build_scene_avoiding(m, l, n, 1.0, seed, &avoid).unwrap();
    let path = Path::uniform(avoid, 1.0).unwrap();
    (scene, path)
}

pub fn grid_split_and_doubling(m: u32, l: u32, n: usize, seed: u64, k: f64, at: usize, z: f64) -> Check {
    let (scene, path) = grid_case(m, l, n, seed);
    let path = path.time_scaled(z).unwrap();
    let whole = closed_form_path_probability(&scene, &path, k).unwrap().value();
    let split = split_path_probability(&scene, &path, k, at % (path.len() + 1)).unwrap().value();
    close(whole, split, 1e-12)?;
    let doubled = closed_form_path_probability(&scene, &path.time_scaled(2.0).unwrap(), k)
        .unwrap()
        .value();
    close(doubled, 1.0 - (1.0 - whole).powi(2), 1e-12)?;
    let c1 = effective_c(&scene, &path, k).unwrap().per_hour();
    let c2 = effective_c(&scene, &path.time_scaled(3.7).unwrap(), k).unwrap().per_hour();
    close(c1, c2, 1e-12 * c1.max(1.0))
}

pub fn segment_strategy() -> impl Strategy<Value = Segment> {
    prop_oneof![
        (0.0..5000.0f64).prop_map(|d| Segment::walk(d).unwrap()),
        (0..30u32, prop::sample::select(vec![Mode::Subway, Mode::Brt, Mode::CityBus]))
            .prop_map(|(n, mode)| Segment::stops(mode, n).unwrap()),
        (0.0..40.0f64).prop_map(|m| Segment::minutes(Mode::Car, m).unwrap()),
        (0.0..1.5f64, prop::sample::select(Mode::ALL.to_vec()))
            .prop_map(|(h, mode)| Segment::hours(mode, h).unwrap()),
    ]
}

pub fn positive_segment_strategy() -> impl Strategy<Value = Segment> {
    prop_oneof![
        (10.0..5000.0f64).prop_map(|d| Segment::walk(d).unwrap()),
        (1..30u32, prop::sample::select(vec![Mode::Subway, Mode::Brt, Mode::CityBus]))
            .prop_map(|(n, mode)| Segment::stops(mode, n).unwrap()),
        (1.0..40.0f64).prop_map(|m| Segment::minutes(Mode::Car, m).unwrap()),
    ]
}

pub fn segments_strategy() -> impl Strategy<Value = Vec<Segment>> {
    prop::collection::vec(segment_strategy(), 1..8)
}
