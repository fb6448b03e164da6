use routerisk::{parse_routes, Mode, PresetTable, Scorer, Segment};

const NESHAN: &str = include_str!("../data/routes/neshan.routes");
const BALAD: &str = include_str!("../data/routes/balad.routes");

const NESHAN_TOTALS: [f64; 6] = [0.0397, 0.0833, 0.0827, 0.0262, 0.0390, 0.1730];
const BALAD_TOTALS: [f64; 5] = [0.0433, 0.0829, 0.1025, 0.0239, 0.1674];

fn check(text: &str, expected: &[f64]) -> Vec<String> {
    let presets = PresetTable::builtin();
    let scorer = Scorer::canonical(&presets);
    let routes = parse_routes(text).unwrap();
    assert_eq!(routes.len(), expected.len());
    for (route, want) in routes.iter().zip(expected) {
        let got = scorer.route_probability(route).unwrap().total.value();
        assert!((got - want).abs() <= 5e-4, "{}: {got:.6} vs {want}", route.id);
    }
    scorer
        .rank_routes(&routes)
        .unwrap()
        .into_iter()
        .map(|r| r.route_id)
        .collect()
}

#[test]
fn neshan_totals_and_winner() {
    let order = check(NESHAN, &NESHAN_TOTALS);
    assert_eq!(order[0], "neshan-4");
    assert_eq!(order.last().unwrap(), "neshan-6");
}

#[test]
fn balad_totals_and_winner() {
    let order = check(BALAD, &BALAD_TOTALS);
    assert_eq!(order[0], "balad-4");
}

#[test]
fn worked_segments() {
    let presets = PresetTable::builtin();
    let scorer = Scorer::canonical(&presets);
    let cases = [
        (Segment::walk(126.0).unwrap(), 0.0006),
        (Segment::stops(Mode::CityBus, 18).unwrap(), 0.0778),
        (Segment::walk(1080.0).unwrap(), 0.0055),
        (Segment::stops(Mode::Brt, 9).unwrap(), 0.0235),
        (Segment::minutes(Mode::Car, 28.0).unwrap(), 0.1730),
    ];
    for (seg, want) in cases {
        let got = scorer.segment_probability(&seg).unwrap().value();
        assert!((got - want).abs() <= 1e-4, "{seg:?}: {got:.6} vs {want}");
    }
}
