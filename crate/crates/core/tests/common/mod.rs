#![allow(dead_code)]

use ketbridge::experiments::{build_scenario, bundled, parse_scenario, ScenarioConfig};
use ketbridge::transform::TransformScenario;
use ketbridge::{Grid1D, IntervalSet, C64};

pub fn scenario(name: &str) -> (ScenarioConfig, TransformScenario) {
    let cfg = bundled(name).unwrap();
    let sc = build_scenario(&cfg).unwrap();
    (cfg, sc)
}

pub fn scenario_text(text: &str) -> (ScenarioConfig, TransformScenario) {
    let cfg = parse_scenario(text).unwrap();
    let sc = build_scenario(&cfg).unwrap();
    (cfg, sc)
}

/// Simple spectrum on `[0, 1]`, Q = P, both generated by `1`.
pub fn simple_identity(n: usize) -> String {
    format!("grid.lower = 0\ngrid.upper = 1\ngrid.n = {n}\np.gen.1 = one\nq.unitary = identity\nq.gen.1 = one\n")
}

/// Six sets spread over a grid, including the whole domain.
pub fn six_sets(g: &Grid1D) -> Vec<IntervalSet> {
    let (a, b) = (g.lower(), g.upper());
    let at = |t: f64| a + t * (b - a);
    vec![
        IntervalSet::closed(a, b),
        IntervalSet::closed(a, at(0.5)),
        IntervalSet::half_open(at(0.5), b),
        IntervalSet::closed(at(0.2), at(0.35)),
        IntervalSet::closed(at(0.1), at(0.3)).union(&IntervalSet::closed(at(0.6), at(0.9))),
        IntervalSet::empty(),
    ]
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}
