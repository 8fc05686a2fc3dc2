//! Browser bindings: each export takes plain numbers and returns JSON.

use ketbridge::differentiation::{error_trail, martingale_estimate, DyadicPartitionTree};
use ketbridge::experiments::{bundled, list_scenarios, parse_scenario, run};
use ketbridge::{DensityMeasure, Grid1D, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Names of the scenarios that `run_bundled` accepts.
#[wasm_bindgen]
pub fn scenario_names() -> String {
    json!(list_scenarios()).to_string()
}

/// Dyadic quotients of `2x dx` against `dx` on `[0, 1]` at `x`.
#[wasm_bindgen]
pub fn rn_ladder(x: f64, depth: usize, n: usize) -> String {
    respond((|| {
        let g = Grid1D::new(0.0, 1.0, n)?;
        let nu = DensityMeasure::from_fn(g, |t| 2.0 * t)?;
        let tree = DyadicPartitionTree::new(DensityMeasure::lebesgue(g), depth)?;
        let est = martingale_estimate(&nu, &tree, x)?;
        let rows: Vec<Value> = error_trail(&est.values, 2.0 * x)
            .into_iter()
            .zip(&est.cells)
            .map(|((level, v, err), c)| json!({ "level": level, "value": v, "error": err, "width": c.hi - c.lo }))
            .collect();
        Ok(json!({ "exact": 2.0 * x, "rows": rows }))
    })())
}

/// Ket coordinate of the Gaussian `exp(-(x - c)²/2s²)` in the momentum
/// basis at `xi`, approached through `levels` shrinking windows.
#[wasm_bindgen]
pub fn fourier_ket(s: f64, c: f64, xi: f64, levels: usize) -> String {
    respond((|| {
        let text = format!(
            "grid.lower = -31.41592653589793\ngrid.period = 62.83185307179586\ngrid.n = 2048\n\
             p.gen.1 = one\nq.unitary = dft\nq.gen.1 = gauss:45\nq.reference = lebesgue\n\
             sweep.ket.flavor = vitali-ket\nsweep.ket.xi = {xi}\nsweep.ket.probe = gauss:{s}:{c}\n\
             sweep.ket.contraction = 3.2, 0.5, {levels}\nsweep.ket.expect = fourier\nsweep.ket.metric = rel\n\
             sweep.ket.tol = 1e-2\n"
        );
        let cfg = parse_scenario(&text)?;
        let report = run(&cfg, None)?;
        let sweep = &report.sweeps[0];
        let Some(rec) = sweep.records.first() else {
            return Ok(json!({ "error": sweep.note }));
        };
        let rows: Vec<Value> = rec
            .rows
            .iter()
            .zip(&rec.masses)
            .map(|(r, m)| json!({ "n": r.n, "re": r.value.re, "im": r.value.im, "error": r.abs_err, "mass": m }))
            .collect();
        Ok(json!({
            "oracle": [rec.reference.re, rec.reference.im],
            "relative_error": rec.final_relative_error(),
            "rows": rows,
        }))
    })())
}

/// Runs a bundled scenario and returns its report text and verdict.
#[wasm_bindgen]
pub fn run_bundled(name: &str) -> String {
    respond((|| {
        let report = run(&bundled(name)?, None)?;
        let sweeps: Vec<Value> = report
            .sweeps
            .iter()
            .map(|s| json!({ "name": s.name, "flavor": s.flavor.name(), "worst": s.worst_error, "passed": s.passed }))
            .collect();
        Ok(json!({ "passed": report.passed(), "report": report.to_text(), "sweeps": sweeps }))
    })())
}
