//! Running a scenario: property suites, sweeps, CSV and report output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::differentiation::{make_contraction, DyadicPartitionTree};
use crate::direct_integral::parseval_check;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, IntervalSet};
use crate::rigging::TestFunction;
use crate::scalar::C64;
use crate::spectral::probe_vectors;
use crate::transform::{
    cross_measure_identity, decomposable_transform, ket_transform_limit, martingale_transform,
    simple_spectrum_transform, vitali_transform_limit, Argument, ConvergenceRecord, Flavor, TransformScenario,
    CSV_HEADER,
};

use super::build::{build_scenario, change_of_variables, fourier_quadrature, probe};
use super::config::{Expect, Metric, ScenarioConfig, SweepSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub name: String,
    pub flavor: Flavor,
    pub csv: String,
    pub records: Vec<ConvergenceRecord>,
    /// Worst final error over the sweep's targets, in the configured metric.
    pub worst_error: f64,
    pub form_gap: f64,
    pub expected_failure: bool,
    pub passed: bool,
    pub note: String,
}

impl SweepOutcome {
    pub fn row_count(&self) -> usize {
        self.records.iter().map(|r| r.rows.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub properties: Vec<PropertyResult>,
    pub sweeps: Vec<SweepOutcome>,
    pub wall_time: Duration,
    pub config_echo: String,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed) && self.sweeps.iter().all(|s| s.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("scenario {}\n", self.name);
        let verdict = |b: bool| if b { "pass" } else { "FAIL" };
        s.push_str("\nproperties\n");
        for p in &self.properties {
            let _ = writeln!(s, "  {:<28} {:>12.3e}  tol {:.1e}  {}", p.name, p.value, p.tol, verdict(p.passed));
        }
        s.push_str("\nsweeps\n");
        for w in &self.sweeps {
            let _ = writeln!(
                s,
                "  {:<16} {:<19} rows {:>4}  worst {:>10.3e}  forms {:>9.2e}  {}{}",
                w.name,
                w.flavor.name(),
                w.row_count(),
                w.worst_error,
                w.form_gap,
                verdict(w.passed),
                if w.note.is_empty() { String::new() } else { format!("  ({})", w.note) }
            );
        }
        let _ = writeln!(s, "\noverall {}  wall {:.2}s", verdict(self.passed()), self.wall_time.as_secs_f64());
        s.push_str("\nconfig\n");
        for line in self.config_echo.lines() {
            let _ = writeln!(s, "  {line}");
        }
        s
    }
}

/// Short name for the error kinds a sweep may expect.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::AtomicSpectrum(_) => "atomic",
        Error::Inapplicable(_) => "inapplicable",
        Error::NotAProjection(_) => "not-a-projection",
        Error::Decomposition(_) => "decomposition",
        Error::Excluded(_) => "excluded",
        Error::Channel { .. } => "channel",
        Error::Resolution(_) => "resolution",
        Error::NotTestFunction(_) => "not-test-function",
        Error::DegenerateContraction { .. } => "degenerate",
        _ => "other",
    }
}

fn thirds(g: &Grid1D) -> Vec<IntervalSet> {
    let (a, b) = (g.lower(), g.upper());
    let w = b - a;
    vec![
        IntervalSet::closed(a, b),
        IntervalSet::closed(a, a + 0.5 * w),
        IntervalSet::half_open(a + w / 3.0, a + 2.0 * w / 3.0),
        IntervalSet::closed(a + 0.6 * w, b),
    ]
}

fn property(name: &str, value: f64, tol: f64) -> PropertyResult {
    PropertyResult { name: name.to_string(), value, tol, passed: value <= tol }
}

fn properties(cfg: &ScenarioConfig, sc: &TransformScenario) -> Result<Vec<PropertyResult>> {
    let mut out = Vec::new();
    let pc = sc.p_checks();
    out.push(property("p-iso unitarity", pc.unitarity, cfg.tol.iso));
    out.push(property("p-iso intertwining", pc.intertwining, cfg.tol.iso));
    out.push(property("p-iso round trip", pc.round_trip, cfg.tol.recon));
    if let Some(qc) = sc.q_checks() {
        out.push(property("q-iso unitarity", qc.unitarity, cfg.tol.iso));
        out.push(property("q-iso intertwining", qc.intertwining, cfg.tol.iso));
        out.push(property("q-iso round trip", qc.round_trip, cfg.tol.recon));
    }
    out.push(PropertyResult {
        name: if sc.commuting() { "commutator (commuting)" } else { "commutator (non-commuting)" }.into(),
        value: sc.commutator_defect(),
        tol: f64::INFINITY,
        passed: true,
    });
    let p = sc.p();
    let car = p.model().carrier();
    let probes = probe_vectors(car);
    let mut lemma = 0.0f64;
    for f in &probes[..4] {
        for h in &probes[..4] {
            let scale = car.norm(f) * car.norm(h);
            for set in thirds(sc.q_model().grid()) {
                let (a, b) = cross_measure_identity(sc, f, h, &set)?.residuals();
                lemma = lemma.max(a.max(b) / scale);
            }
        }
    }
    out.push(property("cross-measure identity", lemma, cfg.tol.lemma));
    let mut parseval = 0.0f64;
    for f in &probes[..4] {
        for h in &probes[..4] {
            let scale = car.norm(f) * car.norm(h);
            for set in thirds(p.model().grid()) {
                parseval = parseval.max(parseval_check(p, f, h, &set)? / scale);
            }
        }
    }
    out.push(property("parseval", parseval, cfg.tol.parseval));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = p.model().grid();
    let mut calculus = 0.0f64;
    for _ in 0..4 {
        let coefs: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let span = g.upper() - g.lower();
        let phi: Vec<C64> = g
            .points()
            .iter()
            .map(|x| {
                let t = std::f64::consts::PI * (x - g.lower()) / span;
                coefs.iter().enumerate().map(|(j, (a, b))| C64::new(a * (j as f64 * t).cos(), b * (j as f64 * t).sin())).sum()
            })
            .collect();
        let q = g.trapezoid_weights();
        for f in &probes[..3] {
            for h in &probes[..3] {
                let lhs = car.inner(f, &p.model().apply_jphi(&phi, h)?);
                let d = p.model().correlation_measure(f, h)?;
                let rhs: C64 = d.density().iter().zip(&phi).zip(&q).map(|((d, ph), w)| d * ph * *w).sum();
                calculus = calculus.max((lhs - rhs).norm() / (car.norm(f) * car.norm(h)));
            }
        }
    }
    out.push(property("calculus (f, J_phi g)", calculus, cfg.tol.lemma));
    Ok(out)
}

fn oracle(cfg: &ScenarioConfig, spec: &SweepSpec, h: &crate::spectral::HilbertVector, k: usize, xi: f64) -> Result<Option<(C64, &'static str)>> {
    let c = match spec.expect {
        Expect::Fourier => (fourier_quadrature(h, k, xi), "fourier-quadrature"),
        Expect::ChangeOfVariables => (change_of_variables(cfg, &spec.probe, k, xi)?, "change-of-variables"),
        _ => return Ok(None),
    };
    Ok(Some(c))
}

fn record_for(cfg: &ScenarioConfig, sc: &TransformScenario, spec: &SweepSpec, xi: f64, k: usize) -> Result<ConvergenceRecord> {
    let p = sc.p();
    let h = probe(p.model().carrier(), &spec.probe);
    let contraction = || {
        let (r0, ratio, n) = spec.contraction.expect("validated");
        make_contraction(xi, r0, ratio, n, sc.q_iso()?.reference())
    };
    let tree = || DyadicPartitionTree::new(sc.q_iso()?.reference().clone(), spec.depth.expect("validated"));
    let phi = || TestFunction::verify(p, h.clone());
    let mut rec = match spec.flavor {
        Flavor::VitaliHilbert => vitali_transform_limit(sc, xi, k, &h, &contraction()?, &spec.l)?,
        Flavor::VitaliKet => ket_transform_limit(sc, xi, k, &phi()?, &contraction()?, &spec.l)?,
        Flavor::MartingaleHilbert => martingale_transform(sc, xi, k, Argument::Hilbert(&h), &tree()?, &spec.l)?,
        Flavor::MartingaleKet => martingale_transform(sc, xi, k, Argument::Ket(&phi()?), &tree()?, &spec.l)?,
        Flavor::SimpleHilbert => simple_spectrum_transform(sc, xi, k, Argument::Hilbert(&h), &contraction()?)?,
        Flavor::SimpleKet => simple_spectrum_transform(sc, xi, k, Argument::Ket(&phi()?), &contraction()?)?,
        Flavor::Decomposable => decomposable_transform(sc, xi, k, &h, &contraction()?, &spec.l)?,
    };
    if let Some((v, name)) = oracle(cfg, spec, &h, k, xi)? {
        rec.rebase(v, name);
    }
    Ok(rec)
}

fn run_sweep(cfg: &ScenarioConfig, sc: &TransformScenario, spec: &SweepSpec) -> SweepOutcome {
    let mut out = SweepOutcome {
        name: spec.name.clone(),
        flavor: spec.flavor,
        csv: format!("{CSV_HEADER}\n"),
        records: Vec::new(),
        worst_error: 0.0,
        form_gap: 0.0,
        expected_failure: matches!(spec.expect, Expect::Rejection(_)),
        passed: true,
        note: String::new(),
    };
    for xi in &spec.xi {
        for k in &spec.k {
            match (record_for(cfg, sc, spec, *xi, *k), &spec.expect) {
                (Ok(rec), Expect::Rejection(kind)) => {
                    out.passed = false;
                    out.note = format!("expected {kind} rejection, sweep ran");
                    out.records.push(rec);
                }
                (Ok(rec), _) => {
                    let err = match spec.metric {
                        Metric::Absolute => rec.final_error(),
                        Metric::Relative => rec.final_relative_error(),
                    };
                    out.worst_error = out.worst_error.max(err);
                    out.form_gap = out.form_gap.max(rec.form_gap);
                    rec.write_csv_rows(&mut out.csv);
                    out.records.push(rec);
                }
                (Err(e), Expect::Rejection(kind)) => {
                    if error_kind(&e) == kind {
                        out.note = format!("expected rejection: {e}");
                    } else {
                        out.passed = false;
                        out.note = format!("expected {kind}, got {e}");
                    }
                }
                (Err(e), _) => {
                    out.passed = false;
                    out.worst_error = f64::INFINITY;
                    out.note = e.to_string();
                }
            }
        }
    }
    if !out.expected_failure && (out.worst_error > spec.tol || out.form_gap > cfg.tol.forms) {
        out.passed = false;
    }
    out
}

/// Builds the scenario and runs the property suites and sweeps. Sweeps run
/// on separate threads where available and come back in configuration order.
pub fn run(cfg: &ScenarioConfig, only: Option<&str>) -> Result<RunReport> {
    let (report, wall) = timed(|| run_untimed(cfg, only));
    report.map(|r| RunReport { wall_time: wall, ..r })
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    (f(), Duration::ZERO)
}

fn run_untimed(cfg: &ScenarioConfig, only: Option<&str>) -> Result<RunReport> {
    let sweeps: Vec<&SweepSpec> = cfg.sweeps.iter().filter(|s| only.is_none_or(|o| o == s.name)).collect();
    if let Some(o) = only {
        if sweeps.is_empty() {
            return Err(Error::Config { key: "--only".into(), msg: format!("no sweep named `{o}`") });
        }
    }
    let sc = build_scenario(cfg)?;
    let properties = properties(cfg, &sc)?;
    #[cfg(not(target_arch = "wasm32"))]
    let outcomes = std::thread::scope(|s| {
        let handles: Vec<_> = sweeps.iter().map(|spec| s.spawn(|| run_sweep(cfg, &sc, spec))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread panicked")).collect::<Vec<_>>()
    });
    #[cfg(target_arch = "wasm32")]
    let outcomes: Vec<_> = sweeps.iter().map(|spec| run_sweep(cfg, &sc, spec)).collect();
    Ok(RunReport {
        name: cfg.name.clone(),
        properties,
        sweeps: outcomes,
        wall_time: Duration::ZERO,
        config_echo: cfg.source.clone(),
    })
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `<sweep>.csv` per sweep and `report.txt`; returns the written paths.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for s in &report.sweeps {
        let p = dir.join(format!("{}.csv", s.name));
        write_atomic(&p, &s.csv)?;
        paths.push(p);
    }
    let p = dir.join("report.txt");
    write_atomic(&p, &report.to_text())?;
    paths.push(p);
    Ok(paths)
}
