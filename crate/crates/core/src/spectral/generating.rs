//! Generating systems: verification, multiplicity, and vector decomposition.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Interval, IntervalSet};
use crate::measure::{absolutely_continuous, DensityMeasure};
use crate::scalar::C64;

use super::carrier::{Carrier, HilbertVector};
use super::model::SpectralModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsOptions {
    /// Cross-correlation densities must stay below this, relative.
    pub orth_tol: f64,
    /// Density samples below this fraction of `max μ_{g_1}` count as zero.
    pub support_tol: f64,
    pub coherence_tol: f64,
    pub recon_tol: f64,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions { orth_tol: 1e-8, support_tol: 1e-10, coherence_tol: 1e-8, recon_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseCheck {
    pub clause: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub clauses: Vec<ClauseCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&ClauseCheck> {
        self.clauses.iter().filter(|c| !c.passed).collect()
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseCheck> {
        self.clauses.iter().find(|c| c.clause == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(
                f,
                "{:<16} {} (worst {:.3e}) {}",
                c.clause,
                if c.passed { "ok" } else { "FAILED" },
                c.worst,
                c.detail
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratingSystem {
    vectors: Vec<HilbertVector>,
    coeffs: Vec<Vec<C64>>,
    densities: Vec<DensityMeasure>,
    supports: Vec<IntervalSet>,
    tol: f64,
    pub type_chain_verified: bool,
    pub report: VerificationReport,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Verified(Box<GeneratingSystem>),
    Rejected(VerificationReport),
}

impl Verdict {
    pub fn into_result(self) -> Result<GeneratingSystem> {
        match self {
            Verdict::Verified(gs) => Ok(*gs),
            Verdict::Rejected(r) => Err(Error::Verification(r.to_string().trim_end().replace('\n', "; "))),
        }
    }

    pub fn report(&self) -> &VerificationReport {
        match self {
            Verdict::Verified(gs) => &gs.report,
            Verdict::Rejected(r) => r,
        }
    }
}

impl GeneratingSystem {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[HilbertVector] {
        &self.vectors
    }

    /// Node coefficients of `g_j` under the model's spectral map.
    pub fn coefficients(&self, j: usize) -> &[C64] {
        &self.coeffs[j]
    }

    /// `μ_{g_j}`.
    pub fn density(&self, j: usize) -> &DensityMeasure {
        &self.densities[j]
    }

    pub fn densities(&self) -> &[DensityMeasure] {
        &self.densities
    }

    /// `Λ(g_j)` as a finite union of closed intervals of grid points.
    pub fn support(&self, j: usize) -> &IntervalSet {
        &self.supports[j]
    }

    /// Absolute zero threshold for densities.
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn in_support(&self, j: usize, k: usize) -> bool {
        self.densities[j].density()[k] >= self.tol
    }
}

fn support_of(grid: &Grid1D, d: &[f64], tol: f64) -> IntervalSet {
    let mut parts = Vec::new();
    let mut start: Option<usize> = None;
    for k in 0..=d.len() {
        let on = k < d.len() && d[k] >= tol;
        match (on, start) {
            (true, None) => start = Some(k),
            (false, Some(a)) => {
                parts.push(Interval::closed(grid.point(a), grid.point(k - 1)));
                start = None;
            }
            _ => {}
        }
    }
    IntervalSet::from_intervals(parts)
}

fn clause(name: &'static str, passed: bool, worst: f64, detail: impl Into<String>) -> ClauseCheck {
    ClauseCheck { clause: name, passed, worst, detail: detail.into() }
}

/// Checks spectral orthogonality, the type chain, coherence of the measures
/// on nested supports, and reconstruction of the probe family.
pub fn verify_generating_system(
    model: &SpectralModel,
    candidates: Vec<HilbertVector>,
    opts: GsOptions,
) -> Result<Verdict> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty generating system".into()));
    }
    if model.is_atomic() {
        return Err(Error::AtomicSpectrum("generating systems need a density layout".into()));
    }
    let coeffs: Vec<Vec<C64>> = candidates.iter().map(|g| model.transform(g)).collect::<Result<_>>()?;
    let densities: Vec<DensityMeasure> = coeffs
        .iter()
        .map(|b| model.measure_of_products(&model.products(b, b)).to_density(1e-12))
        .collect::<Result<_>>()?;
    let maxes: Vec<f64> = densities.iter().map(|d| d.density().iter().copied().fold(0.0, f64::max)).collect();
    if maxes[0] <= 0.0 {
        return Err(Error::InvalidArgument("first generator is the zero vector".into()));
    }
    let tol = opts.support_tol * maxes[0];
    let mut report = VerificationReport::default();

    let mut worst = 0.0f64;
    for i in 0..coeffs.len() {
        for j in i + 1..coeffs.len() {
            let c = model.measure_of_products(&model.products(&coeffs[i], &coeffs[j]));
            let scale = (maxes[i] * maxes[j]).sqrt().max(f64::MIN_POSITIVE);
            let m = c.density().iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
            worst = worst.max(m);
        }
    }
    report.clauses.push(clause("orthogonality", worst <= opts.orth_tol, worst, ""));

    let mut chain_ok = true;
    let mut broken = String::new();
    for j in 1..densities.len() {
        let o = absolutely_continuous(&densities[j], &densities[j - 1], tol)?;
        if !o.first_ll_second() {
            chain_ok = false;
            broken = format!("type of g_{} not dominated by g_{}", j + 1, j);
            break;
        }
    }
    report.clauses.push(clause("type-chain", chain_ok, if chain_ok { 0.0 } else { 1.0 }, broken));

    let mut coh = 0.0f64;
    for d in &densities[1..] {
        for (a, b) in d.density().iter().zip(densities[0].density()) {
            if *a >= tol {
                coh = coh.max((a - b).abs() / maxes[0]);
            }
        }
    }
    report.clauses.push(clause("coherence", coh <= opts.coherence_tol, coh, ""));

    let supports = densities.iter().map(|d| support_of(model.grid(), d.density(), tol)).collect();
    let gs = GeneratingSystem {
        vectors: candidates,
        coeffs,
        densities,
        supports,
        tol,
        type_chain_verified: chain_ok,
        report: VerificationReport::default(),
    };

    let car = model.carrier();
    let mut rec = 0.0f64;
    let mut detail = String::new();
    for (p, h) in probe_vectors(car).iter().enumerate() {
        let err = match decompose_vector(model, &gs, h).and_then(|c| reconstruct(model, &gs, &c)) {
            Ok(back) => car.norm(&back.sub(h)) / car.norm(h),
            Err(e) => {
                detail = format!("probe {}: {e}", p + 1);
                f64::INFINITY
            }
        };
        rec = rec.max(err);
    }
    report.clauses.push(clause("reconstruction", rec <= opts.recon_tol, rec, detail));

    if report.passed() {
        Ok(Verdict::Verified(Box::new(GeneratingSystem { report, ..gs })))
    } else {
        Ok(Verdict::Rejected(report))
    }
}

/// Coefficient functions `h̃_j = dμ_{g_j,h}/dμ_{g_j}` on the spectral grid.
pub fn decompose_vector(model: &SpectralModel, gs: &GeneratingSystem, h: &HilbertVector) -> Result<Vec<Vec<C64>>> {
    let bh = model.transform(h)?;
    let dh = model.measure_of_products(&model.products(&bh, &bh));
    let hmax = dh.density().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let grid = model.grid();
    let mut out = Vec::with_capacity(gs.len());
    for j in 0..gs.len() {
        let cross = model.measure_of_products(&model.products(gs.coefficients(j), &bh));
        let dj = gs.density(j).density();
        let jmax = dj.iter().copied().fold(0.0, f64::max);
        let leak = 1e-6 * (jmax * hmax).sqrt();
        let mut coef = vec![C64::new(0.0, 0.0); grid.len()];
        for k in 0..grid.len() {
            let c = cross.density()[k];
            if dj[k] >= gs.tolerance() {
                coef[k] = c / dj[k];
            } else if c.norm() > leak.max(gs.tolerance()) {
                return Err(Error::AbsoluteContinuity {
                    point: grid.point(k),
                    what: format!("μ_(g_{},h) charges a μ_(g_{}) null point", j + 1, j + 1),
                });
            }
        }
        out.push(coef);
    }
    Ok(out)
}

/// `⊕_j J_{c_j} g_j`.
pub fn reconstruct(model: &SpectralModel, gs: &GeneratingSystem, coefs: &[Vec<C64>]) -> Result<HilbertVector> {
    if coefs.len() != gs.len() {
        return Err(Error::Mismatch(format!("{} coefficient functions for {} generators", coefs.len(), gs.len())));
    }
    let mut b = vec![C64::new(0.0, 0.0); model.nodes().len()];
    for (j, c) in coefs.iter().enumerate() {
        let at = model.multiplier_at_nodes(c)?;
        for ((z, a), g) in b.iter_mut().zip(&at).zip(gs.coefficients(j)) {
            *z += a * g;
        }
    }
    model.synthesize(&b)
}

/// Piece of the multiplicity function; all but the first are open on the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplicityPiece {
    pub lo: f64,
    pub hi: f64,
    pub left_open: bool,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityFunction {
    pub grid: Grid1D,
    pub labels: Vec<usize>,
    pub pieces: Vec<MultiplicityPiece>,
    pub essential_sup: usize,
}

impl MultiplicityFunction {
    /// `Λ_k`: the pieces where `N = k`.
    pub fn level_set(&self, k: usize) -> Vec<MultiplicityPiece> {
        self.pieces.iter().filter(|p| p.label == k).copied().collect()
    }

    pub fn at(&self, x: f64) -> Option<usize> {
        self.grid.index_of(x).map(|i| self.labels[i]).or_else(|| {
            let (i, t) = self.grid.cell_of(x)?;
            Some(if t <= 0.5 { self.labels[i] } else { self.labels[i + 1] })
        })
    }
}

/// `N(λ) = #{j : λ ∈ Λ(g_j)}`, assembled into runs of equal label.
pub fn multiplicity_function(gs: &GeneratingSystem) -> MultiplicityFunction {
    let grid = *gs.density(0).grid();
    let labels: Vec<usize> = (0..grid.len()).map(|k| (0..gs.len()).filter(|j| gs.in_support(*j, k)).count()).collect();
    let mut pieces: Vec<MultiplicityPiece> = Vec::new();
    for (k, l) in labels.iter().enumerate() {
        match pieces.last_mut() {
            Some(p) if p.label == *l => p.hi = grid.point(k),
            _ => pieces.push(MultiplicityPiece {
                lo: if k == 0 { grid.point(0) } else { grid.point(k - 1) },
                hi: grid.point(k),
                left_open: k > 0,
                label: *l,
            }),
        }
    }
    let essential_sup = labels.iter().copied().max().unwrap_or(0);
    MultiplicityFunction { grid, labels, pieces, essential_sup }
}

const PROBE_POLY: [[f64; 3]; 8] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [1.0, 0.5, -0.2],
    [0.5, -1.0, 0.3],
    [1.0, 0.0, -0.5],
    [-0.3, 0.7, 0.1],
    [0.8, 0.2, 0.4],
    [0.2, -0.4, -0.3],
];
const PROBE_SHIFT: [f64; 8] = [0.0, 0.5, -0.5, 1.0, -1.0, 0.25, -0.75, 0.6];

/// Fixed family of 8 smooth probes: polynomial times Gaussian envelope per channel.
pub fn probe_vectors(car: &Carrier) -> Vec<HilbertVector> {
    let g = car.grid();
    let mid = 0.5 * (g.lower() + g.upper());
    let scale = (g.upper() - g.lower()) / 8.0;
    (0..8)
        .map(|j| {
            car.vector(|x, c| {
                let t = (x - mid) / scale + 0.3 * c as f64;
                let [a, b, q] = PROBE_POLY[j];
                let env = (-(t - PROBE_SHIFT[j]).powi(2) / 2.0).exp();
                C64::from_polar((a + b * t + q * t * t) * env, 0.4 * (j * (c + 1)) as f64)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::carrier::MultiplicityProfile;
    use crate::spectral::map::{FiberUnitary, Label};

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn block_model(n: usize) -> SpectralModel {
        let g = Grid1D::new(0.0, 1.0, n).unwrap();
        let car = Carrier::new(DensityMeasure::lebesgue(g), &MultiplicityProfile::parse("2@0:0.5, 1@0.5:1").unwrap())
            .unwrap();
        SpectralModel::multiplication(car)
    }

    #[test]
    fn simple_spectrum_verified() {
        let m = SpectralModel::multiplication(Carrier::lebesgue(Grid1D::new(0.0, 1.0, 201).unwrap(), 1));
        let g = m.carrier().vector(|_, _| re(1.0));
        let gs = verify_generating_system(&m, vec![g], GsOptions::default()).unwrap().into_result().unwrap();
        assert!(gs.type_chain_verified);
        let mf = multiplicity_function(&gs);
        assert_eq!(mf.essential_sup, 1);
        assert_eq!(mf.pieces.len(), 1);
        let leb = DensityMeasure::lebesgue(*m.grid());
        let o = absolutely_continuous(gs.density(0), &leb, 1e-12).unwrap();
        assert_eq!(o.relation, crate::measure::TypeRelation::Equivalent);
    }

    #[test]
    fn block_model_chain_and_multiplicity() {
        let m = block_model(101);
        let car = m.carrier();
        let g1 = car.vector(|_, c| re(if c == 0 { 1.0 } else { 0.0 }));
        let g2 = car.vector(|_, c| re(if c == 1 { 1.0 } else { 0.0 }));
        let gs = verify_generating_system(&m, vec![g1.clone(), g2.clone()], GsOptions::default())
            .unwrap()
            .into_result()
            .unwrap();
        let mf = multiplicity_function(&gs);
        assert_eq!(mf.essential_sup, 2);
        assert_eq!(mf.pieces.len(), 2);
        assert_eq!((mf.pieces[0].lo, mf.pieces[0].hi, mf.pieces[0].label), (0.0, 0.5, 2));
        assert_eq!((mf.pieces[1].lo, mf.pieces[1].hi, mf.pieces[1].label, mf.pieces[1].left_open), (0.5, 1.0, 1, true));
        assert_eq!(mf.at(0.75), Some(1));
        assert_eq!(mf.at(0.5), Some(2));

        match verify_generating_system(&m, vec![g2, g1], GsOptions::default()).unwrap() {
            Verdict::Rejected(r) => assert!(!r.clause("type-chain").unwrap().passed),
            Verdict::Verified(_) => panic!("reversed chain accepted"),
        }
    }

    #[test]
    fn degenerate_second_generator() {
        let m = SpectralModel::multiplication(Carrier::lebesgue(Grid1D::new(0.0, 1.0, 51).unwrap(), 1));
        let g1 = m.carrier().vector(|_, _| re(1.0));
        let gs = verify_generating_system(&m, vec![g1, m.carrier().zero()], GsOptions::default())
            .unwrap()
            .into_result()
            .unwrap();
        let mf = multiplicity_function(&gs);
        assert_eq!(mf.essential_sup, 1);
        assert!(mf.level_set(2).is_empty());
        assert!(gs.support(1).is_empty());
    }

    #[test]
    fn incomplete_system_fails_reconstruction() {
        let m = SpectralModel::multiplication(Carrier::lebesgue(Grid1D::new(0.0, 1.0, 51).unwrap(), 2));
        let g1 = m.carrier().vector(|_, c| re(if c == 0 { 1.0 } else { 0.0 }));
        match verify_generating_system(&m, vec![g1], GsOptions::default()).unwrap() {
            Verdict::Rejected(r) => {
                assert!(!r.clause("reconstruction").unwrap().passed);
                assert!(r.clause("orthogonality").unwrap().passed);
            }
            Verdict::Verified(_) => panic!("one generator cannot span two channels"),
        }
    }

    #[test]
    fn decompose_examples() {
        let m = SpectralModel::multiplication(Carrier::lebesgue(Grid1D::new(0.0, 1.0, 201).unwrap(), 1));
        let car = m.carrier();
        let g = car.vector(|_, _| re(1.0));
        let gs = verify_generating_system(&m, vec![g.clone()], GsOptions::default()).unwrap().into_result().unwrap();
        let c = decompose_vector(&m, &gs, &g).unwrap();
        assert!(c[0].iter().all(|z| (z - re(1.0)).norm() < 1e-14));
        let lam = car.vector(|x, _| re(x));
        let c = decompose_vector(&m, &gs, &lam).unwrap();
        for (x, z) in m.grid().points().iter().zip(&c[0]) {
            assert!((z - re(*x)).norm() < 1e-8);
        }
        let phi: Vec<C64> = m.grid().points().iter().map(|x| C64::new(x.cos(), *x)).collect();
        let h = m.apply_jphi(&phi, &g).unwrap();
        let c = decompose_vector(&m, &gs, &h).unwrap();
        for (a, b) in c[0].iter().zip(&phi) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rotated_generators_on_two_channels() {
        let car = Carrier::lebesgue(Grid1D::new(0.0, 1.0, 101).unwrap(), 2);
        let q = SpectralModel::relabelled(car.clone(), FiberUnitary::Identity, vec![Label::Identity, Label::Identity]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g1 = car.vector(|_, _| re(s));
        let g2 = car.vector(|_, c| re(if c == 0 { s } else { -s }));
        let gs = verify_generating_system(&q, vec![g1, g2], GsOptions::default()).unwrap().into_result().unwrap();
        assert_eq!(multiplicity_function(&gs).essential_sup, 2);
    }
}
