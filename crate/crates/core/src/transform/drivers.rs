use nalgebra::DMatrix;

use crate::differentiation::{oscillation_flag, ContractionSequence, DyadicPartitionTree};
use crate::direct_integral::{DecomposableOperator, MeasurableField};
use crate::error::{Error, Result};
use crate::grid::IntervalSet;
use crate::rigging::{KetFunctional, TestFunction};
use crate::scalar::C64;
use crate::spectral::{decompose_vector, HilbertVector};

use super::functional::{pairing, ApproxFunctional};
use super::record::{ConvergenceRecord, Flavor};
use super::scenario::TransformScenario;

/// Vector argument of a functional: any `h ∈ ℋ`, or a verified test function.
#[derive(Debug, Clone, Copy)]
pub enum Argument<'a> {
    Hilbert(&'a HilbertVector),
    Ket(&'a TestFunction),
}

impl Argument<'_> {
    fn vector(&self) -> &HilbertVector {
        match self {
            Argument::Hilbert(h) => h,
            Argument::Ket(phi) => phi.vector(),
        }
    }
}

pub const FORM_TOL: f64 = 1e-8;

fn check_schedule(sc: &TransformScenario, ls: &[usize]) -> Result<Vec<usize>> {
    let m = sc.p_multiplicity();
    if ls.is_empty() {
        return Ok((1..=m).collect());
    }
    if let Some(l) = ls.iter().find(|l| **l == 0 || **l > m) {
        return Err(Error::InvalidArgument(format!("truncation index {l} outside 1..={m}")));
    }
    Ok(ls.to_vec())
}

/// Independent Q-side value the functional should approach.
fn reference(sc: &TransformScenario, xi: f64, k: usize, arg: Argument<'_>) -> Result<(C64, &'static str)> {
    match arg {
        Argument::Hilbert(h) => Ok((sc.q_coordinate(h, xi, k)?, "q-forward")),
        Argument::Ket(phi) => {
            let qi = sc.q_iso()?;
            let on_q = TestFunction::verify(qi, phi.vector().clone())?;
            Ok((KetFunctional::new(qi, xi, k)?.evaluate(&on_q)?, "q-ket"))
        }
    }
}

fn functional<'a>(sc: &'a TransformScenario, xi: f64, k: usize, set: &IntervalSet, n: usize) -> Result<ApproxFunctional<'a>> {
    ApproxFunctional::new(sc, xi, k, set.clone()).map_err(|e| match e {
        Error::InvalidArgument(_) => Error::DegenerateContraction { index: n },
        e => e,
    })
}

/// Gap between two forms at the full partial sum; truncations in `l` only
/// agree when the fibers are diagonal.
fn max_gap(a: &[C64], b: &[C64]) -> f64 {
    match (a.last(), b.last()) {
        (Some(x), Some(y)) => (x - y).norm(),
        _ => 0.0,
    }
}

fn sweep(
    sc: &TransformScenario,
    flavor: Flavor,
    xi: f64,
    k: usize,
    arg: Argument<'_>,
    sets: &[IntervalSet],
    ls: &[usize],
) -> Result<ConvergenceRecord> {
    let ls = check_schedule(sc, ls)?;
    let (refv, name) = reference(sc, xi, k, arg)?;
    let mut rec = ConvergenceRecord::new(flavor, xi, k, refv, name);
    let p = sc.p();
    let v = p.forward(arg.vector())?;
    let forms_apply = match arg {
        Argument::Ket(_) => TestFunction::verify(p, sc.q_generator(k)?.clone()).is_ok(),
        Argument::Hilbert(_) => true,
    };
    let mut finals = Vec::with_capacity(sets.len());
    for (i, set) in sets.iter().enumerate() {
        let af = functional(sc, xi, k, set, i + 1)?;
        let vals = match arg {
            Argument::Hilbert(h) => {
                let vals = af.gamma_tilde(&v);
                rec.form_gap = rec.form_gap.max(max_gap(&vals, &af.gamma_tilde_alt(h)?));
                vals
            }
            Argument::Ket(phi) => {
                let vals = af.gamma_ket(&v);
                let q_phi = sc.q_model().apply_projection(set, phi.vector())?;
                if forms_apply && TestFunction::verify(p, q_phi).is_ok() {
                    let (a, b) = af.gamma_ket_forms(phi, &v)?;
                    rec.form_gap = rec.form_gap.max(max_gap(&a, &b)).max(max_gap(&vals, &b));
                }
                vals
            }
        };
        let dn = af.dual_norms();
        for l in &ls {
            rec.push(i + 1, *l, vals[l - 1], dn[l - 1]);
        }
        finals.push(vals[vals.len() - 1]);
        rec.masses.push(af.mass);
    }
    rec.oscillating = oscillation_flag(&finals);
    Ok(rec)
}

fn contraction_sets(cs: &ContractionSequence, xi: f64) -> Result<&[IntervalSet]> {
    if (cs.center - xi).abs() > 1e-12 * (1.0 + xi.abs()) {
        return Err(Error::InvalidArgument(format!("contraction centered at {} instead of {xi}", cs.center)));
    }
    Ok(&cs.sets)
}

/// `Γ̃_nl(h)` along a contraction to `ξ`; tends to `([V′h](ξ), e′_k(ξ))`.
pub fn vitali_transform_limit(
    sc: &TransformScenario,
    xi: f64,
    k: usize,
    h: &HilbertVector,
    cs: &ContractionSequence,
    ls: &[usize],
) -> Result<ConvergenceRecord> {
    sc.q_iso()?;
    sweep(sc, Flavor::VitaliHilbert, xi, k, Argument::Hilbert(h), contraction_sets(cs, xi)?, ls)
}

/// `Γ_nl(φ)` along a contraction to `ξ`; tends to `⟨φ|ξk^×⟩`.
pub fn ket_transform_limit(
    sc: &TransformScenario,
    xi: f64,
    k: usize,
    phi: &TestFunction,
    cs: &ContractionSequence,
    ls: &[usize],
) -> Result<ConvergenceRecord> {
    sc.q_iso()?;
    sweep(sc, Flavor::VitaliKet, xi, k, Argument::Ket(phi), contraction_sets(cs, xi)?, ls)
}

/// The cells `F ∋ ξ` of levels `1..=depth`.
pub fn martingale_sets(tree: &DyadicPartitionTree, xi: f64) -> Result<Vec<IntervalSet>> {
    (1..=tree.depth()).map(|level| Ok(IntervalSet::from(tree.cell_containing(level, xi)?))).collect()
}

/// Same functionals on the dyadic cells containing `ξ`.
pub fn martingale_transform(
    sc: &TransformScenario,
    xi: f64,
    k: usize,
    arg: Argument<'_>,
    tree: &DyadicPartitionTree,
    ls: &[usize],
) -> Result<ConvergenceRecord> {
    let qi = sc.q_iso()?;
    tree.base().grid().ensure_same(qi.model().grid(), "martingale tree")?;
    let flavor = match arg {
        Argument::Hilbert(_) => Flavor::MartingaleHilbert,
        Argument::Ket(_) => Flavor::MartingaleKet,
    };
    sweep(sc, flavor, xi, k, arg, &martingale_sets(tree, xi)?, ls)
}

fn require_commuting(sc: &TransformScenario) -> Result<()> {
    if !sc.commuting() {
        return Err(Error::Inapplicable(format!(
            "P and Q do not commute (defect {:.3e})",
            sc.commutator_defect()
        )));
    }
    Ok(())
}

fn require_simple(sc: &TransformScenario) -> Result<()> {
    require_commuting(sc)?;
    if sc.p_multiplicity() != 1 {
        return Err(Error::Inapplicable(format!("P has multiplicity {}, not simple", sc.p_multiplicity())));
    }
    Ok(())
}

/// `E_F` with `Q(F) = J_{χ_{E_F}}` in the P-calculus, as a grid mask.
pub fn calculus_set(sc: &TransformScenario, set: &IntervalSet) -> Result<Vec<bool>> {
    require_simple(sc)?;
    let p = sc.p();
    let ones = MeasurableField::from_fn(p.reference().clone(), p.dims().to_vec(), 1, |_, _| C64::new(1.0, 0.0))?;
    let u = p.inverse(&ones)?;
    let gamma = p.forward(&sc.q_model().apply_projection(set, &u)?)?;
    let grid = p.model().grid();
    let mut mask = vec![false; grid.len()];
    for (i, m) in mask.iter_mut().enumerate() {
        if p.dims()[i] == 0 || p.exclusion_mask()[i] {
            continue;
        }
        let g = gamma.get(i, 0);
        if g.im.abs() > 1e-6 || (g.re - g.re.round()).abs() > 1e-6 || !(g.re.round() == 0.0 || g.re.round() == 1.0) {
            return Err(Error::NotAProjection(format!("γ_F({}) = {g}", grid.point(i))));
        }
        *m = g.re > 0.5;
    }
    Ok(mask)
}

fn masked_integral(sc: &TransformScenario, mask: &[bool], f: impl Fn(usize) -> C64) -> C64 {
    let p = sc.p();
    let q = p.model().grid().trapezoid_weights();
    let mu = p.reference().density();
    let mut acc = C64::new(0.0, 0.0);
    for (i, keep) in mask.iter().enumerate() {
        if *keep {
            acc += f(i) * (q[i] * mu[i]);
        }
    }
    acc
}

/// Simple-spectrum forms: integrals over `E_{F_n}` against `g̃′_k`.
pub fn simple_spectrum_transform(
    sc: &TransformScenario,
    xi: f64,
    k: usize,
    arg: Argument<'_>,
    cs: &ContractionSequence,
) -> Result<ConvergenceRecord> {
    sc.q_iso()?;
    require_simple(sc)?;
    let sets = contraction_sets(cs, xi)?;
    let p = sc.p();
    let g = sc.q_generator(k)?;
    let g_tilde = decompose_vector(p.model(), p.generating_system(), g)?.remove(0);
    let vg = p.forward(g)?;
    let (refv, name) = reference(sc, xi, k, arg)?;
    let flavor = match arg {
        Argument::Hilbert(_) => Flavor::SimpleHilbert,
        Argument::Ket(_) => Flavor::SimpleKet,
    };
    let mut rec = ConvergenceRecord::new(flavor, xi, k, refv, name);
    let v = p.forward(arg.vector())?;
    let mut finals = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let af = functional(sc, xi, k, set, i + 1)?;
        let e = calculus_set(sc, set)?;
        let s = af.prefactor / af.mass;
        let coef = |x: usize| g_tilde[x] * p.factor(0, x);
        let value = match arg {
            Argument::Hilbert(_) => {
                let dih = masked_integral(sc, &e, |x| coef(x).conj() * v.get(x, 0)) * s;
                rec.form_gap = rec.form_gap.max((dih - af.gamma_tilde(&v)[0]).norm());
                dih
            }
            Argument::Ket(_) => {
                let ft = masked_integral(sc, &e, |x| coef(x).conj() * v.get(x, 0)) * s;
                let fft = masked_integral(sc, &e, |x| vg.get(x, 0).conj() * v.get(x, 0)) * s;
                let general = af.gamma_ket(&v)[0];
                rec.form_gap = rec.form_gap.max((ft - general).norm()).max((fft - general).norm());
                ft
            }
        };
        rec.push(i + 1, 1, value, af.dual_norms()[0]);
        rec.masses.push(af.mass);
        finals.push(value);
    }
    rec.oscillating = oscillation_flag(&finals);
    Ok(rec)
}

/// Fiber matrices `[Q(F)](λ)` read off from `V Q(F) V⁻¹ e_c`.
pub fn fiber_projections(sc: &TransformScenario, set: &IntervalSet) -> Result<DecomposableOperator> {
    require_commuting(sc)?;
    let p = sc.p();
    let m = p.multiplicity();
    let basis = p.basis();
    let columns: Vec<MeasurableField> = (0..m)
        .map(|c| {
            let u = p.inverse(&basis.field(c))?;
            p.forward(&sc.q_model().apply_projection(set, &u)?)
        })
        .collect::<Result<_>>()?;
    let grid = *p.model().grid();
    let mats = (0..grid.len())
        .map(|i| {
            let d = p.dims()[i];
            DMatrix::from_fn(d, d, |r, c| columns[c].get(i, r))
        })
        .collect();
    let op = DecomposableOperator::new(grid, p.dims().to_vec(), mats, 1e-8)?;
    let defect = op.projection_defect();
    if defect > 1e-8 {
        return Err(Error::Decomposition(format!("fiber matrices miss T² = T = T* by {defect:.3e}")));
    }
    Ok(op)
}

/// Decomposable forms with `[Q(F_n)](λ)` acting on `Vh` or on `Vg′_k`.
pub fn decomposable_transform(
    sc: &TransformScenario,
    xi: f64,
    k: usize,
    h: &HilbertVector,
    cs: &ContractionSequence,
    ls: &[usize],
) -> Result<ConvergenceRecord> {
    sc.q_iso()?;
    require_commuting(sc)?;
    let ls = check_schedule(sc, ls)?;
    let sets = contraction_sets(cs, xi)?;
    let p = sc.p();
    let vg = p.forward(sc.q_generator(k)?)?;
    let vh = p.forward(h)?;
    let (refv, name) = reference(sc, xi, k, Argument::Hilbert(h))?;
    let mut rec = ConvergenceRecord::new(Flavor::Decomposable, xi, k, refv, name);
    let mut finals = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let af = functional(sc, xi, k, set, i + 1)?;
        let t = fiber_projections(sc, set)?;
        let s = af.prefactor / af.mass;
        let first: Vec<C64> = pairing(p, &vg, &t.apply(&vh)?).into_iter().map(|z| z * s).collect();
        let second: Vec<C64> = pairing(p, &t.apply(&vg)?, &vh).into_iter().map(|z| z * s).collect();
        let general = af.gamma_tilde(&vh);
        rec.form_gap = rec.form_gap.max(max_gap(&first, &second)).max(max_gap(&first, &general));
        let dn = af.dual_norms();
        for l in &ls {
            rec.push(i + 1, *l, first[l - 1], dn[l - 1]);
        }
        rec.masses.push(af.mass);
        finals.push(first[first.len() - 1]);
    }
    rec.oscillating = oscillation_flag(&finals);
    Ok(rec)
}

/// Representer norms `‖χ_{E_{F_n}} g̃′_k / μ′(F_n)‖` against `μ′(F_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceTrail {
    pub masses: Vec<f64>,
    pub norms: Vec<f64>,
}

impl DivergenceTrail {
    /// Least-squares slope of `log ‖·‖` against `log μ′(F_n)`.
    pub fn slope(&self) -> f64 {
        loglog_slope(&self.masses, &self.norms)
    }

    /// `log10` of the ratio between largest and smallest mass.
    pub fn decades(&self) -> f64 {
        let max = self.masses.iter().copied().fold(f64::MIN, f64::max);
        let min = self.masses.iter().copied().fold(f64::MAX, f64::min);
        (max / min).log10()
    }

    pub fn growth(&self) -> f64 {
        self.norms.last().copied().unwrap_or(f64::NAN) / self.norms.first().copied().unwrap_or(f64::NAN)
    }
}

pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub fn strong_divergence_diagnostic(sc: &TransformScenario, xi: f64, k: usize, sets: &[IntervalSet]) -> Result<DivergenceTrail> {
    sc.q_iso()?;
    require_simple(sc)?;
    let mut trail = DivergenceTrail { masses: Vec::new(), norms: Vec::new() };
    for (i, set) in sets.iter().enumerate() {
        let af = functional(sc, xi, k, set, i + 1)?;
        trail.masses.push(af.mass);
        trail.norms.push(af.dual_norms()[0]);
    }
    Ok(trail)
}

/// `(f, Q(F)h)` directly and through the P-side direct integral, both ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossMeasure {
    pub direct: C64,
    pub via_qf: C64,
    pub via_qh: C64,
}

impl CrossMeasure {
    pub fn residuals(&self) -> (f64, f64) {
        ((self.direct - self.via_qf).norm(), (self.direct - self.via_qh).norm())
    }
}

pub fn cross_measure_identity(sc: &TransformScenario, f: &HilbertVector, h: &HilbertVector, set: &IntervalSet) -> Result<CrossMeasure> {
    let p = sc.p();
    let q = sc.q_model();
    let (qf, qh) = (q.apply_projection(set, f)?, q.apply_projection(set, h)?);
    let direct = p.model().carrier().inner(f, &qh);
    let m = p.multiplicity();
    let via_qf = pairing(p, &p.forward(&qf)?, &p.forward(h)?)[m - 1];
    let via_qh = pairing(p, &p.forward(f)?, &p.forward(&qh)?)[m - 1];
    Ok(CrossMeasure { direct, via_qf, via_qh })
}
