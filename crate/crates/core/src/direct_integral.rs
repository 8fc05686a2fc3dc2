//! Direct integrals `ℋ_{μ,N}` over a grid, decomposable operators, and the
//! structural isomorphism carrying a spectral measure space onto one.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, IntervalSet};
use crate::measure::{absolutely_continuous, DensityMeasure, TypeRelation};
use crate::scalar::C64;
use crate::spectral::{decompose_vector, probe_vectors, reconstruct, GeneratingSystem, HilbertVector, SpectralModel};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Sampled field `λ ↦ f(λ) ∈ ℂ^{N(λ)}`, stored with trailing zeros up to `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurableField {
    base: DensityMeasure,
    m: usize,
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl MeasurableField {
    pub fn new(base: DensityMeasure, dims: Vec<usize>, m: usize, mut data: Vec<C64>) -> Result<Self> {
        let n = base.grid().len();
        if dims.len() != n || data.len() != n * m {
            return Err(Error::Mismatch("field shape does not match its grid".into()));
        }
        if dims.iter().any(|d| *d > m) {
            return Err(Error::Mismatch(format!("fiber dimension exceeds {m}")));
        }
        for (k, d) in dims.iter().enumerate() {
            for j in *d..m {
                data[k * m + j] = ZERO;
            }
        }
        Ok(MeasurableField { base, m, dims, data })
    }

    pub fn from_fn(base: DensityMeasure, dims: Vec<usize>, m: usize, f: impl Fn(f64, usize) -> C64) -> Result<Self> {
        let g = *base.grid();
        let mut data = Vec::with_capacity(g.len() * m);
        for k in 0..g.len() {
            for j in 0..m {
                data.push(f(g.point(k), j));
            }
        }
        Self::new(base, dims, m, data)
    }

    pub fn zero_like(&self) -> Self {
        MeasurableField { data: vec![ZERO; self.data.len()], ..self.clone() }
    }

    pub fn grid(&self) -> &Grid1D {
        self.base.grid()
    }

    pub fn base(&self) -> &DensityMeasure {
        &self.base
    }

    pub fn channels(&self) -> usize {
        self.m
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, k: usize, j: usize) -> C64 {
        self.data[k * self.m + j]
    }

    pub fn component(&self, j: usize) -> Vec<C64> {
        (0..self.grid().len()).map(|k| self.get(k, j)).collect()
    }

    /// Component `j` linearly interpolated at `x`.
    pub fn component_at(&self, j: usize, x: f64) -> Option<C64> {
        let (k, t) = self.grid().cell_of(x)?;
        let a = self.get(k, j);
        if t == 0.0 {
            return Some(a);
        }
        Some(a * (1.0 - t) + self.get(k + 1, j) * t)
    }

    pub fn scale(&self, a: C64) -> Self {
        MeasurableField { data: self.data.iter().map(|z| z * a).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_shape(self, other)?;
        Ok(MeasurableField { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(), ..self.clone() })
    }

    /// Keeps only channels `j < l`.
    pub fn truncated(&self, l: usize) -> Self {
        let mut out = self.clone();
        for k in 0..self.grid().len() {
            for j in l.min(self.m)..self.m {
                out.data[k * self.m + j] = ZERO;
            }
        }
        out
    }

    /// Columns `lambda, re_1, im_1, ..., re_m, im_m`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda");
        for j in 1..=self.m {
            let _ = write!(s, ",re_{j},im_{j}");
        }
        s.push('\n');
        for k in 0..self.grid().len() {
            let _ = write!(s, "{:.16e}", self.grid().point(k));
            for j in 0..self.m {
                let z = self.get(k, j);
                let _ = write!(s, ",{:.16e},{:.16e}", z.re, z.im);
            }
            s.push('\n');
        }
        s
    }
}

fn check_shape(f: &MeasurableField, h: &MeasurableField) -> Result<()> {
    f.grid().ensure_same(h.grid(), "direct integral")?;
    if f.m != h.m || f.dims != h.dims {
        return Err(Error::Mismatch("fields have different fiber dimensions".into()));
    }
    if f.base.density() != h.base.density() {
        return Err(Error::Mismatch("fields live over different measures".into()));
    }
    Ok(())
}

fn pointwise_inner(f: &MeasurableField, h: &MeasurableField, k: usize) -> C64 {
    let m = f.m;
    let mut s = ZERO;
    for j in 0..f.dims[k] {
        s += f.data[k * m + j].conj() * h.data[k * m + j];
    }
    s
}

/// `∫ (f(λ), h(λ))_λ dμ(λ)` by the trapezoid rule.
pub fn field_inner(f: &MeasurableField, h: &MeasurableField) -> Result<C64> {
    check_shape(f, h)?;
    let q = f.grid().trapezoid_weights();
    let mu = f.base.density();
    let mut acc = ZERO;
    for k in 0..q.len() {
        acc += pointwise_inner(f, h, k) * (q[k] * mu[k]);
    }
    Ok(acc)
}

/// `∫_E (f(λ), h(λ))_λ dμ(λ)` with every grid point in `E` carrying its full weight.
pub fn field_inner_over(f: &MeasurableField, h: &MeasurableField, set: &IntervalSet) -> Result<C64> {
    check_shape(f, h)?;
    let q = f.grid().trapezoid_weights();
    let mu = f.base.density();
    let mask = f.grid().mask(set);
    let mut acc = ZERO;
    for k in 0..q.len() {
        if mask[k] {
            acc += pointwise_inner(f, h, k) * (q[k] * mu[k]);
        }
    }
    Ok(acc)
}

pub fn field_norm(f: &MeasurableField) -> f64 {
    field_inner(f, f).map(|z| z.re.max(0.0).sqrt()).unwrap_or(f64::NAN)
}

/// `(Q_φ f)(λ) = φ(λ) f(λ)`.
pub fn apply_diagonal(phi: &[C64], f: &MeasurableField) -> Result<MeasurableField> {
    apply_diagonal_bounded(phi, f, crate::spectral::model::DEFAULT_DOMAIN_BOUND)
}

pub fn apply_diagonal_bounded(phi: &[C64], f: &MeasurableField, bound: f64) -> Result<MeasurableField> {
    let n = f.grid().len();
    if phi.len() != n {
        return Err(Error::Mismatch(format!("multiplier has {} samples, grid {n}", phi.len())));
    }
    let mut out = f.clone();
    let q = f.grid().trapezoid_weights();
    let mut mass = 0.0;
    for k in 0..n {
        let mut s = 0.0;
        for j in 0..f.m {
            let z = &mut out.data[k * f.m + j];
            s += z.norm_sqr();
            *z *= phi[k];
        }
        mass += phi[k].norm_sqr() * s * q[k] * f.base.density()[k];
    }
    if !mass.is_finite() || mass > bound {
        return Err(Error::UnboundedDomain(format!("∫|φ|²‖f‖² dμ = {mass:e} exceeds {bound:e}")));
    }
    Ok(out)
}

/// Canonical basis: `e_j(λ)` is the `j`-th unit vector while `j < N(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasisField {
    base: DensityMeasure,
    dims: Vec<usize>,
    m: usize,
}

impl OrthonormalBasisField {
    pub fn canonical(base: DensityMeasure, dims: Vec<usize>, m: usize) -> Self {
        OrthonormalBasisField { base, dims, m }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn field(&self, j: usize) -> MeasurableField {
        let dims = self.dims.clone();
        MeasurableField::from_fn(self.base.clone(), dims, self.m, |_, c| if c == j { C64::new(1.0, 0.0) } else { ZERO })
            .expect("shape from basis")
    }

    /// Largest deviation of `(e_i(λ), e_j(λ))` from `δ_ij` over grid points and `i, j < N(λ)`.
    pub fn orthonormality_defect(&self) -> f64 {
        let fields: Vec<MeasurableField> = (0..self.m).map(|j| self.field(j)).collect();
        let mut worst = 0.0f64;
        for k in 0..self.dims.len() {
            for i in 0..self.dims[k] {
                for j in 0..self.dims[k] {
                    let mut s = ZERO;
                    for c in 0..self.m {
                        s += fields[i].get(k, c).conj() * fields[j].get(k, c);
                    }
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((s - C64::new(want, 0.0)).norm());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OperatorFlags {
    pub diagonal: bool,
    pub projection: bool,
    pub unitary: bool,
    pub selfadjoint: bool,
}

/// `T = ∫^⊕ T(λ) dμ(λ)` with `T(λ)` acting on the first `N(λ)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposableOperator {
    grid: Grid1D,
    dims: Vec<usize>,
    mats: Vec<DMatrix<C64>>,
    pub flags: OperatorFlags,
}

impl DecomposableOperator {
    pub fn new(grid: Grid1D, dims: Vec<usize>, mats: Vec<DMatrix<C64>>, tol: f64) -> Result<Self> {
        if mats.len() != grid.len() || dims.len() != grid.len() {
            return Err(Error::Mismatch("one matrix per grid point required".into()));
        }
        for (t, d) in mats.iter().zip(&dims) {
            if t.nrows() != *d || t.ncols() != *d {
                return Err(Error::Mismatch(format!("fiber matrix {}x{} for dimension {d}", t.nrows(), t.ncols())));
            }
        }
        let mut op = DecomposableOperator { grid, dims, mats, flags: OperatorFlags::default() };
        op.flags = op.verify_flags(tol);
        Ok(op)
    }

    pub fn from_fn(grid: Grid1D, dims: Vec<usize>, f: impl Fn(f64, usize) -> DMatrix<C64>) -> Result<Self> {
        let mats = (0..grid.len()).map(|k| f(grid.point(k), dims[k])).collect();
        Self::new(grid, dims, mats, 1e-10)
    }

    pub fn matrix(&self, k: usize) -> &DMatrix<C64> {
        &self.mats[k]
    }

    fn verify_flags(&self, tol: f64) -> OperatorFlags {
        let close = |a: &DMatrix<C64>, b: &DMatrix<C64>| a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol);
        let mut fl = OperatorFlags { diagonal: true, projection: true, unitary: true, selfadjoint: true };
        for t in &self.mats {
            let d = t.nrows();
            if d == 0 {
                continue;
            }
            let id = DMatrix::<C64>::identity(d, d);
            let th = t.adjoint();
            fl.selfadjoint &= close(t, &th);
            fl.projection &= close(&(t * t), t) && close(t, &th);
            fl.unitary &= close(&(&th * t), &id);
            fl.diagonal &= close(t, &(&id * t[(0, 0)]));
        }
        fl
    }

    /// Largest pointwise defect of `T² = T` and `T* = T`.
    pub fn projection_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for t in &self.mats {
            let sq = t * t - t;
            let sa = t - t.adjoint();
            for z in sq.iter().chain(sa.iter()) {
                worst = worst.max(z.norm());
            }
        }
        worst
    }

    pub fn apply(&self, f: &MeasurableField) -> Result<MeasurableField> {
        self.grid.ensure_same(f.grid(), "decomposable operator")?;
        if self.dims != f.dims {
            return Err(Error::Mismatch("operator and field fiber dimensions differ".into()));
        }
        let mut out = f.zero_like();
        let m = f.m;
        for (k, t) in self.mats.iter().enumerate() {
            let d = self.dims[k];
            for r in 0..d {
                let mut s = ZERO;
                for c in 0..d {
                    s += t[(r, c)] * f.data[k * m + c];
                }
                out.data[k * m + r] = s;
            }
        }
        Ok(out)
    }
}

/// Reference measure of a direct integral.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// `μ = μ_{g_1}`
    FirstGenerator,
    Explicit(DensityMeasure),
}

/// Structural isomorphism `V: ℋ → ℋ_{μ,N}` built from a generating system.
#[derive(Debug, Clone)]
pub struct StructuralIso {
    model: SpectralModel,
    gs: GeneratingSystem,
    mu: DensityMeasure,
    explicit: bool,
    /// `√(dμ_{g_j}/dμ)` per generator and grid point.
    factor: Vec<Vec<f64>>,
    /// `√(dμ/dμ_{g_1})` per grid point.
    back: Vec<f64>,
    dims: Vec<usize>,
    lambda0: Vec<bool>,
}

impl StructuralIso {
    pub fn new(model: SpectralModel, gs: GeneratingSystem, reference: Reference) -> Result<Self> {
        if model.is_atomic() {
            return Err(Error::AtomicSpectrum("no density layout for a direct integral".into()));
        }
        match gs.report.clause("coherence") {
            Some(c) if c.passed => {}
            _ => {
                return Err(Error::IsoDomain(
                    "generator measures must coincide on the nested supports".into(),
                ))
            }
        }
        let d1 = gs.density(0);
        let (mu, explicit) = match reference {
            Reference::FirstGenerator => (d1.clone(), false),
            Reference::Explicit(mu) => {
                mu.grid().ensure_same(model.grid(), "reference measure")?;
                let o = absolutely_continuous(&mu, d1, gs.tolerance())?;
                if o.relation != TypeRelation::Equivalent {
                    return Err(Error::IsoDomain(format!(
                        "reference measure type differs from the first generator ({:?})",
                        o.relation
                    )));
                }
                (mu, true)
            }
        };
        let n = model.grid().len();
        let tol = gs.tolerance();
        let mu_tol = if explicit {
            1e-10 * mu.density().iter().copied().fold(0.0, f64::max)
        } else {
            tol
        };
        let md = mu.density();
        let ok = |v: f64, t: f64| v >= t;
        let factor: Vec<Vec<f64>> = (0..gs.len())
            .map(|j| {
                let dj = gs.density(j).density();
                (0..n)
                    .map(|k| if ok(dj[k], tol) && ok(md[k], mu_tol) { (dj[k] / md[k]).sqrt() } else { 0.0 })
                    .collect()
            })
            .collect();
        let back = (0..n)
            .map(|k| {
                let d = d1.density()[k];
                if ok(d, tol) && ok(md[k], mu_tol) {
                    (md[k] / d).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let mut dims = vec![0usize; n];
        let mut lambda0 = vec![false; n];
        for k in 0..n {
            let mut count = 0;
            for j in 0..gs.len() {
                let dj = gs.density(j).density();
                let here = ok(dj[k], tol);
                if here && ok(md[k], mu_tol) {
                    count += 1;
                }
                let near = (k > 0 && ok(dj[k - 1], tol)) || (k + 1 < n && ok(dj[k + 1], tol));
                if !here && near {
                    lambda0[k] = true;
                }
            }
            let mu_near = (k > 0 && ok(md[k - 1], mu_tol)) || (k + 1 < n && ok(md[k + 1], mu_tol));
            if !ok(md[k], mu_tol) && mu_near {
                lambda0[k] = true;
            }
            dims[k] = count;
        }
        Ok(StructuralIso { model, gs, mu, explicit, factor, back, dims, lambda0 })
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    pub fn generating_system(&self) -> &GeneratingSystem {
        &self.gs
    }

    pub fn reference(&self) -> &DensityMeasure {
        &self.mu
    }

    pub fn has_explicit_reference(&self) -> bool {
        self.explicit
    }

    pub fn multiplicity(&self) -> usize {
        self.gs.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Grid points where some required density ratio is `0/0`.
    pub fn exclusion_mask(&self) -> &[bool] {
        &self.lambda0
    }

    pub fn excluded(&self, x: f64) -> bool {
        self.model.grid().index_of(x).map(|k| self.lambda0[k]).unwrap_or(false)
    }

    /// `√(dμ_{g_j}/dμ)` at grid point `k`.
    pub fn factor(&self, j: usize, k: usize) -> f64 {
        self.factor[j][k]
    }

    pub fn basis(&self) -> OrthonormalBasisField {
        OrthonormalBasisField::canonical(self.mu.clone(), self.dims.clone(), self.gs.len())
    }

    fn zero_field(&self) -> MeasurableField {
        let m = self.gs.len();
        MeasurableField { base: self.mu.clone(), m, dims: self.dims.clone(), data: vec![ZERO; self.mu.grid().len() * m] }
    }

    /// Cross densities `dμ_{g_j,h}/dλ` for every generator.
    pub fn cross_densities(&self, h: &HilbertVector) -> Result<Vec<Vec<C64>>> {
        let bh = self.model.transform(h)?;
        Ok((0..self.gs.len())
            .map(|j| {
                let p = self.model.products(self.gs.coefficients(j), &bh);
                self.model.measure_of_products(&p).density().to_vec()
            })
            .collect())
    }

    /// `(e_j(λ), [Vh](λ)) = √(dμ_{g_j}/dμ) · dμ_{g_j,h}/dμ_{g_j}`.
    pub fn forward(&self, h: &HilbertVector) -> Result<MeasurableField> {
        let cross = self.cross_densities(h)?;
        let mut out = self.zero_field();
        let m = self.gs.len();
        for (j, c) in cross.iter().enumerate() {
            let dj = self.gs.density(j).density();
            for k in 0..self.dims.len() {
                if j < self.dims[k] && self.factor[j][k] > 0.0 {
                    out.data[k * m + j] = c[k] / dj[k] * self.factor[j][k];
                }
            }
        }
        Ok(out)
    }

    /// `V⁻¹ f = ⊕_j J_{c_j} g_j` with `c_j = (e_j, √(dμ/dμ_{g_1}) f)`.
    pub fn inverse(&self, f: &MeasurableField) -> Result<HilbertVector> {
        let probe = self.zero_field();
        check_shape(&probe, f)?;
        let m = self.gs.len();
        let coefs: Vec<Vec<C64>> = (0..m)
            .map(|j| (0..self.dims.len()).map(|k| f.data[k * m + j] * self.back[k]).collect())
            .collect();
        reconstruct(&self.model, &self.gs, &coefs)
    }

    /// The four expressions for component `j` at each grid point, or `None`
    /// where one of their factors is undefined.
    pub fn component_expressions(&self, h: &HilbertVector, j: usize) -> Result<Vec<Option<[C64; 4]>>> {
        let tilde = decompose_vector(&self.model, &self.gs, h)?;
        let cross = self.cross_densities(h)?;
        let (dj, d1, mu) = (self.gs.density(j).density(), self.gs.density(0).density(), self.mu.density());
        let tol = self.gs.tolerance();
        Ok((0..self.dims.len())
            .map(|k| {
                if self.lambda0[k] || dj[k] < tol || d1[k] < tol || mu[k] <= 0.0 {
                    return None;
                }
                let c = cross[j][k];
                Some([
                    tilde[j][k] * (dj[k] / mu[k]).sqrt(),
                    c / mu[k] * (mu[k] / d1[k]).sqrt(),
                    c / d1[k] * (d1[k] / mu[k]).sqrt(),
                    c / dj[k] * (dj[k] / mu[k]).sqrt(),
                ])
            })
            .collect())
    }
}

/// Worst relative residuals of `V` over the probe family.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IsoDiagnostics {
    pub unitarity: f64,
    pub intertwining: f64,
    pub round_trip: f64,
}

impl StructuralIso {
    /// Probes `(Vf, Vh) = (f, h)`, `V J_φ f = φ V f` with `φ(λ)` an affine
    /// ramp onto `[-1, 1]`, and `V⁻¹ V f = f`.
    pub fn diagnostics(&self) -> Result<IsoDiagnostics> {
        let car = self.model.carrier();
        let probes = probe_vectors(car);
        let fields: Vec<MeasurableField> = probes.iter().map(|f| self.forward(f)).collect::<Result<_>>()?;
        let norms: Vec<f64> = probes.iter().map(|f| car.norm(f)).collect();
        let mut d = IsoDiagnostics::default();
        for (a, (f, fa)) in probes.iter().zip(&fields).enumerate() {
            for (b, (h, fb)) in probes.iter().zip(&fields).enumerate() {
                let r = (field_inner(fa, fb)? - car.inner(f, h)).norm() / (norms[a] * norms[b]);
                d.unitarity = d.unitarity.max(r);
            }
        }
        let g = self.model.grid();
        let (mid, half) = (0.5 * (g.lower() + g.upper()), 0.5 * (g.upper() - g.lower()));
        let phi: Vec<C64> = g.points().iter().map(|x| C64::new((x - mid) / half, 0.0)).collect();
        for (i, (f, ff)) in probes.iter().zip(&fields).enumerate() {
            let lhs = self.forward(&self.model.apply_jphi(&phi, f)?)?;
            let rhs = apply_diagonal(&phi, ff)?;
            let diff = lhs.add(&rhs.scale(C64::new(-1.0, 0.0)))?;
            d.intertwining = d.intertwining.max(field_norm(&diff) / norms[i]);
            let back = self.inverse(ff)?;
            d.round_trip = d.round_trip.max(car.norm(&back.sub(f)) / norms[i]);
        }
        Ok(d)
    }
}

/// `|(f, P(E)h) − Σ_j ∫_E ([Vf], e_j)(e_j, [Vh]) dμ|`.
pub fn parseval_check(iso: &StructuralIso, f: &HilbertVector, h: &HilbertVector, set: &IntervalSet) -> Result<f64> {
    let car = iso.model().carrier();
    let lhs = car.inner(f, &iso.model().apply_projection(set, h)?);
    let rhs = field_inner_over(&iso.forward(f)?, &iso.forward(h)?, set)?;
    Ok((lhs - rhs).norm())
}
