//! Evaluatable spectral measure spaces.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, IntervalSet};
use crate::measure::{Atom, ComplexMeasure, DensityMeasure, GridMeasure};
use crate::scalar::C64;

use super::carrier::{Carrier, HilbertVector};
use super::map::{FiberUnitary, Label, Node, SpectralMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Multiplication,
    Conjugated,
    Atomic,
}

/// How node products become a density on the spectral grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Every node sits on a spectral grid point.
    Aligned { slot: Vec<usize> },
    /// Nodes are relabelled carrier points `s_c(x_i)` off the spectral grid.
    Scattered { source: Grid1D, labels: Vec<Label> },
    Atoms,
}

/// Default bound for the domain condition `∫ |φ|² dμ_f < ∞`.
pub const DEFAULT_DOMAIN_BOUND: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SpectralModel {
    variant: Variant,
    carrier: Carrier,
    map: SpectralMap,
    nodes: Vec<Node>,
    grid: Grid1D,
    layout: Layout,
    dims: Vec<usize>,
}

fn aligned_slots(grid: &Grid1D, nodes: &[Node]) -> Option<Vec<usize>> {
    nodes.iter().map(|n| grid.index_of(n.loc)).collect()
}

impl SpectralModel {
    fn assemble(variant: Variant, carrier: Carrier, map: SpectralMap, nodes: Vec<Node>, grid: Grid1D) -> Self {
        let layout = match (variant, aligned_slots(&grid, &nodes)) {
            (Variant::Atomic, _) => Layout::Atoms,
            (_, Some(slot)) => Layout::Aligned { slot },
            (_, None) => Layout::Scattered {
                source: *carrier.grid(),
                labels: map.labels().expect("only relabelled maps scatter").to_vec(),
            },
        };
        let mut dims = vec![0usize; grid.len()];
        match &layout {
            Layout::Aligned { slot } => {
                for (n, s) in nodes.iter().zip(slot) {
                    if n.weight > 0.0 {
                        dims[*s] += 1;
                    }
                }
            }
            Layout::Scattered { source, labels } => {
                for (k, d) in dims.iter_mut().enumerate() {
                    let xi = grid.point(k);
                    *d = labels.iter().filter(|l| source.contains(l.inverse(xi))).count();
                }
            }
            Layout::Atoms => {}
        }
        SpectralModel { variant, carrier, map, nodes, grid, layout, dims }
    }

    /// `P(E)` acts by multiplying with `χ_E(λ)` on the carrier itself.
    pub fn multiplication(carrier: Carrier) -> Self {
        let (map, nodes) = SpectralMap::identity(&carrier);
        let grid = *carrier.grid();
        Self::assemble(Variant::Multiplication, carrier, map, nodes, grid)
    }

    /// Fourier-conjugated multiplication, FFT-backed.
    pub fn fourier(carrier: Carrier) -> Result<Self> {
        let (map, grid, nodes) = SpectralMap::dft(&carrier)?;
        Ok(Self::assemble(Variant::Conjugated, carrier, map, nodes, grid))
    }

    /// The same Fourier model through an explicit dense matrix.
    pub fn fourier_dense(carrier: Carrier) -> Result<Self> {
        let (map, grid, nodes) = SpectralMap::dense_dft(&carrier)?;
        Ok(Self::assemble(Variant::Conjugated, carrier, map, nodes, grid))
    }

    /// Fiber unitary followed by per-channel relabelling of spectral values.
    pub fn relabelled(carrier: Carrier, unitary: FiberUnitary, labels: Vec<Label>) -> Result<Self> {
        let grid = labels
            .first()
            .ok_or_else(|| Error::InvalidArgument("no labels".into()))?
            .image(carrier.grid())?;
        for l in &labels[1..] {
            let img = l.image(carrier.grid())?;
            if !img.same_as(&grid) {
                return Err(Error::InvalidArgument("channel labels must share an image interval".into()));
            }
        }
        let (map, nodes) = SpectralMap::relabel(&carrier, &unitary, labels)?;
        Ok(Self::assemble(Variant::Conjugated, carrier, map, nodes, grid))
    }

    /// Pure point spectrum: the multiplication model with values snapped to `levels`.
    pub fn atomic(carrier: Carrier, levels: &[f64]) -> Result<Self> {
        let (map, nodes) = SpectralMap::quantized(&carrier, levels)?;
        let grid = *carrier.grid();
        Ok(Self::assemble(Variant::Atomic, carrier, map, nodes, grid))
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    /// Grid of the spectral variable.
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Number of spectral channels available at each spectral grid point.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn is_atomic(&self) -> bool {
        self.variant == Variant::Atomic
    }

    pub fn transform(&self, f: &HilbertVector) -> Result<Vec<C64>> {
        self.carrier.check(f)?;
        Ok(self.map.forward(&self.carrier, &self.nodes, f))
    }

    pub fn synthesize(&self, b: &[C64]) -> Result<HilbertVector> {
        if b.len() != self.nodes.len() {
            return Err(Error::Mismatch(format!("{} coefficients for {} nodes", b.len(), self.nodes.len())));
        }
        Ok(self.map.adjoint(&self.carrier, &self.nodes, b))
    }

    /// Vector whose node coefficients are `b(loc, channel)`.
    pub fn from_spectral(&self, b: impl Fn(f64, usize) -> C64) -> Result<HilbertVector> {
        let coeffs: Vec<C64> = self.nodes.iter().map(|n| b(n.loc, n.channel)).collect();
        self.synthesize(&coeffs)
    }

    /// Nodes inside `set`. Off-grid nodes follow the spectral grid cell they
    /// fall in, so node sums and grid quadrature see the same set.
    pub fn node_mask(&self, set: &IntervalSet) -> Vec<bool> {
        match &self.layout {
            Layout::Scattered { .. } => {
                let cells = self.grid.mask(set);
                self.nodes.iter().map(|n| cells[self.grid.nearest_index(n.loc)]).collect()
            }
            _ => {
                let slack = self.grid.slack();
                self.nodes.iter().map(|n| set.contains(n.loc, slack)).collect()
            }
        }
    }

    pub fn apply_projection(&self, set: &IntervalSet, f: &HilbertVector) -> Result<HilbertVector> {
        let mut b = self.transform(f)?;
        for (z, keep) in b.iter_mut().zip(self.node_mask(set)) {
            if !keep {
                *z = C64::new(0.0, 0.0);
            }
        }
        self.synthesize(&b)
    }

    /// Samples of a multiplier at the node locations, interpolated on the spectral grid.
    pub fn multiplier_at_nodes(&self, phi: &[C64]) -> Result<Vec<C64>> {
        if phi.len() != self.grid.len() {
            return Err(Error::Mismatch(format!(
                "multiplier has {} samples, spectral grid {}",
                phi.len(),
                self.grid.len()
            )));
        }
        Ok(match &self.layout {
            Layout::Aligned { slot } => slot.iter().map(|s| phi[*s]).collect(),
            _ => self
                .nodes
                .iter()
                .map(|n| self.grid.interpolate(phi, n.loc).unwrap_or(C64::new(0.0, 0.0)))
                .collect(),
        })
    }

    /// `J_φ f` with the domain bound `DEFAULT_DOMAIN_BOUND`.
    pub fn apply_jphi(&self, phi: &[C64], f: &HilbertVector) -> Result<HilbertVector> {
        self.apply_jphi_bounded(phi, f, DEFAULT_DOMAIN_BOUND)
    }

    pub fn apply_jphi_bounded(&self, phi: &[C64], f: &HilbertVector, bound: f64) -> Result<HilbertVector> {
        let at = self.multiplier_at_nodes(phi)?;
        let mut b = self.transform(f)?;
        let mut mass = 0.0;
        for ((z, p), n) in b.iter_mut().zip(&at).zip(&self.nodes) {
            mass += n.weight * (p.norm_sqr() * z.norm_sqr());
            *z *= p;
        }
        if !mass.is_finite() || mass > bound {
            return Err(Error::UnboundedDomain(format!("∫|φ|² dμ_f = {mass:e} exceeds {bound:e}")));
        }
        self.synthesize(&b)
    }

    /// Exact `(f, P(E) g)` as a sum over nodes.
    pub fn spectral_mass(&self, f: &HilbertVector, set: &IntervalSet, g: &HilbertVector) -> Result<C64> {
        let (bf, bg) = (self.transform(f)?, self.transform(g)?);
        Ok(self.mass_of_products(&self.products(&bf, &bg), set))
    }

    pub(crate) fn products(&self, bf: &[C64], bg: &[C64]) -> Vec<C64> {
        self.nodes.iter().zip(bf.iter().zip(bg)).map(|(n, (a, b))| a.conj() * b * n.weight).collect()
    }

    pub(crate) fn mass_of_products(&self, p: &[C64], set: &IntervalSet) -> C64 {
        p.iter().zip(self.node_mask(set)).filter(|(_, keep)| *keep).map(|(z, _)| *z).sum()
    }

    /// Measure carried by node products `ω_n conj(a_n) b_n`.
    pub(crate) fn measure_of_products(&self, p: &[C64]) -> ComplexMeasure {
        let zero = C64::new(0.0, 0.0);
        match &self.layout {
            Layout::Aligned { slot } => {
                let q = self.grid.trapezoid_weights();
                let mut d = vec![zero; self.grid.len()];
                for (z, s) in p.iter().zip(slot) {
                    d[*s] += z;
                }
                for (v, q) in d.iter_mut().zip(&q) {
                    *v /= *q;
                }
                GridMeasure::from_parts_unchecked(self.grid, d, Vec::new())
            }
            Layout::Scattered { source, labels } => {
                let m = labels.len();
                let q = source.trapezoid_weights();
                let per_channel: Vec<Vec<C64>> = (0..m)
                    .map(|c| (0..source.len()).map(|i| p[i * m + c] / q[i]).collect())
                    .collect();
                let d = (0..self.grid.len())
                    .map(|k| {
                        let xi = self.grid.point(k);
                        let mut acc = zero;
                        for (c, l) in labels.iter().enumerate() {
                            if let Some(v) = source.interpolate(&per_channel[c], l.inverse(xi)) {
                                acc += v * l.inverse_jacobian(xi);
                            }
                        }
                        acc
                    })
                    .collect();
                GridMeasure::from_parts_unchecked(self.grid, d, Vec::new())
            }
            Layout::Atoms => {
                let mut atoms: Vec<Atom<C64>> = Vec::new();
                for (z, n) in p.iter().zip(&self.nodes) {
                    match atoms.iter_mut().find(|a| a.location == n.loc) {
                        Some(a) => a.mass += z,
                        None => atoms.push(Atom { location: n.loc, mass: *z }),
                    }
                }
                atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
                GridMeasure::from_parts_unchecked(self.grid, vec![zero; self.grid.len()], atoms)
            }
        }
    }

    /// `μ_{f,g}: E ↦ (f, P(E) g)`.
    pub fn correlation_measure(&self, f: &HilbertVector, g: &HilbertVector) -> Result<ComplexMeasure> {
        let (bf, bg) = (self.transform(f)?, self.transform(g)?);
        Ok(self.measure_of_products(&self.products(&bf, &bg)))
    }

    /// `μ_f`, real and nonnegative.
    pub fn spectral_measure(&self, f: &HilbertVector) -> Result<DensityMeasure> {
        self.correlation_measure(f, f)?.to_density(1e-12)
    }
}

/// Norm of `P(E)Q(F)f − Q(F)P(E)f` relative to `‖f‖`, maximized over the inputs.
pub fn commutator_defect(
    p: &SpectralModel,
    q: &SpectralModel,
    sets_p: &[IntervalSet],
    sets_q: &[IntervalSet],
    probes: &[HilbertVector],
) -> Result<f64> {
    let car = p.carrier();
    let mut worst = 0.0f64;
    for f in probes {
        let nf = car.norm(f).max(f64::MIN_POSITIVE);
        for e in sets_p {
            for fs in sets_q {
                let a = p.apply_projection(e, &q.apply_projection(fs, f)?)?;
                let b = q.apply_projection(fs, &p.apply_projection(e, f)?)?;
                worst = worst.max(car.norm(&a.sub(&b)) / nf);
            }
        }
    }
    Ok(worst)
}
