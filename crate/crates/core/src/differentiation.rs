//! Differentiation of one measure by another: contraction sequences of closed
//! intervals and dyadic martingales.

use crate::error::{Error, Result};
use crate::grid::{Interval, IntervalSet};
use crate::measure::{DensityMeasure, GridMeasure};
use crate::scalar::Scalar;

/// Vitali system of closed intervals with a length floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VitaliSystem1D {
    pub min_length: f64,
}

impl VitaliSystem1D {
    pub const KIND: &'static str = "closed-intervals";

    pub fn for_measure(mu: &DensityMeasure) -> Self {
        VitaliSystem1D { min_length: mu.grid().spacing() }
    }

    /// The border of a closed interval is its two endpoints.
    pub fn border(&self, iv: &Interval) -> [f64; 2] {
        [iv.lo, iv.hi]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionSequence {
    pub center: f64,
    pub radii: Vec<f64>,
    pub comparability_constant: f64,
    pub one_sided: bool,
    /// `E_n`, clipped to the domain.
    pub sets: Vec<IntervalSet>,
    /// `μ(E_n)` for the measure the sequence was validated against.
    pub masses: Vec<f64>,
}

impl ContractionSequence {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

fn contraction(
    xi: f64,
    r0: f64,
    ratio: f64,
    n_max: usize,
    mu: &DensityMeasure,
    one_sided: bool,
) -> Result<ContractionSequence> {
    let grid = mu.grid();
    if !grid.is_interior(xi) {
        return Err(Error::Domain { point: xi, lower: grid.lower(), upper: grid.upper() });
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial radius {r0} must be positive")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("ratio {ratio} must lie in (0, 1)")));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let radii: Vec<f64> = (0..n_max).map(|n| r0 * ratio.powi(n as i32)).collect();
    let last = radii[n_max - 1];
    if last < grid.spacing() * (1.0 - 1e-9) {
        return Err(Error::Resolution(format!(
            "final radius {last:e} below grid spacing {:e}",
            grid.spacing()
        )));
    }
    let domain = IntervalSet::from(grid.domain());
    let mut sets = Vec::with_capacity(n_max);
    let mut masses = Vec::with_capacity(n_max);
    let mut c = 1.0f64;
    for (n, r) in radii.iter().enumerate() {
        let full = IntervalSet::closed(xi - r, xi + r).intersect(&domain);
        let set = if one_sided {
            IntervalSet::closed(xi, xi + r).intersect(&domain)
        } else {
            full.clone()
        };
        let m = mu.integrate(&set)?;
        if m <= 1e-12 * set.total_length().max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateContraction { index: n + 1 });
        }
        if one_sided {
            c = c.min(m / mu.integrate(&full)?);
        }
        sets.push(set);
        masses.push(m);
    }
    Ok(ContractionSequence {
        center: xi,
        radii,
        comparability_constant: if one_sided { c } else { 1.0 },
        one_sided,
        sets,
        masses,
    })
}

/// Symmetric contraction `E_n = [ξ - r_n, ξ + r_n]`, `r_n = r0 ratio^(n-1)`.
pub fn make_contraction(
    xi: f64,
    r0: f64,
    ratio: f64,
    n_max: usize,
    mu: &DensityMeasure,
) -> Result<ContractionSequence> {
    contraction(xi, r0, ratio, n_max, mu, false)
}

/// Right-sided contraction `E_n = [ξ, ξ + r_n]` inside `A_n = [ξ - r_n, ξ + r_n]`.
pub fn make_one_sided_contraction(
    xi: f64,
    r0: f64,
    ratio: f64,
    n_max: usize,
    mu: &DensityMeasure,
) -> Result<ContractionSequence> {
    contraction(xi, r0, ratio, n_max, mu, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VitaliQuotients<S> {
    pub values: Vec<S>,
    pub oscillating: bool,
}

impl<S: Scalar> VitaliQuotients<S> {
    pub fn estimate(&self) -> S {
        *self.values.last().expect("non-empty contraction")
    }
}

/// True when the last three successive differences strictly increase.
pub fn oscillation_flag<S: Scalar>(values: &[S]) -> bool {
    if values.len() < 4 {
        return false;
    }
    let n = values.len();
    let d = |k: usize| (values[k] - values[k - 1]).modulus();
    let scale = values.iter().map(|v| v.modulus()).fold(0.0, f64::max).max(1.0);
    let (a, b, c) = (d(n - 3), d(n - 2), d(n - 1));
    a < b && b < c && c > 1e-13 * scale
}

/// Quotients `ν(E_n) / μ(E_n)` along a contraction sequence.
pub fn vitali_derivative<S: Scalar>(
    nu: &GridMeasure<S>,
    mu: &DensityMeasure,
    cs: &ContractionSequence,
) -> Result<VitaliQuotients<S>> {
    nu.grid().ensure_same(mu.grid(), "vitali derivative")?;
    for set in &cs.sets {
        for a in nu.atoms() {
            if set.contains(a.location, nu.grid().slack()) {
                return Err(Error::AtomAtPoint(a.location));
            }
        }
    }
    let mut values = Vec::with_capacity(cs.len());
    for (n, set) in cs.sets.iter().enumerate() {
        let m = mu.integrate(set)?;
        if m <= 0.0 {
            return Err(Error::DegenerateContraction { index: n + 1 });
        }
        values.push(nu.integrate(set)? / m);
    }
    let oscillating = oscillation_flag(&values);
    Ok(VitaliQuotients { values, oscillating })
}

/// Nested half-open dyadic partitions of `[lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPartitionTree {
    base: DensityMeasure,
    depth: usize,
    tol: f64,
}

impl DyadicPartitionTree {
    pub const DEFAULT_MASS_TOL: f64 = 1e-12;

    pub fn new(base: DensityMeasure, depth: usize) -> Result<Self> {
        Self::with_tolerance(base, depth, Self::DEFAULT_MASS_TOL)
    }

    pub fn with_tolerance(base: DensityMeasure, depth: usize, tol: f64) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("tree depth must be at least 1".into()));
        }
        let tree = DyadicPartitionTree { base, depth, tol };
        for level in 1..=depth {
            tree.check_level(level)?;
        }
        Ok(tree)
    }

    fn check_level(&self, level: usize) -> Result<()> {
        let g = self.base.grid();
        let width = (g.upper() - g.lower()) / (1u64 << level) as f64;
        if width < g.spacing() * (1.0 - 1e-9) {
            return Err(Error::Resolution(format!(
                "level {level} cell width {width:e} below grid spacing {:e}",
                g.spacing()
            )));
        }
        for cell in self.cells(level) {
            let m = self.base.integrate(&IntervalSet::from(cell))?;
            if m <= self.tol * width {
                return Err(Error::Positivity { level, lo: cell.lo, hi: cell.hi });
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn base(&self) -> &DensityMeasure {
        &self.base
    }

    pub fn root(&self) -> Interval {
        let g = self.base.grid();
        Interval::half_open(g.lower(), g.upper())
    }

    fn edge(&self, level: usize, j: u64) -> f64 {
        let g = self.base.grid();
        let count = 1u64 << level;
        if j == count {
            g.upper()
        } else {
            g.lower() + (g.upper() - g.lower()) * (j as f64 / count as f64)
        }
    }

    /// The `2^level` cells of a level, left to right.
    pub fn cells(&self, level: usize) -> Vec<Interval> {
        let count = 1u64 << level;
        (0..count)
            .map(|j| Interval::half_open(self.edge(level, j), self.edge(level, j + 1)))
            .collect()
    }

    pub fn cell_containing(&self, level: usize, x: f64) -> Result<Interval> {
        let root = self.root();
        if !root.contains(x, 0.0) {
            return Err(Error::Domain { point: x, lower: root.lo, upper: root.hi });
        }
        let count = 1u64 << level;
        let mut j = (((x - root.lo) / (root.hi - root.lo)) * count as f64).floor() as u64;
        j = j.min(count - 1);
        // guard against rounding at cell edges
        while j > 0 && x < self.edge(level, j) {
            j -= 1;
        }
        while j + 1 < count && x >= self.edge(level, j + 1) {
            j += 1;
        }
        Ok(Interval::half_open(self.edge(level, j), self.edge(level, j + 1)))
    }

    pub fn refine(&self) -> Result<Self> {
        let next = DyadicPartitionTree { base: self.base.clone(), depth: self.depth + 1, tol: self.tol };
        next.check_level(next.depth)?;
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleEstimate<S> {
    pub point: f64,
    pub values: Vec<S>,
    pub cells: Vec<Interval>,
}

/// `X_k(λ) = ν(F_k) / μ′(F_k)` with `F_k` the level-`k` cell containing `λ`.
pub fn martingale_estimate<S: Scalar>(
    nu: &GridMeasure<S>,
    tree: &DyadicPartitionTree,
    lambda: f64,
) -> Result<MartingaleEstimate<S>> {
    nu.grid().ensure_same(tree.base().grid(), "martingale estimate")?;
    let mut values = Vec::with_capacity(tree.depth());
    let mut cells = Vec::with_capacity(tree.depth());
    for level in 1..=tree.depth() {
        let cell = tree.cell_containing(level, lambda)?;
        let set = IntervalSet::from(cell);
        values.push(nu.integrate(&set)? / tree.base().integrate(&set)?);
        cells.push(cell);
    }
    Ok(MartingaleEstimate { point: lambda, values, cells })
}

/// `(n, value, |value - reference|)` rows for a sequence of estimates.
pub fn error_trail<S: Scalar>(values: &[S], reference: S) -> Vec<(usize, S, f64)> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1, *v, (*v - reference).modulus()))
        .collect()
}
