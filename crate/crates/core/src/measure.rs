//! Scalar and complex measures on a 1-D interval: grid density plus atoms.
//!
//! Densities are linearly interpolated between grid points, so `integrate`
//! is the exact integral of the piecewise-linear interpolant (composite
//! trapezoid with partial cells). `lumped_mass` is the point-mass rule used
//! by spectral projections: every grid point inside the set contributes its
//! full trapezoid weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Interval, IntervalSet};
use crate::scalar::{Scalar, C64};

/// Default tolerance below which a density sample counts as zero.
pub const DEFAULT_NULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<S> {
    pub location: f64,
    pub mass: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure<S> {
    grid: Grid1D,
    density: Vec<S>,
    atoms: Vec<Atom<S>>,
}

/// Nonnegative measure.
pub type DensityMeasure = GridMeasure<f64>;
/// Complex measure such as `E -> (f, P(E) g)`.
pub type ComplexMeasure = GridMeasure<C64>;

fn validate_common<S: Scalar>(grid: &Grid1D, density: &[S], atoms: &[Atom<S>]) -> Result<()> {
    if density.len() != grid.len() {
        return Err(Error::InvalidMeasure(format!(
            "{} density samples for a grid of {} points",
            density.len(),
            grid.len()
        )));
    }
    if density.iter().any(|d| !d.finite()) {
        return Err(Error::NonFinite("measure density".into()));
    }
    for (i, a) in atoms.iter().enumerate() {
        if !a.mass.finite() || !a.location.is_finite() {
            return Err(Error::NonFinite("atom".into()));
        }
        if !grid.contains(a.location) {
            return Err(Error::InvalidMeasure(format!(
                "atom at {} outside [{}, {}]",
                a.location,
                grid.lower(),
                grid.upper()
            )));
        }
        if atoms[..i].iter().any(|b| b.location == a.location) {
            return Err(Error::InvalidMeasure(format!("duplicate atom at {}", a.location)));
        }
    }
    Ok(())
}

impl DensityMeasure {
    pub fn new(grid: Grid1D, density: Vec<f64>, atoms: Vec<(f64, f64)>) -> Result<Self> {
        let atoms: Vec<Atom<f64>> =
            atoms.into_iter().map(|(location, mass)| Atom { location, mass }).collect();
        validate_common(&grid, &density, &atoms)?;
        if let Some(d) = density.iter().find(|d| **d < 0.0) {
            return Err(Error::InvalidMeasure(format!("negative density sample {d}")));
        }
        if let Some(a) = atoms.iter().find(|a| a.mass <= 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "atom at {} has nonpositive mass {}",
                a.location, a.mass
            )));
        }
        Ok(GridMeasure { grid, density, atoms })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let density = grid.points().into_iter().map(f).collect();
        Self::new(grid, density, Vec::new())
    }

    pub fn lebesgue(grid: Grid1D) -> Self {
        GridMeasure { grid, density: vec![1.0; grid.len()], atoms: Vec::new() }
    }

    pub fn to_record(&self) -> MeasureRecord {
        MeasureRecord {
            grid: GridRecord { lower: self.grid.lower(), upper: self.grid.upper(), n: self.grid.len() },
            density: self.density.clone(),
            atoms: self.atoms.iter().map(|a| [a.location, a.mass]).collect(),
        }
    }

    pub fn from_record(rec: &MeasureRecord) -> Result<Self> {
        let grid = Grid1D::new(rec.grid.lower, rec.grid.upper, rec.grid.n)?;
        Self::new(grid, rec.density.clone(), rec.atoms.iter().map(|a| (a[0], a[1])).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("measure record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: MeasureRecord =
            serde_json::from_str(s).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Self::from_record(&rec)
    }

    pub fn to_complex(&self) -> ComplexMeasure {
        GridMeasure {
            grid: self.grid,
            density: self.density.iter().map(|d| C64::new(*d, 0.0)).collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { location: a.location, mass: C64::new(a.mass, 0.0) })
                .collect(),
        }
    }
}

impl ComplexMeasure {
    pub fn new(grid: Grid1D, density: Vec<C64>, atoms: Vec<(f64, C64)>) -> Result<Self> {
        let atoms: Vec<Atom<C64>> =
            atoms.into_iter().map(|(location, mass)| Atom { location, mass }).collect();
        validate_common(&grid, &density, &atoms)?;
        Ok(GridMeasure { grid, density, atoms })
    }

    pub fn conj(&self) -> ComplexMeasure {
        GridMeasure {
            grid: self.grid,
            density: self.density.iter().map(|d| d.conj()).collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { location: a.location, mass: a.mass.conj() })
                .collect(),
        }
    }

    /// Real nonnegative measure, for measures of the form `(f, P(E) f)`.
    pub fn to_density(&self, tol: f64) -> Result<DensityMeasure> {
        let scale = self.density.iter().map(|d| d.norm()).fold(0.0, f64::max).max(1.0);
        let mut density = Vec::with_capacity(self.density.len());
        for d in &self.density {
            if d.im.abs() > tol * scale || d.re < -tol * scale {
                return Err(Error::InvalidMeasure(format!("sample {d} is not nonnegative real")));
            }
            density.push(d.re.max(0.0));
        }
        let mut atoms = Vec::new();
        for a in &self.atoms {
            if a.mass.im.abs() > tol * scale.max(a.mass.norm()) || a.mass.re < 0.0 {
                return Err(Error::InvalidMeasure(format!("atom mass {} is not positive", a.mass)));
            }
            if a.mass.re > 0.0 {
                atoms.push((a.location, a.mass.re));
            }
        }
        DensityMeasure::new(self.grid, density, atoms)
    }
}

impl<S: Scalar> GridMeasure<S> {
    pub(crate) fn from_parts_unchecked(grid: Grid1D, density: Vec<S>, atoms: Vec<Atom<S>>) -> Self {
        GridMeasure { grid, density, atoms }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn density(&self) -> &[S] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn density_at(&self, x: f64) -> Option<S> {
        self.grid.interpolate(&self.density, x)
    }

    pub fn atom_at(&self, x: f64) -> Option<S> {
        let slack = self.grid.slack();
        self.atoms.iter().find(|a| (a.location - x).abs() <= slack).map(|a| a.mass)
    }

    pub fn is_atomless(&self) -> bool {
        self.atoms.is_empty()
    }

    fn integrate_interval(&self, iv: &Interval) -> S {
        let lo = iv.lo.max(self.grid.lower());
        let hi = iv.hi.min(self.grid.upper());
        let mut acc = S::zero();
        if hi <= lo {
            return acc;
        }
        let h = self.grid.spacing();
        let (i0, _) = self.grid.cell_of(lo).expect("clipped");
        let (i1, _) = self.grid.cell_of(hi).expect("clipped");
        for i in i0..=i1 {
            let x0 = self.grid.point(i);
            let x1 = self.grid.point(i + 1);
            let a = lo.max(x0);
            let b = hi.min(x1);
            if b <= a {
                continue;
            }
            let (d0, d1) = (self.density[i], self.density[i + 1]);
            let at = |x: f64| {
                let t = (x - x0) / h;
                d0 * (1.0 - t) + d1 * t
            };
            acc += (at(a) + at(b)) * (0.5 * (b - a));
        }
        acc
    }

    fn atom_sum(&self, set: &IntervalSet) -> S {
        let slack = self.grid.slack();
        let mut acc = S::zero();
        for a in &self.atoms {
            if set.contains(a.location, slack) {
                acc += a.mass;
            }
        }
        acc
    }

    /// `m(E)`: integral of the interpolated density over `E` plus atoms in `E`.
    pub fn integrate(&self, set: &IntervalSet) -> Result<S> {
        if set.parts().iter().any(|p| !p.lo.is_finite() || !p.hi.is_finite()) {
            return Err(Error::NonFinite("interval endpoint".into()));
        }
        let mut acc = S::zero();
        for iv in set.parts() {
            acc += self.integrate_interval(iv);
        }
        Ok(acc + self.atom_sum(set))
    }

    /// Point-mass rule: sum of `w_i d_i` over grid points in `E`, plus atoms.
    pub fn lumped_mass(&self, set: &IntervalSet) -> S {
        let w = self.grid.trapezoid_weights();
        let mask = self.grid.mask(set);
        let mut acc = S::zero();
        for i in 0..self.grid.len() {
            if mask[i] {
                acc += self.density[i] * w[i];
            }
        }
        acc + self.atom_sum(set)
    }

    pub fn total(&self) -> S {
        self.integrate(&IntervalSet::from(self.grid.domain())).expect("finite domain")
    }

    /// Cells `[x_i, x_{i+1}]` on which the density vanishes at both ends.
    pub fn null_cells(&self, tol: f64) -> Vec<bool> {
        (0..self.grid.len() - 1)
            .map(|i| self.density[i].modulus() < tol && self.density[i + 1].modulus() < tol)
            .collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        GridMeasure {
            grid: self.grid,
            density: self.density.iter().map(|d| *d * a).collect(),
            atoms: self.atoms.iter().map(|x| Atom { location: x.location, mass: x.mass * a }).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "measure sum")?;
        let density = self.density.iter().zip(&other.density).map(|(a, b)| *a + *b).collect();
        let mut atoms = self.atoms.clone();
        let slack = self.grid.slack();
        for b in &other.atoms {
            match atoms.iter_mut().find(|a| (a.location - b.location).abs() <= slack) {
                Some(a) => a.mass += b.mass,
                None => atoms.push(*b),
            }
        }
        Ok(GridMeasure { grid: self.grid, density, atoms })
    }
}

/// Free-function form of [`GridMeasure::integrate`].
pub fn integrate<S: Scalar>(m: &GridMeasure<S>, set: &IntervalSet) -> Result<S> {
    m.integrate(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeRelation {
    Equivalent,
    /// the first measure dominates the second: second ≪ first only
    Dominates,
    /// the first measure is dominated: first ≪ second only
    Dominated,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureTypeOrder {
    pub relation: TypeRelation,
    pub tolerance: f64,
}

impl MeasureTypeOrder {
    /// `ν ≪ μ` for the pair `(ν, μ)` the order was computed from.
    pub fn first_ll_second(&self) -> bool {
        matches!(self.relation, TypeRelation::Equivalent | TypeRelation::Dominated)
    }

    pub fn second_ll_first(&self) -> bool {
        matches!(self.relation, TypeRelation::Equivalent | TypeRelation::Dominates)
    }
}

fn ll<S: Scalar, T: Scalar>(nu: &GridMeasure<S>, mu: &GridMeasure<T>, tol: f64) -> bool {
    let nu_null = nu.null_cells(tol);
    let mu_null = mu.null_cells(tol);
    let slack = mu.grid.slack();
    // a single point is null for the density part, so atoms of ν must sit on atoms of μ
    let atoms_ok = nu.atoms.iter().filter(|a| a.mass.modulus() >= tol).all(|a| {
        mu.atoms.iter().any(|b| (a.location - b.location).abs() <= slack && b.mass.modulus() >= tol)
    });
    atoms_ok && mu_null.iter().zip(&nu_null).all(|(m, n)| !*m || *n)
}

/// Measure-type comparison of `ν` against `μ`.
///
/// The null set of a density measure is the union of grid cells on which the
/// density vanishes at both endpoints; isolated zeros are null points.
pub fn absolutely_continuous<S: Scalar>(
    nu: &GridMeasure<S>,
    mu: &DensityMeasure,
    tol: f64,
) -> Result<MeasureTypeOrder> {
    nu.grid.ensure_same(&mu.grid, "absolute continuity")?;
    let forward = ll(nu, mu, tol);
    let backward = ll(mu, nu, tol);
    let relation = match (forward, backward) {
        (true, true) => TypeRelation::Equivalent,
        (true, false) => TypeRelation::Dominated,
        (false, true) => TypeRelation::Dominates,
        (false, false) => TypeRelation::Incomparable,
    };
    Ok(MeasureTypeOrder { relation, tolerance: tol })
}

/// Pointwise density ratio `dν/dμ (x)` of the interpolated densities.
///
/// Assumes `ν ≪ μ`; that is not re-checked here.
pub fn rn_derivative_analytic<S: Scalar>(
    nu: &GridMeasure<S>,
    mu: &DensityMeasure,
    x: f64,
    tol: f64,
) -> Result<S> {
    nu.grid.ensure_same(&mu.grid, "Radon-Nikodym derivative")?;
    mu.grid.check_contains(x)?;
    if nu.atom_at(x).is_some() || mu.atom_at(x).is_some() {
        return Err(Error::AtomAtPoint(x));
    }
    let m = mu.density_at(x).expect("inside domain");
    if m < tol {
        return Err(Error::SingularPoint { point: x, density: m });
    }
    Ok(nu.density_at(x).expect("inside domain") / m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

/// Text record `{grid: {lower, upper, n}, density: [..], atoms: [[loc, mass], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub grid: GridRecord,
    pub density: Vec<f64>,
    #[serde(default)]
    pub atoms: Vec<[f64; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn integrate_examples() {
        let g = unit(101);
        let one = DensityMeasure::lebesgue(g);
        assert!((one.integrate(&IntervalSet::closed(0.0, 0.5)).unwrap() - 0.5).abs() < 1e-14);

        let atom = DensityMeasure::new(g, vec![0.0; 101], vec![(0.25, 2.0)]).unwrap();
        assert_eq!(atom.integrate(&IntervalSet::closed(0.0, 0.5)).unwrap(), 2.0);
        // closed boundary counts the atom, half-open right end does not
        assert_eq!(atom.integrate(&IntervalSet::closed(0.25, 0.5)).unwrap(), 2.0);
        assert_eq!(atom.integrate(&IntervalSet::half_open(0.0, 0.25)).unwrap(), 0.0);

        let lin = DensityMeasure::from_fn(g, |x| 2.0 * x).unwrap();
        // off-grid endpoints: the interpolant is exact for linear densities
        let v = lin.integrate(&IntervalSet::closed(0.25, 0.5)).unwrap();
        assert!((v - 0.1875).abs() < 1e-14);
        let v = lin.integrate(&IntervalSet::closed(0.253, 0.5071)).unwrap();
        assert!((v - (0.5071f64.powi(2) - 0.253f64.powi(2))).abs() < 1e-14);
    }

    #[test]
    fn integrate_rejects_non_finite() {
        let m = DensityMeasure::lebesgue(unit(11));
        let bad = IntervalSet::from_intervals(vec![Interval::closed(0.0, f64::NAN)]);
        assert!(matches!(m.integrate(&bad), Err(Error::NonFinite(_))));
        let inf = IntervalSet::from_intervals(vec![Interval::closed(0.0, f64::INFINITY)]);
        assert!(matches!(m.integrate(&inf), Err(Error::NonFinite(_))));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        let g = unit(5);
        assert!(DensityMeasure::new(g, vec![1.0, -1.0, 0.0, 0.0, 0.0], vec![]).is_err());
        assert!(DensityMeasure::new(g, vec![0.0; 5], vec![(0.5, 0.0)]).is_err());
        assert!(DensityMeasure::new(g, vec![0.0; 5], vec![(0.5, 1.0), (0.5, 2.0)]).is_err());
        assert!(DensityMeasure::new(g, vec![f64::NAN; 5], vec![]).is_err());
    }

    #[test]
    fn type_order_examples() {
        let g = unit(201);
        let leb = DensityMeasure::lebesgue(g);
        let lin = DensityMeasure::from_fn(g, |x| 2.0 * x).unwrap();
        let o = absolutely_continuous(&lin, &leb, DEFAULT_NULL_TOL).unwrap();
        assert_eq!(o.relation, TypeRelation::Equivalent);

        let atomic = DensityMeasure::new(g, vec![0.0; 201], vec![(0.5, 1.0)]).unwrap();
        let o = absolutely_continuous(&atomic, &leb, DEFAULT_NULL_TOL).unwrap();
        assert!(!o.first_ll_second());

        let half = DensityMeasure::from_fn(g, |x| if x <= 0.5 { 1.0 } else { 0.0 }).unwrap();
        let o = absolutely_continuous(&half, &leb, DEFAULT_NULL_TOL).unwrap();
        assert_eq!(o.relation, TypeRelation::Dominated);
        let o = absolutely_continuous(&leb, &half, DEFAULT_NULL_TOL).unwrap();
        assert_eq!(o.relation, TypeRelation::Dominates);
    }

    #[test]
    fn rn_examples() {
        let g = unit(201);
        let leb = DensityMeasure::lebesgue(g);
        let lin = DensityMeasure::from_fn(g, |x| 2.0 * x).unwrap();
        assert!((rn_derivative_analytic(&lin, &leb, 0.5, DEFAULT_NULL_TOL).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(rn_derivative_analytic(&leb, &leb, 0.37, DEFAULT_NULL_TOL).unwrap(), 1.0);

        let sq = DensityMeasure::from_fn(g, |x| x * x).unwrap();
        let r = rn_derivative_analytic(&sq, &lin, 0.4, DEFAULT_NULL_TOL).unwrap();
        assert!((r - 0.2).abs() < 1e-12);

        assert!(matches!(
            rn_derivative_analytic(&sq, &lin, 0.0, DEFAULT_NULL_TOL),
            Err(Error::SingularPoint { .. })
        ));
        assert!(matches!(
            rn_derivative_analytic(&sq, &lin, 1.5, DEFAULT_NULL_TOL),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn record_round_trip() {
        let g = unit(5);
        let m = DensityMeasure::new(g, vec![0.0, 1.0, 2.0, 1.0, 0.5], vec![(0.3, 0.25)]).unwrap();
        let s = m.to_json();
        assert!(s.contains("\"grid\":{\"lower\":0.0,\"upper\":1.0,\"n\":5}"));
        assert_eq!(DensityMeasure::from_json(&s).unwrap(), m);
    }
}
