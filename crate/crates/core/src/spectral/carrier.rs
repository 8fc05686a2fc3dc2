//! The Hilbert space shared by both sides of a transformation scenario:
//! channel-valued functions on a grid, weighted by a density.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::measure::DensityMeasure;
use crate::scalar::C64;

/// Piecewise-constant multiplicity `N(λ)`; the first matching piece wins at
/// shared endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityProfile {
    pieces: Vec<(f64, f64, usize)>,
    default: usize,
}

impl MultiplicityProfile {
    pub fn constant(m: usize) -> Self {
        MultiplicityProfile { pieces: Vec::new(), default: m }
    }

    /// `pieces` are `(lo, hi, N)`; points not covered get multiplicity 0.
    pub fn piecewise(pieces: Vec<(f64, f64, usize)>) -> Result<Self> {
        for (lo, hi, _) in &pieces {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("bad multiplicity piece [{lo}, {hi}]")));
            }
        }
        Ok(MultiplicityProfile { pieces, default: 0 })
    }

    pub fn at(&self, x: f64, slack: f64) -> usize {
        if self.pieces.is_empty() {
            return self.default;
        }
        self.pieces
            .iter()
            .find(|(lo, hi, _)| x >= lo - slack && x <= hi + slack)
            .map(|p| p.2)
            .unwrap_or(self.default)
    }

    pub fn max(&self) -> usize {
        self.pieces.iter().map(|p| p.2).max().unwrap_or(0).max(self.default)
    }

    /// Parses `2` or `2@0:0.5, 1@0.5:1`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(m) = s.parse::<usize>() {
            return Ok(Self::constant(m));
        }
        let mut pieces = Vec::new();
        for part in s.split(',') {
            let bad = || Error::InvalidArgument(format!("bad multiplicity piece `{}`", part.trim()));
            let (n, range) = part.trim().split_once('@').ok_or_else(bad)?;
            let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
            pieces.push((
                lo.trim().parse().map_err(|_| bad())?,
                hi.trim().parse().map_err(|_| bad())?,
                n.trim().parse().map_err(|_| bad())?,
            ));
        }
        Self::piecewise(pieces)
    }
}

/// `L²(Λ, w; ℂ^m)` restricted to the active slots `(i, c)` with `c < N(x_i)`
/// and `w(x_i) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Carrier {
    grid: Grid1D,
    weight: DensityMeasure,
    channels: usize,
    dims: Vec<usize>,
    /// `q_i w_i`: quadrature weight times density.
    omega: Vec<f64>,
}

impl Carrier {
    pub fn new(weight: DensityMeasure, profile: &MultiplicityProfile) -> Result<Self> {
        if !weight.is_atomless() {
            return Err(Error::InvalidMeasure("carrier weight must be atomless".into()));
        }
        let grid = *weight.grid();
        let slack = grid.slack();
        let channels = profile.max();
        if channels == 0 {
            return Err(Error::InvalidArgument("multiplicity must be positive somewhere".into()));
        }
        let q = grid.trapezoid_weights();
        let omega: Vec<f64> = q.iter().zip(weight.density()).map(|(q, w)| q * w).collect();
        let dims = grid
            .points()
            .iter()
            .zip(&omega)
            .map(|(x, o)| if *o > 0.0 { profile.at(*x, slack) } else { 0 })
            .collect();
        Ok(Carrier { grid, weight, channels, dims, omega })
    }

    pub fn lebesgue(grid: Grid1D, m: usize) -> Self {
        Self::new(DensityMeasure::lebesgue(grid), &MultiplicityProfile::constant(m))
            .expect("positive multiplicity")
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn weight(&self) -> &DensityMeasure {
        &self.weight
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn is_active(&self, i: usize, c: usize) -> bool {
        c < self.dims[i]
    }

    /// Every slot active: no vanishing weight and constant multiplicity.
    pub fn is_full(&self) -> bool {
        self.dims.iter().all(|d| *d == self.channels)
    }

    pub fn zero(&self) -> HilbertVector {
        HilbertVector { grid: self.grid, channels: self.channels, data: vec![C64::new(0.0, 0.0); self.grid.len() * self.channels] }
    }

    /// Samples `f(x, c)` on active slots, zero elsewhere.
    pub fn vector(&self, f: impl Fn(f64, usize) -> C64) -> HilbertVector {
        let mut v = self.zero();
        for i in 0..self.grid.len() {
            let x = self.grid.point(i);
            for c in 0..self.dims[i] {
                v.data[i * self.channels + c] = f(x, c);
            }
        }
        v
    }

    pub fn check(&self, f: &HilbertVector) -> Result<()> {
        self.grid.ensure_same(&f.grid, "hilbert vector")?;
        if f.channels != self.channels {
            return Err(Error::Mismatch(format!(
                "vector has {} channels, carrier {}",
                f.channels, self.channels
            )));
        }
        if f.data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("hilbert vector".into()));
        }
        Ok(())
    }

    /// `(f, g) = Σ_i q_i w_i Σ_c conj(f_ic) g_ic`, antilinear in `f`.
    pub fn inner(&self, f: &HilbertVector, g: &HilbertVector) -> C64 {
        let m = self.channels;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.grid.len() {
            let mut s = C64::new(0.0, 0.0);
            for c in 0..self.dims[i] {
                s += f.data[i * m + c].conj() * g.data[i * m + c];
            }
            acc += s * self.omega[i];
        }
        acc
    }

    pub fn norm(&self, f: &HilbertVector) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }

    /// Zeroes samples on inactive slots.
    pub fn restrict(&self, f: &mut HilbertVector) {
        let m = self.channels;
        for i in 0..self.grid.len() {
            for c in self.dims[i]..m {
                f.data[i * m + c] = C64::new(0.0, 0.0);
            }
        }
    }
}

/// Channel-valued grid samples, stored point-major: `data[i * channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertVector {
    grid: Grid1D,
    channels: usize,
    data: Vec<C64>,
}

impl HilbertVector {
    pub fn from_samples(grid: Grid1D, channels: usize, data: Vec<C64>) -> Result<Self> {
        if channels == 0 || data.len() != grid.len() * channels {
            return Err(Error::Mismatch(format!(
                "{} samples for {} points x {} channels",
                data.len(),
                grid.len(),
                channels
            )));
        }
        Ok(HilbertVector { grid, channels, data })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, c: usize) -> C64 {
        self.data[i * self.channels + c]
    }

    pub fn channel(&self, c: usize) -> Vec<C64> {
        (0..self.grid.len()).map(|i| self.get(i, c)).collect()
    }

    pub fn scale(&self, a: C64) -> HilbertVector {
        HilbertVector { grid: self.grid, channels: self.channels, data: self.data.iter().map(|z| z * a).collect() }
    }

    pub fn add(&self, other: &HilbertVector) -> HilbertVector {
        debug_assert_eq!(self.data.len(), other.data.len());
        HilbertVector {
            grid: self.grid,
            channels: self.channels,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &HilbertVector) -> HilbertVector {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn axpy(&mut self, a: C64, x: &HilbertVector) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += a * x;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_parsing() {
        let p = MultiplicityProfile::parse("2@0:0.5, 1@0.5:1").unwrap();
        assert_eq!(p.at(0.25, 0.0), 2);
        assert_eq!(p.at(0.5, 0.0), 2);
        assert_eq!(p.at(0.75, 0.0), 1);
        assert_eq!(p.max(), 2);
        assert_eq!(MultiplicityProfile::parse("3").unwrap().at(7.0, 0.0), 3);
        assert!(MultiplicityProfile::parse("2@0").is_err());
    }

    #[test]
    fn inner_product_is_trapezoid() {
        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        let car = Carrier::lebesgue(g, 1);
        let one = car.vector(|_, _| C64::new(1.0, 0.0));
        let lam = car.vector(|x, _| C64::new(x, 0.0));
        assert!((car.inner(&one, &lam) - C64::new(0.5, 0.0)).norm() < 1e-14);
        let il = car.vector(|x, _| C64::new(0.0, x));
        // antilinear in the first slot
        assert!((car.inner(&il, &one) - C64::new(0.0, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn inactive_slots_are_zero() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        let prof = MultiplicityProfile::parse("2@0:0.5, 1@0.5:1").unwrap();
        let car = Carrier::new(DensityMeasure::lebesgue(g), &prof).unwrap();
        let v = car.vector(|_, _| C64::new(1.0, 0.0));
        assert_eq!(v.get(8, 1), C64::new(0.0, 0.0));
        assert_eq!(v.get(2, 1), C64::new(1.0, 0.0));
        assert!(!car.is_full());
    }
}
