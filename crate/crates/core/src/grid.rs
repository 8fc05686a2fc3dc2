//! Uniform 1-D grids and finite unions of intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform grid `lower = x_0 < x_1 < ... < x_{n-1} = upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    lower: f64,
    upper: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(lower: f64, upper: f64, n: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if lower >= upper {
            return Err(Error::InvalidGrid(format!(
                "lower {lower} must be below upper {upper}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {n}")));
        }
        Ok(Grid1D { lower, upper, n })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.upper
        } else {
            self.lower + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    /// Tolerance used when deciding whether a grid point lies on a set boundary.
    pub fn slack(&self) -> f64 {
        1e-9 * self.spacing()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn is_interior(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    pub fn check_contains(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { point: x, lower: self.lower, upper: self.upper })
        }
    }

    /// Cell index `i` and fraction `t` with `x = (1-t) x_i + t x_{i+1}`.
    pub fn cell_of(&self, x: f64) -> Option<(usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let h = self.spacing();
        let s = (x - self.lower) / h;
        let i = (s.floor() as usize).min(self.n - 2);
        let t = (s - i as f64).clamp(0.0, 1.0);
        Some((i, t))
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let s = ((x - self.lower) / self.spacing()).round();
        (s.max(0.0) as usize).min(self.n - 1)
    }

    /// Index of a grid point within `slack()` of `x`, if any.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.nearest_index(x);
        ((self.point(i) - x).abs() <= self.slack()).then_some(i)
    }

    /// Linear interpolation of grid samples.
    pub fn interpolate<S: Scalar>(&self, values: &[S], x: f64) -> Option<S> {
        debug_assert_eq!(values.len(), self.n);
        let (i, t) = self.cell_of(x)?;
        if t == 0.0 {
            return Some(values[i]);
        }
        if t == 1.0 {
            return Some(values[i + 1]);
        }
        Some(values[i] * (1.0 - t) + values[i + 1] * t)
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        let scale = self.lower.abs().max(self.upper.abs()).max(1.0);
        self.n == other.n
            && (self.lower - other.lower).abs() <= 1e-12 * scale
            && (self.upper - other.upper).abs() <= 1e-12 * scale
    }

    pub fn ensure_same(&self, other: &Grid1D, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Mismatch(format!("{what}: grids differ ({self:?} vs {other:?})")))
        }
    }

    /// Membership of every grid point in `set`.
    pub fn mask(&self, set: &IntervalSet) -> Vec<bool> {
        let slack = self.slack();
        (0..self.n).map(|i| set.contains(self.point(i), slack)).collect()
    }

    pub fn domain(&self) -> Interval {
        Interval::closed(self.lower, self.upper)
    }
}

/// Interval closed on the left, closed or open on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub right_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, right_closed: true }
    }

    pub fn half_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, right_closed: false }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !self.right_closed)
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        if x < self.lo - slack {
            return false;
        }
        if self.right_closed {
            x <= self.hi + slack
        } else {
            x < self.hi - slack
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let (hi, right_closed) = if self.hi < other.hi {
            (self.hi, self.right_closed)
        } else if other.hi < self.hi {
            (other.hi, other.right_closed)
        } else {
            (self.hi, self.right_closed && other.right_closed)
        };
        Interval { lo, hi, right_closed }
    }
}

/// Finite union of intervals, kept sorted and pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::from_intervals(vec![Interval::closed(lo, hi)])
    }

    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self::from_intervals(vec![Interval::half_open(lo, hi)])
    }

    pub fn from_intervals(mut parts: Vec<Interval>) -> Self {
        parts.retain(|p| !p.is_empty());
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(cur) if p.lo <= cur.hi => {
                    if p.hi > cur.hi {
                        cur.hi = p.hi;
                        cur.right_closed = p.right_closed;
                    } else if p.hi == cur.hi {
                        cur.right_closed |= p.right_closed;
                    }
                }
                _ => merged.push(p),
            }
        }
        IntervalSet { parts: merged }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x, slack))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.parts.clone();
        all.extend_from_slice(&other.parts);
        Self::from_intervals(all)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let c = a.intersect(b);
                if !c.is_empty() {
                    out.push(c);
                }
            }
        }
        Self::from_intervals(out)
    }

    pub fn total_length(&self) -> f64 {
        self.parts.iter().map(Interval::length).sum()
    }
}

impl From<Interval> for IntervalSet {
    fn from(iv: Interval) -> Self {
        IntervalSet::from_intervals(vec![iv])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_exact() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        assert_eq!(g.point(0), 0.0);
        assert_eq!(g.point(10), 1.0);
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert!(Grid1D::new(0.0, 1.0, 2).is_err());
        assert!(Grid1D::new(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn interpolation_is_linear() {
        let g = Grid1D::new(0.0, 1.0, 5).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((g.interpolate(&v, 0.33).unwrap() - 1.99).abs() < 1e-14);
        assert_eq!(g.interpolate(&v, 1.0), Some(4.0));
        assert_eq!(g.interpolate(&v, 1.5), None);
    }

    #[test]
    fn merge_and_intersect() {
        let s = IntervalSet::from_intervals(vec![
            Interval::half_open(0.0, 0.5),
            Interval::closed(0.5, 0.7),
            Interval::closed(0.9, 1.0),
        ]);
        assert_eq!(s.parts().len(), 2);
        assert!(s.contains(0.5, 0.0));
        let t = s.intersect(&IntervalSet::half_open(0.6, 0.95));
        assert!(t.contains(0.7, 0.0));
        assert!(!t.contains(0.95, 0.0));
        assert!(t.contains(0.9, 0.0));
        assert!((t.total_length() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn half_open_excludes_right_end() {
        let s = IntervalSet::half_open(0.0, 0.5);
        assert!(!s.contains(0.5, 0.0));
        assert!(s.contains(0.0, 0.0));
    }
}
