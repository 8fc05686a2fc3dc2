//! Unitary maps from the carrier onto weighted spectral nodes.
//!
//! Every model is `S: ℋ → ℂ^nodes` with `Σ_n ω_n |(Sf)_n|² = ‖f‖²`. The
//! projection of a set `E` is `S* 1_E S`, where `1_E` keeps the nodes whose
//! location lies in `E`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::scalar::C64;

use super::carrier::{Carrier, HilbertVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub loc: f64,
    pub weight: f64,
    pub channel: usize,
}

/// Per-channel relabelling `ξ = s(λ)` of spectral values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Identity,
    Exp,
    /// `λ ↦ lower + upper − λ`
    Reflect { lower: f64, upper: f64 },
}

impl Label {
    pub fn forward(&self, x: f64) -> f64 {
        match *self {
            Label::Identity => x,
            Label::Exp => x.exp(),
            Label::Reflect { lower, upper } => lower + upper - x,
        }
    }

    pub fn inverse(&self, xi: f64) -> f64 {
        match *self {
            Label::Identity => xi,
            Label::Exp => xi.ln(),
            Label::Reflect { lower, upper } => lower + upper - xi,
        }
    }

    /// `|dλ/dξ|` at `ξ`.
    pub fn inverse_jacobian(&self, xi: f64) -> f64 {
        match *self {
            Label::Identity | Label::Reflect { .. } => 1.0,
            Label::Exp => 1.0 / xi,
        }
    }

    pub fn image(&self, grid: &Grid1D) -> Result<Grid1D> {
        let (a, b) = (self.forward(grid.lower()), self.forward(grid.upper()));
        Grid1D::new(a.min(b), a.max(b), grid.len())
    }
}

/// Constant fiber unitary applied before relabelling.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberUnitary {
    Identity,
    /// 2×2 rotation by `θ`.
    Rotation(f64),
}

impl FiberUnitary {
    fn matrix(&self, m: usize) -> Result<Vec<C64>> {
        let mut r = vec![C64::new(0.0, 0.0); m * m];
        match *self {
            FiberUnitary::Identity => {
                for c in 0..m {
                    r[c * m + c] = C64::new(1.0, 0.0);
                }
            }
            FiberUnitary::Rotation(t) => {
                if m != 2 {
                    return Err(Error::InvalidArgument(format!("rotation needs 2 channels, got {m}")));
                }
                r[0] = C64::new(t.cos(), 0.0);
                r[1] = C64::new(-t.sin(), 0.0);
                r[2] = C64::new(t.sin(), 0.0);
                r[3] = C64::new(t.cos(), 0.0);
            }
        }
        Ok(r)
    }
}

#[derive(Clone)]
pub struct DftMap {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    n: usize,
    k0: usize,
    x0: f64,
    xi: Vec<f64>,
}

impl fmt::Debug for DftMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftMap").field("n", &self.n).field("k0", &self.k0).field("x0", &self.x0).finish()
    }
}

/// Explicit unitary `W` in orthonormal coordinates, with its adjoint.
#[derive(Debug, Clone)]
pub struct DenseMap {
    w: DMatrix<C64>,
    wh: DMatrix<C64>,
}

#[derive(Debug, Clone)]
pub struct RelabelMap {
    r: Vec<C64>,
    labels: Vec<Label>,
}

#[derive(Debug, Clone)]
pub enum SpectralMap {
    /// Multiplication model: nodes are the active carrier slots.
    Identity { slots: Vec<usize> },
    Dft(DftMap),
    Dense(DenseMap),
    Relabel(RelabelMap),
    /// Multiplication model with locations snapped to finitely many levels.
    Quantized { slots: Vec<usize> },
}

/// Spectral grid for the discrete Fourier map: `ξ_k = (k − ⌊N/2⌋)·2π/(N h)`.
pub fn dft_grid(x: &Grid1D) -> Grid1D {
    let n = x.len();
    let k0 = n / 2;
    let dxi = 2.0 * PI / (n as f64 * x.spacing());
    Grid1D::new(-(k0 as f64) * dxi, (n - 1 - k0) as f64 * dxi, n).expect("n >= 3")
}

fn active_slots(car: &Carrier) -> Vec<usize> {
    let m = car.channels();
    let mut slots = Vec::new();
    for (i, d) in car.dims().iter().enumerate() {
        for c in 0..*d {
            slots.push(i * m + c);
        }
    }
    slots
}

fn require_full(car: &Carrier, what: &str) -> Result<()> {
    if car.is_full() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{what} needs a carrier with positive weight and constant multiplicity"
        )))
    }
}

impl SpectralMap {
    pub fn identity(car: &Carrier) -> (Self, Vec<Node>) {
        let m = car.channels();
        let slots = active_slots(car);
        let nodes = slots
            .iter()
            .map(|s| Node { loc: car.grid().point(s / m), weight: car.omega()[s / m], channel: s % m })
            .collect();
        (SpectralMap::Identity { slots }, nodes)
    }

    pub fn quantized(car: &Carrier, levels: &[f64]) -> Result<(Self, Vec<Node>)> {
        if levels.is_empty() || levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("quantization needs finite levels".into()));
        }
        let (map, mut nodes) = Self::identity(car);
        for n in &mut nodes {
            n.loc = *levels
                .iter()
                .min_by(|a, b| (*a - n.loc).abs().total_cmp(&(*b - n.loc).abs()))
                .expect("non-empty");
        }
        let SpectralMap::Identity { slots } = map else { unreachable!() };
        Ok((SpectralMap::Quantized { slots }, nodes))
    }

    fn fourier_nodes(xi_grid: &Grid1D, m: usize) -> Vec<Node> {
        let q = xi_grid.trapezoid_weights();
        let mut nodes = Vec::with_capacity(xi_grid.len() * m);
        for (k, qk) in q.iter().enumerate() {
            for c in 0..m {
                nodes.push(Node { loc: xi_grid.point(k), weight: *qk, channel: c });
            }
        }
        nodes
    }

    pub fn dft(car: &Carrier) -> Result<(Self, Grid1D, Vec<Node>)> {
        require_full(car, "the Fourier map")?;
        let g = car.grid();
        let n = g.len();
        let xi_grid = dft_grid(g);
        let mut planner = FftPlanner::new();
        let map = DftMap {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            n,
            k0: n / 2,
            x0: g.lower(),
            xi: xi_grid.points(),
        };
        let nodes = Self::fourier_nodes(&xi_grid, car.channels());
        Ok((SpectralMap::Dft(map), xi_grid, nodes))
    }

    /// Explicit matrix of the same Fourier map, for cross-checks on small grids.
    pub fn dense_dft(car: &Carrier) -> Result<(Self, Grid1D, Vec<Node>)> {
        require_full(car, "the Fourier map")?;
        let g = car.grid();
        let (n, m) = (g.len(), car.channels());
        let xi_grid = dft_grid(g);
        let norm = 1.0 / (n as f64).sqrt();
        let w = DMatrix::from_fn(n * m, n * m, |r, s| {
            if r % m != s % m {
                return C64::new(0.0, 0.0);
            }
            let (k, i) = (r / m, s / m);
            // phase reduced mod 2π through the integer product
            let t = -2.0 * PI * (((i * k) % n) as f64 - ((i * (n / 2)) % n) as f64) / n as f64
                - g.lower() * xi_grid.point(k);
            C64::from_polar(norm, t)
        });
        let nodes = Self::fourier_nodes(&xi_grid, m);
        Ok((Self::dense(w)?, xi_grid, nodes))
    }

    pub fn dense(w: DMatrix<C64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::InvalidArgument("dense unitary must be square".into()));
        }
        let wh = w.adjoint();
        let err = (&wh * &w - DMatrix::<C64>::identity(w.nrows(), w.ncols())).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > 1e-8 {
            return Err(Error::InvalidArgument(format!("matrix is not unitary (defect {err:e})")));
        }
        Ok(SpectralMap::Dense(DenseMap { w, wh }))
    }

    pub fn relabel(car: &Carrier, unitary: &FiberUnitary, labels: Vec<Label>) -> Result<(Self, Vec<Node>)> {
        require_full(car, "a relabelled model")?;
        let m = car.channels();
        if labels.len() != m {
            return Err(Error::InvalidArgument(format!("{} labels for {m} channels", labels.len())));
        }
        let r = unitary.matrix(m)?;
        let g = car.grid();
        let mut nodes = Vec::with_capacity(g.len() * m);
        for i in 0..g.len() {
            for (c, l) in labels.iter().enumerate() {
                nodes.push(Node { loc: l.forward(g.point(i)), weight: car.omega()[i], channel: c });
            }
        }
        Ok((SpectralMap::Relabel(RelabelMap { r, labels }), nodes))
    }

    pub fn labels(&self) -> Option<&[Label]> {
        match self {
            SpectralMap::Relabel(r) => Some(&r.labels),
            _ => None,
        }
    }

    /// Node coefficients `Sf`.
    pub fn forward(&self, car: &Carrier, nodes: &[Node], f: &HilbertVector) -> Vec<C64> {
        let m = car.channels();
        let data = f.data();
        match self {
            SpectralMap::Identity { slots } | SpectralMap::Quantized { slots } => {
                slots.iter().map(|s| data[*s]).collect()
            }
            SpectralMap::Relabel(rl) => {
                let mut out = vec![C64::new(0.0, 0.0); data.len()];
                for i in 0..car.grid().len() {
                    for c in 0..m {
                        let mut s = C64::new(0.0, 0.0);
                        for d in 0..m {
                            s += rl.r[c * m + d] * data[i * m + d];
                        }
                        out[i * m + c] = s;
                    }
                }
                out
            }
            SpectralMap::Dft(d) => {
                let n = d.n;
                let mut out = vec![C64::new(0.0, 0.0); n * m];
                let mut buf = vec![C64::new(0.0, 0.0); n];
                let norm = 1.0 / (n as f64).sqrt();
                for c in 0..m {
                    for i in 0..n {
                        let shift = C64::from_polar(1.0, 2.0 * PI * ((i * d.k0) % n) as f64 / n as f64);
                        buf[i] = data[i * m + c] * car.omega()[i].sqrt() * shift;
                    }
                    d.fwd.process(&mut buf);
                    for k in 0..n {
                        let phase = C64::from_polar(norm, -d.x0 * d.xi[k]);
                        out[k * m + c] = buf[k] * phase / nodes[k * m + c].weight.sqrt();
                    }
                }
                out
            }
            SpectralMap::Dense(dm) => {
                let a = nalgebra::DVector::from_iterator(
                    data.len(),
                    data.iter().enumerate().map(|(s, z)| z * car.omega()[s / m].sqrt()),
                );
                let b = &dm.w * a;
                b.iter().zip(nodes).map(|(z, nd)| z / nd.weight.sqrt()).collect()
            }
        }
    }

    /// `S* b`, the adjoint with respect to the weighted inner products.
    pub fn adjoint(&self, car: &Carrier, nodes: &[Node], b: &[C64]) -> HilbertVector {
        let m = car.channels();
        let mut f = car.zero();
        let data = f.data_mut();
        match self {
            SpectralMap::Identity { slots } | SpectralMap::Quantized { slots } => {
                for (s, z) in slots.iter().zip(b) {
                    data[*s] = *z;
                }
            }
            SpectralMap::Relabel(rl) => {
                for i in 0..car.grid().len() {
                    for d in 0..m {
                        let mut s = C64::new(0.0, 0.0);
                        for c in 0..m {
                            s += rl.r[c * m + d].conj() * b[i * m + c];
                        }
                        data[i * m + d] = s;
                    }
                }
            }
            SpectralMap::Dft(d) => {
                let n = d.n;
                let mut buf = vec![C64::new(0.0, 0.0); n];
                let norm = 1.0 / (n as f64).sqrt();
                for c in 0..m {
                    for k in 0..n {
                        let phase = C64::from_polar(norm, d.x0 * d.xi[k]);
                        buf[k] = b[k * m + c] * nodes[k * m + c].weight.sqrt() * phase;
                    }
                    d.inv.process(&mut buf);
                    for i in 0..n {
                        let shift = C64::from_polar(1.0, -2.0 * PI * ((i * d.k0) % n) as f64 / n as f64);
                        data[i * m + c] = buf[i] * shift / car.omega()[i].sqrt();
                    }
                }
            }
            SpectralMap::Dense(dm) => {
                let bv = nalgebra::DVector::from_iterator(
                    b.len(),
                    b.iter().zip(nodes).map(|(z, nd)| z * nd.weight.sqrt()),
                );
                let a = &dm.wh * bv;
                for (s, z) in a.iter().enumerate() {
                    data[s] = z / car.omega()[s / m].sqrt();
                }
            }
        }
        f
    }
}
