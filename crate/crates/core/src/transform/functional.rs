use crate::direct_integral::{MeasurableField, StructuralIso};
use crate::error::{Error, Result};
use crate::grid::IntervalSet;
use crate::rigging::TestFunction;
use crate::scalar::C64;
use crate::spectral::{decompose_vector, HilbertVector};

use super::scenario::TransformScenario;

/// Partial sums over `l = 1..=m` of `Σ_{j<l} ∫ conj(x_j) y_j dμ` on the P side.
pub(crate) fn pairing(iso: &StructuralIso, x: &MeasurableField, y: &MeasurableField) -> Vec<C64> {
    let grid = iso.model().grid();
    let q = grid.trapezoid_weights();
    let mu = iso.reference().density();
    let m = iso.multiplicity();
    let mut acc = vec![C64::new(0.0, 0.0); m];
    for k in 0..grid.len() {
        let w = q[k] * mu[k];
        for (j, a) in acc.iter_mut().enumerate().take(iso.dims()[k]) {
            *a += x.get(k, j).conj() * y.get(k, j) * w;
        }
    }
    for j in 1..m {
        let prev = acc[j - 1];
        acc[j] += prev;
    }
    acc
}

pub(crate) fn field_energy(iso: &StructuralIso, x: &MeasurableField) -> Vec<f64> {
    pairing(iso, x, x).into_iter().map(|z| z.re.max(0.0)).collect()
}

/// `Γ̃_nl` and `Γ_nl` for one target `(ξ, k)` and one set `F` (all `l` at once).
#[derive(Debug, Clone)]
pub struct ApproxFunctional<'a> {
    sc: &'a TransformScenario,
    pub xi: f64,
    pub k: usize,
    pub set: IntervalSet,
    pub prefactor: f64,
    pub mass: f64,
    /// `V Q(F) g′_k`
    a: MeasurableField,
    /// `√(dμ_{g_j}/dμ) [(Q(F)g′_k)~]_j` assembled from the decomposition route.
    a_tilde: MeasurableField,
}

impl<'a> ApproxFunctional<'a> {
    pub fn new(sc: &'a TransformScenario, xi: f64, k: usize, set: IntervalSet) -> Result<Self> {
        let prefactor = sc.prefactor(xi, k)?;
        let mass = sc.reference_mass(&set)?;
        if mass <= 0.0 {
            return Err(Error::InvalidArgument(format!("μ′(F) vanishes on {set:?}")));
        }
        let qg = sc.q_model().apply_projection(&set, sc.q_generator(k)?)?;
        let p = sc.p();
        let a = p.forward(&qg)?;
        let coefs = decompose_vector(p.model(), p.generating_system(), &qg)?;
        let m = p.multiplicity();
        let n = p.model().grid().len();
        let mut samples = vec![C64::new(0.0, 0.0); n * m];
        for (j, c) in coefs.iter().enumerate() {
            for k in 0..n {
                samples[k * m + j] = c[k] * p.factor(j, k);
            }
        }
        let a_tilde = MeasurableField::new(p.reference().clone(), p.dims().to_vec(), m, samples)?;
        Ok(ApproxFunctional { sc, xi, k, set, prefactor, mass, a, a_tilde })
    }

    fn scale(&self, v: Vec<C64>) -> Vec<C64> {
        let s = self.prefactor / self.mass;
        v.into_iter().map(|z| z * s).collect()
    }

    /// The representer `V Q(F) g′_k` on the P side.
    pub fn representer(&self) -> &MeasurableField {
        &self.a
    }

    /// `Γ̃_nl(h)` from `Vh`: `Σ_j ∫ (e_j, Vh)(VQ(F)g′_k, e_j) dμ`, scaled.
    pub fn gamma_tilde(&self, vh: &MeasurableField) -> Vec<C64> {
        self.scale(pairing(self.sc.p(), &self.a, vh))
    }

    /// The same limit with `Q(F)` moved onto `h`.
    pub fn gamma_tilde_alt(&self, h: &HilbertVector) -> Result<Vec<C64>> {
        let p = self.sc.p();
        let vqh = p.forward(&self.sc.q_model().apply_projection(&self.set, h)?)?;
        Ok(self.scale(pairing(p, self.sc.vg_prime(self.k), &vqh)))
    }

    /// `Γ_nl(φ)` from `Vφ` through the coefficient functions of `Q(F)g′_k`.
    pub fn gamma_ket(&self, vphi: &MeasurableField) -> Vec<C64> {
        self.scale(pairing(self.sc.p(), &self.a_tilde, vphi))
    }

    /// The two ket-pairing forms: `Q(F)` on `φ`, and `Q(F)` on `g′_k`.
    pub fn gamma_ket_forms(&self, phi: &TestFunction, vphi: &MeasurableField) -> Result<(Vec<C64>, Vec<C64>)> {
        let p = self.sc.p();
        let qphi = self.sc.q_model().apply_projection(&self.set, phi.vector())?;
        let a = pairing(p, self.sc.vg_prime(self.k), &p.forward(&qphi)?);
        let b = pairing(p, &self.a, vphi);
        Ok((self.scale(a), self.scale(b)))
    }

    /// Hilbert norm of the representer of `Γ̃_nl`, per `l`.
    pub fn dual_norms(&self) -> Vec<f64> {
        let s = self.prefactor / self.mass;
        field_energy(self.sc.p(), &self.a).into_iter().map(|e| s * e.sqrt()).collect()
    }
}
