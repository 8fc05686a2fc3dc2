//! Test functions and Dirac kets `λk^×` over a structural isomorphism.

use std::fmt::Write as _;

use crate::direct_integral::{MeasurableField, StructuralIso};
use crate::error::{Error, Result};
use crate::grid::IntervalSet;
use crate::scalar::C64;
use crate::spectral::{decompose_vector, HilbertVector};

/// A vector whose density ratios `dμ_{φ,g_k}/dμ_{g_k}` were checked finite
/// at every grid point outside the exclusion set.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    vector: HilbertVector,
    pub verified_pointwise_rn: bool,
}

impl TestFunction {
    pub fn verify(iso: &StructuralIso, vector: HilbertVector) -> Result<Self> {
        let coefs = decompose_vector(iso.model(), iso.generating_system(), &vector)
            .map_err(|e| Error::NotTestFunction(e.to_string()))?;
        let grid = iso.model().grid();
        let excluded = iso.exclusion_mask();
        for (j, c) in coefs.iter().enumerate() {
            for (k, z) in c.iter().enumerate() {
                if !excluded[k] && !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NotTestFunction(format!(
                        "ratio for g_{} is not finite at {}",
                        j + 1,
                        grid.point(k)
                    )));
                }
            }
        }
        Ok(TestFunction { vector, verified_pointwise_rn: true })
    }

    pub fn vector(&self) -> &HilbertVector {
        &self.vector
    }

    pub fn into_vector(self) -> HilbertVector {
        self.vector
    }
}

/// The generalized eigenvector `λk^×` (channel `k` counted from 0).
#[derive(Debug, Clone, Copy)]
pub struct KetFunctional<'a> {
    iso: &'a StructuralIso,
    lambda: f64,
    k: usize,
}

impl<'a> KetFunctional<'a> {
    pub fn new(iso: &'a StructuralIso, lambda: f64, k: usize) -> Result<Self> {
        let grid = iso.model().grid();
        grid.check_contains(lambda)?;
        let (i, t) = grid.cell_of(lambda).expect("inside domain");
        let used: Vec<usize> = if t == 0.0 { vec![i] } else { vec![i, i + 1] };
        let excluded = iso.exclusion_mask();
        if used.iter().any(|p| excluded[*p]) {
            return Err(Error::Excluded(lambda));
        }
        let n = used.iter().map(|p| iso.dims()[*p]).min().unwrap_or(0);
        if k >= n {
            return Err(Error::Channel { k: k + 1, point: lambda, multiplicity: n });
        }
        Ok(KetFunctional { iso, lambda, k })
    }

    pub fn label(&self) -> (f64, usize) {
        (self.lambda, self.k)
    }

    /// `⟨φ|λk^×⟩ = (e_k(λ), [Vφ](λ))_λ`.
    pub fn evaluate(&self, phi: &TestFunction) -> Result<C64> {
        Ok(self.evaluate_field(&self.iso.forward(phi.vector())?))
    }

    /// Same value from an already transformed vector.
    pub fn evaluate_field(&self, field: &MeasurableField) -> C64 {
        field.component_at(self.k, self.lambda).expect("admissible label")
    }
}

pub fn ket_evaluate(ket: &KetFunctional<'_>, phi: &TestFunction) -> Result<C64> {
    ket.evaluate(phi)
}

/// `|(φ, P(E)ψ) − Σ_k ∫_E conj⟨φ|λk^×⟩ ⟨ψ|λk^×⟩ dμ(λ)|`. Points of `Λ₀` carry
/// grid mass, so they enter with the one-sided field values.
pub fn completeness_check(iso: &StructuralIso, phi: &TestFunction, psi: &TestFunction, set: &IntervalSet) -> Result<f64> {
    let model = iso.model();
    let lhs = model.carrier().inner(phi.vector(), &model.apply_projection(set, psi.vector())?);
    let (fp, fq) = (iso.forward(phi.vector())?, iso.forward(psi.vector())?);
    let grid = model.grid();
    let q = grid.trapezoid_weights();
    let mu = iso.reference().density();
    let mask = grid.mask(set);
    let mut rhs = C64::new(0.0, 0.0);
    for k in 0..grid.len() {
        if !mask[k] {
            continue;
        }
        let mut s = C64::new(0.0, 0.0);
        for j in 0..iso.dims()[k] {
            s += fp.get(k, j).conj() * fq.get(k, j);
        }
        rhs += s * (q[k] * mu[k]);
    }
    Ok((lhs - rhs).norm())
}

/// Rows `lambda,k,re,im` for every admissible grid point and channel (k from 1).
pub fn ket_table_csv(iso: &StructuralIso, phi: &TestFunction) -> Result<String> {
    let field = iso.forward(phi.vector())?;
    let grid = iso.model().grid();
    let mut s = String::from("lambda,k,re,im\n");
    for i in 0..grid.len() {
        if iso.exclusion_mask()[i] {
            continue;
        }
        for k in 0..iso.dims()[i] {
            let z = field.get(i, k);
            let _ = writeln!(s, "{:.16e},{},{:.16e},{:.16e}", grid.point(i), k + 1, z.re, z.im);
        }
    }
    Ok(s)
}
