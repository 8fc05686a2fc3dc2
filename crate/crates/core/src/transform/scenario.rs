use crate::direct_integral::{IsoDiagnostics, MeasurableField, StructuralIso};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, IntervalSet};
use crate::scalar::C64;
use crate::spectral::{commutator_defect, probe_vectors, HilbertVector, SpectralModel};

pub const COMMUTATION_TOL: f64 = 1e-8;

/// Second spectral measure space on the shared Hilbert space.
#[derive(Debug, Clone)]
pub enum QSide {
    Iso(StructuralIso),
    /// Pure point `Q`; only the identities that need no Vitali system apply.
    Atomic(SpectralModel),
}

/// Two spectral measure spaces `P` on `Λ` and `Q` on `Ξ` over one `ℋ`.
#[derive(Debug, Clone)]
pub struct TransformScenario {
    p: StructuralIso,
    q: QSide,
    commutator: f64,
    p_checks: IsoDiagnostics,
    q_checks: Option<IsoDiagnostics>,
    /// `V g′_k` on the P side.
    vg_prime: Vec<MeasurableField>,
    /// Per Q node: `ω |b_{g′_1}|² dμ′/dμ^Q_{g′_1}`.
    ref_node_mass: Vec<f64>,
}

fn test_sets(g: &Grid1D) -> Vec<IntervalSet> {
    let (a, w) = (g.lower(), g.upper() - g.lower());
    vec![
        IntervalSet::closed(a, a + 0.5 * w),
        IntervalSet::closed(a + 0.25 * w, a + 0.75 * w),
        IntervalSet::half_open(a + 0.1 * w, a + 0.3 * w),
    ]
}

impl TransformScenario {
    pub fn new(p: StructuralIso, q: QSide) -> Result<Self> {
        let qm = match &q {
            QSide::Iso(i) => i.model(),
            QSide::Atomic(m) => m,
        };
        if p.model().carrier() != qm.carrier() {
            return Err(Error::Mismatch("P and Q must act on the same Hilbert space".into()));
        }
        let probes = probe_vectors(p.model().carrier());
        let commutator = commutator_defect(
            p.model(),
            qm,
            &test_sets(p.model().grid()),
            &test_sets(qm.grid()),
            &probes,
        )?;
        let p_checks = p.diagnostics()?;
        let (q_checks, vg_prime, ref_node_mass) = match &q {
            QSide::Iso(qi) => {
                let vg = qi.generating_system().vectors().iter().map(|g| p.forward(g)).collect::<Result<_>>()?;
                (Some(qi.diagnostics()?), vg, reference_node_mass(qi)?)
            }
            QSide::Atomic(_) => (None, Vec::new(), Vec::new()),
        };
        Ok(TransformScenario { p, q, commutator, p_checks, q_checks, vg_prime, ref_node_mass })
    }

    pub fn p(&self) -> &StructuralIso {
        &self.p
    }

    pub fn q_model(&self) -> &SpectralModel {
        match &self.q {
            QSide::Iso(i) => i.model(),
            QSide::Atomic(m) => m,
        }
    }

    /// The Q-side isomorphism; atomic Q has none.
    pub fn q_iso(&self) -> Result<&StructuralIso> {
        match &self.q {
            QSide::Iso(i) => Ok(i),
            QSide::Atomic(_) => Err(Error::AtomicSpectrum("Q has atoms, so μ′ has no Vitali system".into())),
        }
    }

    pub fn commuting(&self) -> bool {
        self.commutator <= COMMUTATION_TOL
    }

    pub fn commutator_defect(&self) -> f64 {
        self.commutator
    }

    pub fn p_checks(&self) -> &IsoDiagnostics {
        &self.p_checks
    }

    pub fn q_checks(&self) -> Option<&IsoDiagnostics> {
        self.q_checks.as_ref()
    }

    /// `m`, the number of P-side generators.
    pub fn p_multiplicity(&self) -> usize {
        self.p.multiplicity()
    }

    pub fn q_generator(&self, k: usize) -> Result<&HilbertVector> {
        let qi = self.q_iso()?;
        qi.generating_system()
            .vectors()
            .get(k)
            .ok_or(Error::Channel { k: k + 1, point: f64::NAN, multiplicity: qi.multiplicity() })
    }

    pub(crate) fn vg_prime(&self, k: usize) -> &MeasurableField {
        &self.vg_prime[k]
    }

    /// `μ′(F)` lumped on the same Q nodes that `Q(F)` keeps.
    pub fn reference_mass(&self, set: &IntervalSet) -> Result<f64> {
        self.q_iso()?;
        let mask = self.q_model().node_mask(set);
        Ok(self.ref_node_mass.iter().zip(mask).filter(|(_, m)| *m).map(|(w, _)| w).sum())
    }

    /// `√(dμ′/dμ^Q_{g′_k})(ξ)`.
    pub fn prefactor(&self, xi: f64, k: usize) -> Result<f64> {
        let qi = self.q_iso()?;
        if k >= qi.multiplicity() {
            return Err(Error::Channel { k: k + 1, point: xi, multiplicity: qi.multiplicity() });
        }
        let gs = qi.generating_system();
        let r = crate::measure::rn_derivative_analytic(qi.reference(), gs.density(k), xi, gs.tolerance())?;
        Ok(r.sqrt())
    }

    /// The Q-side coordinate `(e′_k(ξ), [V′h](ξ))`, read from the Q-side transform.
    pub fn q_coordinate(&self, h: &HilbertVector, xi: f64, k: usize) -> Result<C64> {
        let qi = self.q_iso()?;
        let ket = crate::rigging::KetFunctional::new(qi, xi, k)?;
        Ok(ket.evaluate_field(&qi.forward(h)?))
    }
}

fn reference_node_mass(qi: &StructuralIso) -> Result<Vec<f64>> {
    let model = qi.model();
    let gs = qi.generating_system();
    let d1 = gs.density(0).density();
    let mu = qi.reference().density();
    let ratio: Vec<f64> = d1
        .iter()
        .zip(mu)
        .map(|(d, m)| if *d >= gs.tolerance() { m / d } else { 0.0 })
        .collect();
    let b = gs.coefficients(0);
    Ok(model
        .nodes()
        .iter()
        .zip(b)
        .map(|(n, z)| {
            let r = model.grid().interpolate(&ratio, n.loc).unwrap_or(0.0);
            n.weight * z.norm_sqr() * r
        })
        .collect())
}
