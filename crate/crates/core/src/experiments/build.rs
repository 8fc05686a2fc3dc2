//! Turning a scenario config into models, isomorphisms and oracles.

use crate::direct_integral::{Reference, StructuralIso};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::measure::DensityMeasure;
use crate::scalar::C64;
use crate::spectral::{verify_generating_system, Carrier, FiberUnitary, GsOptions, HilbertVector, Label, SpectralModel};
use crate::transform::{QSide, TransformScenario};

use super::catalog::{inv_sqrt_2pi, Term};
use super::config::{ReferenceId, ScenarioConfig, UnitaryId};

pub fn carrier(cfg: &ScenarioConfig) -> Result<Carrier> {
    let g = Grid1D::new(cfg.grid.lower, cfg.grid.upper, cfg.grid.n)?;
    let w = DensityMeasure::from_fn(g, |x| cfg.p.weight.eval(x).re)?;
    Carrier::new(w, &cfg.p.profile)
}

pub fn q_model(cfg: &ScenarioConfig, car: Carrier) -> Result<SpectralModel> {
    let m = car.channels();
    let g = *car.grid();
    match &cfg.unitary {
        UnitaryId::Identity => SpectralModel::relabelled(car, FiberUnitary::Identity, vec![Label::Identity; m]),
        UnitaryId::Dft => SpectralModel::fourier(car),
        UnitaryId::DiffeoExp => SpectralModel::relabelled(car, FiberUnitary::Identity, vec![Label::Exp; m]),
        UnitaryId::RotReflect(t) => SpectralModel::relabelled(
            car,
            FiberUnitary::Rotation(*t),
            vec![Label::Identity, Label::Reflect { lower: g.lower(), upper: g.upper() }],
        ),
        UnitaryId::Atomic(levels) => SpectralModel::atomic(car, levels),
    }
}

fn iso(model: SpectralModel, gens: Vec<HilbertVector>, reference: ReferenceId, opts: GsOptions) -> Result<StructuralIso> {
    let gs = verify_generating_system(&model, gens, opts)?
        .into_result()
        .map_err(|e| Error::Verification(format!("{e}")))?;
    let reference = match reference {
        ReferenceId::Generator => Reference::FirstGenerator,
        ReferenceId::Lebesgue => Reference::Explicit(DensityMeasure::lebesgue(*model.grid())),
    };
    StructuralIso::new(model, gs, reference)
}

fn sample(car: &Carrier, terms: &[Term]) -> HilbertVector {
    car.vector(|x, c| terms[c].eval(x))
}

pub fn probe(car: &Carrier, terms: &[Term]) -> HilbertVector {
    sample(car, terms)
}

pub fn build_scenario(cfg: &ScenarioConfig) -> Result<TransformScenario> {
    let car = carrier(cfg)?;
    let opts = GsOptions { recon_tol: cfg.tol.recon, ..GsOptions::default() };
    let p_gens = cfg.p.gens.iter().map(|t| sample(&car, t)).collect();
    let p = iso(SpectralModel::multiplication(car.clone()), p_gens, cfg.p.reference, opts)?;
    let qm = q_model(cfg, car)?;
    let q = if qm.is_atomic() {
        QSide::Atomic(qm)
    } else {
        let gens = cfg
            .q
            .gens
            .iter()
            .map(|t| qm.from_spectral(|xi, c| t[c].eval(xi)))
            .collect::<Result<Vec<_>>>()?;
        QSide::Iso(iso(qm, gens, cfg.q.reference, opts)?)
    };
    TransformScenario::new(p, q)
}

/// `∫ h_c(x) e^{-ixξ} dx / √(2π)` by the trapezoid rule on the carrier grid.
pub fn fourier_quadrature(h: &HilbertVector, c: usize, xi: f64) -> C64 {
    let g = h.grid();
    let q = g.trapezoid_weights();
    let mut acc = C64::new(0.0, 0.0);
    for (i, w) in q.iter().enumerate() {
        acc += h.get(i, c) * C64::from_polar(*w, -g.point(i) * xi);
    }
    acc * inv_sqrt_2pi()
}

/// `φ_c(λ(ξ)) √|dλ/dξ|` for the relabelling the config names.
pub fn change_of_variables(cfg: &ScenarioConfig, terms: &[Term], c: usize, xi: f64) -> Result<C64> {
    let label = match cfg.unitary {
        UnitaryId::DiffeoExp => Label::Exp,
        UnitaryId::Identity => Label::Identity,
        _ => return Err(Error::Inapplicable("no closed-form relabelling for this unitary".into())),
    };
    Ok(terms[c].eval(label.inverse(xi)) * label.inverse_jacobian(xi).sqrt())
}
