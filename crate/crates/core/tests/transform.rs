mod common;

use common::{scenario, scenario_text, simple_identity};
use ketbridge::differentiation::{make_contraction, DyadicPartitionTree};
use ketbridge::direct_integral::{Reference, StructuralIso};
use ketbridge::experiments::{bundled, parse_scenario, run};
use ketbridge::rigging::TestFunction;
use ketbridge::spectral::{probe_vectors, verify_generating_system, Carrier, GsOptions, MultiplicityProfile, SpectralModel};
use ketbridge::transform::{
    calculus_set, cross_measure_identity, decomposable_transform, fiber_projections, ket_transform_limit,
    martingale_transform, simple_spectrum_transform, strong_divergence_diagnostic, vitali_transform_limit, Argument,
    QSide, TransformScenario,
};
use ketbridge::{DensityMeasure, Error, Grid1D, IntervalSet, C64};

fn gauss(s: f64, c: f64) -> impl Fn(f64, usize) -> C64 {
    move |x, _| C64::new((-(x - c).powi(2) / (2.0 * s * s)).exp(), 0.0)
}

#[test]
fn cross_measure_on_whole_spectrum_is_inner_product() {
    let (_, sc) = scenario("fourier");
    let car = sc.p().model().carrier();
    let p = probe_vectors(car);
    let g = sc.q_model().grid();
    let cm = cross_measure_identity(&sc, &p[1], &p[4], &IntervalSet::closed(g.lower(), g.upper())).unwrap();
    let ip = car.inner(&p[1], &p[4]);
    assert!((cm.direct - ip).norm() < 1e-12);
    let (a, b) = cm.residuals();
    assert!(a < 1e-6 && b < 1e-6);
}

#[test]
fn cross_measure_vanishes_across_a_respected_split() {
    let (_, sc) = scenario("identity");
    let car = sc.p().model().carrier();
    let f = car.vector(|x, c| if c == 0 { C64::new(x, 0.0) } else { C64::default() });
    let h = car.vector(|x, c| if c == 1 { C64::new(1.0 + x, 0.0) } else { C64::default() });
    let cm = cross_measure_identity(&sc, &f, &h, &IntervalSet::closed(0.2, 0.6)).unwrap();
    assert!(cm.direct.norm() < 1e-14 && cm.via_qf.norm() < 1e-14 && cm.via_qh.norm() < 1e-14);
}

#[test]
fn zero_vector_gives_zero_trail() {
    let (_, sc) = scenario("identity");
    let cs = make_contraction(0.3, 0.1, 0.5, 5, sc.q_iso().unwrap().reference()).unwrap();
    let zero = sc.p().model().carrier().zero();
    let rec = vitali_transform_limit(&sc, 0.3, 0, &zero, &cs, &[]).unwrap();
    assert!(rec.rows.iter().all(|r| r.value.norm() == 0.0));
    let tree = DyadicPartitionTree::new(sc.q_iso().unwrap().reference().clone(), 6).unwrap();
    let m = martingale_transform(&sc, 0.3, 1, Argument::Hilbert(&zero), &tree, &[]).unwrap();
    assert!(m.rows.iter().all(|r| r.value.norm() == 0.0));
}

#[test]
fn identity_scenario_errors_decrease() {
    let (_, sc) = scenario("identity");
    let h = sc.p().model().carrier().vector(|x, c| C64::new((-(x - 0.4f64).powi(2) / 0.08).exp(), 0.5 * c as f64 * x));
    let cs = make_contraction(0.3, 0.1, 0.5, 6, sc.q_iso().unwrap().reference()).unwrap();
    for k in 0..2 {
        let rec = vitali_transform_limit(&sc, 0.3, k, &h, &cs, &[2]).unwrap();
        let errs: Vec<f64> = rec.rows.iter().map(|r| r.abs_err).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-14), "{errs:?}");
        assert!(rec.final_error() < 1e-3);
        assert_eq!(rec.reference_name, "q-forward");
    }
}

#[test]
fn generator_argument_tends_to_unit_ratio() {
    let (_, sc) = scenario("identity");
    let cs = make_contraction(0.7, 0.1, 0.5, 5, sc.q_iso().unwrap().reference()).unwrap();
    for k in 0..2 {
        let g = sc.q_generator(k).unwrap().clone();
        let rec = vitali_transform_limit(&sc, 0.7, k, &g, &cs, &[]).unwrap();
        assert!((rec.reference - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(rec.final_error() < 1e-10);
    }
}

#[test]
fn atomic_q_is_refused() {
    let (_, sc) = scenario("atomic");
    assert!(matches!(sc.q_iso(), Err(Error::AtomicSpectrum(_))));
    let g = Grid1D::new(0.0, 1.0, 201).unwrap();
    let mu = DensityMeasure::lebesgue(g);
    let cs = make_contraction(0.5, 0.1, 0.5, 3, &mu).unwrap();
    let h = sc.p().model().carrier().vector(gauss(0.2, 0.5));
    assert!(matches!(vitali_transform_limit(&sc, 0.5, 0, &h, &cs, &[]), Err(Error::AtomicSpectrum(_))));
}

#[test]
fn ket_limit_matches_ket_oracle() {
    let (_, sc) = scenario("identity");
    let car = sc.p().model().carrier();
    let phi = TestFunction::verify(sc.p(), car.vector(|x, c| C64::new((-(x - 0.5f64).powi(2) / 0.1).exp(), 0.3 * c as f64))).unwrap();
    let cs = make_contraction(0.7, 0.1, 0.5, 6, sc.q_iso().unwrap().reference()).unwrap();
    for k in 0..2 {
        let rec = ket_transform_limit(&sc, 0.7, k, &phi, &cs, &[]).unwrap();
        assert_eq!(rec.reference_name, "q-ket");
        assert!(rec.final_error() < 1e-3);
        assert!(rec.form_gap < 1e-8);
    }
}

#[test]
fn ket_supported_elsewhere_has_zero_limit() {
    let (_, sc) = scenario("identity");
    let car = sc.p().model().carrier();
    let phi = TestFunction::verify(sc.p(), car.vector(|x, _| if x >= 0.7 { C64::new(x - 0.7, 0.0) } else { C64::default() })).unwrap();
    let cs = make_contraction(0.3, 0.1, 0.5, 5, sc.q_iso().unwrap().reference()).unwrap();
    let rec = ket_transform_limit(&sc, 0.3, 0, &phi, &cs, &[]).unwrap();
    assert!(rec.final_value().norm() < 1e-15);
}

#[test]
fn fourier_ket_and_hilbert_hit_quadrature_oracle() {
    let report = run(&bundled("fourier").unwrap(), None).unwrap();
    for s in report.sweeps.iter().filter(|s| s.name != "simple") {
        for r in &s.records {
            assert_eq!(r.reference_name, "fourier-quadrature");
            assert!(r.final_relative_error() < 1e-2);
        }
    }
}

#[test]
fn simple_flavor_with_equal_measures_uses_the_set_itself() {
    let (_, sc) = scenario_text(&simple_identity(501));
    let set = IntervalSet::closed(0.3, 0.55);
    let e = calculus_set(&sc, &set).unwrap();
    assert_eq!(e, sc.p().model().grid().mask(&set));
}

#[test]
fn simple_flavor_on_diffeo_pulls_sets_back() {
    let (_, sc) = scenario("diffeo");
    let set = IntervalSet::closed(1.5, 2.2);
    let e = calculus_set(&sc, &set).unwrap();
    let g = sc.p().model().grid();
    for (i, inside) in e.iter().enumerate() {
        let x = g.point(i);
        let far = (x - 1.5f64.ln()).abs() > 2.0 * g.spacing() && (x - 2.2f64.ln()).abs() > 2.0 * g.spacing();
        if far {
            assert_eq!(*inside, (1.5f64.ln()..=2.2f64.ln()).contains(&x), "x = {x}");
        }
    }
}

#[test]
fn simple_flavor_rejections() {
    let (_, fo) = scenario("fourier");
    let cs = make_contraction(1.0, 3.2, 0.5, 3, fo.q_iso().unwrap().reference()).unwrap();
    let h = fo.p().model().carrier().vector(gauss(0.25, 0.0));
    assert!(matches!(simple_spectrum_transform(&fo, 1.0, 0, Argument::Hilbert(&h), &cs), Err(Error::Inapplicable(_))));
    let (_, id) = scenario("identity");
    let cs = make_contraction(0.3, 0.1, 0.5, 3, id.q_iso().unwrap().reference()).unwrap();
    let h = id.p().model().carrier().vector(gauss(0.25, 0.3));
    assert!(matches!(simple_spectrum_transform(&id, 0.3, 0, Argument::Hilbert(&h), &cs), Err(Error::Inapplicable(_))));
    assert!(matches!(strong_divergence_diagnostic(&id, 0.3, 0, &cs.sets), Err(Error::Inapplicable(_))));
}

#[test]
fn fibers_of_equal_models_are_scalar_indicators() {
    let (_, sc) = scenario("identity");
    let set = IntervalSet::closed(0.25, 0.5);
    let op = fiber_projections(&sc, &set).unwrap();
    let g = sc.p().model().grid();
    for i in (0..g.len()).step_by(37) {
        let m = op.matrix(i);
        let want = if set.contains(g.point(i), g.slack()) { 1.0 } else { 0.0 };
        assert!((m[(0, 0)].re - want).abs() < 1e-10 && (m[(1, 1)].re - want).abs() < 1e-10);
        assert!(m[(0, 1)].norm() < 1e-10 && m[(1, 0)].norm() < 1e-10);
    }
}

#[test]
fn rotated_fibers_are_genuine_projectors() {
    let (_, sc) = scenario("decomposable");
    let op = fiber_projections(&sc, &IntervalSet::closed(0.2, 0.45)).unwrap();
    assert!(op.projection_defect() < 1e-8);
    let g = sc.p().model().grid();
    // x = 0.3: the first relabelled channel is in the set, the reflected one (0.7) is not.
    let m = op.matrix(g.nearest_index(0.3));
    assert!(m[(0, 1)].norm() > 0.1);
    assert!(((m[(0, 0)] + m[(1, 1)]).re - 1.0).abs() < 1e-10);
    let cs = make_contraction(0.4, 0.1, 0.5, 5, sc.q_iso().unwrap().reference()).unwrap();
    let h = sc.p().model().carrier().vector(gauss(0.2, 0.4));
    for k in 0..2 {
        let rec = decomposable_transform(&sc, 0.4, k, &h, &cs, &[]).unwrap();
        assert!(rec.form_gap < 1e-8);
        assert!(rec.final_error() < 1e-3);
    }
}

#[test]
fn decomposable_needs_commuting_measures() {
    let (_, sc) = scenario("fourier");
    let cs = make_contraction(1.0, 3.2, 0.5, 3, sc.q_iso().unwrap().reference()).unwrap();
    let h = sc.p().model().carrier().vector(gauss(0.25, 0.0));
    assert!(matches!(decomposable_transform(&sc, 1.0, 0, &h, &cs, &[]), Err(Error::Inapplicable(_))));
}

#[test]
fn fourier_martingale_at_depth_twelve() {
    let text = "grid.lower = -31.41592653589793\ngrid.period = 62.83185307179586\ngrid.n = 8192\n\
                p.gen.1 = one\nq.unitary = dft\nq.gen.1 = gauss:200\nq.reference = lebesgue\n\
                sweep.deep.flavor = martingale-ket\nsweep.deep.xi = 1.0\nsweep.deep.probe = gauss:0.25:0.2\n\
                sweep.deep.depth = 12\nsweep.deep.expect = fourier\nsweep.deep.metric = rel\nsweep.deep.tol = 2e-2\n";
    let report = run(&parse_scenario(text).unwrap(), None).unwrap();
    let s = &report.sweeps[0];
    assert!(s.passed, "{}", report.to_text());
    assert_eq!(s.row_count(), 12);
    assert!(s.worst_error < 2e-2);
}

#[test]
fn representer_norms_are_inverse_root_masses() {
    let (_, sc) = scenario_text(&simple_identity(4097));
    let cs = make_contraction(0.5, 0.25, 0.5, 8, sc.q_iso().unwrap().reference()).unwrap();
    let t = strong_divergence_diagnostic(&sc, 0.5, 0, &cs.sets).unwrap();
    for (m, n) in t.masses.iter().zip(&t.norms) {
        assert!((n * m.sqrt() - 1.0).abs() < 1e-10);
    }
    assert!(t.growth() > 10.0);
    let fixed = vec![cs.sets[0].clone(); 6];
    let flat = strong_divergence_diagnostic(&sc, 0.5, 0, &fixed).unwrap();
    assert!((flat.growth() - 1.0).abs() < 1e-12);
}

#[test]
fn channels_outside_the_support_add_nothing() {
    let g = Grid1D::new(0.0, 1.0, 801).unwrap();
    let profile = MultiplicityProfile::parse("2@0:0.5, 1@0.5:1").unwrap();
    let car = Carrier::new(DensityMeasure::lebesgue(g), &profile).unwrap();
    let one = C64::new(1.0, 0.0);
    let g1 = car.vector(|_, c| if c == 0 { one } else { C64::default() });
    let g2 = car.vector(|x, c| if c == 1 && x <= 0.5 { one } else { C64::default() });
    let iso = |m: SpectralModel| {
        let gs = verify_generating_system(&m, vec![g1.clone(), g2.clone()], GsOptions::default()).unwrap().into_result().unwrap();
        StructuralIso::new(m, gs, Reference::FirstGenerator).unwrap()
    };
    let sc = TransformScenario::new(
        iso(SpectralModel::multiplication(car.clone())),
        QSide::Iso(iso(SpectralModel::multiplication(car.clone()))),
    )
    .unwrap();
    let h = car.vector(|x, c| C64::new(1.0 + x, c as f64));
    let cs = make_contraction(0.8, 0.1, 0.5, 4, sc.q_iso().unwrap().reference()).unwrap();
    let rec = vitali_transform_limit(&sc, 0.8, 0, &h, &cs, &[1, 2]).unwrap();
    for pair in rec.rows.chunks(2) {
        assert!((pair[1].value - pair[0].value).norm() < 1e-10);
    }
}

#[test]
fn csv_rows_follow_the_fixed_columns() {
    let (_, sc) = scenario("identity");
    let cs = make_contraction(0.3, 0.1, 0.5, 3, sc.q_iso().unwrap().reference()).unwrap();
    let h = sc.p().model().carrier().vector(gauss(0.2, 0.3));
    let csv = vitali_transform_limit(&sc, 0.3, 1, &h, &cs, &[]).unwrap().to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("flavor,xi,k,n,l,re,im,abs_err,dual_norm"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 2);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[0], "vitali-hilbert");
    assert_eq!(first[2], "2");
    assert_eq!((first[3], first[4]), ("1", "1"));
}
