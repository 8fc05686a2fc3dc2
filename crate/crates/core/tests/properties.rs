mod common;

use std::sync::OnceLock;

use ketbridge::differentiation::{martingale_estimate, DyadicPartitionTree};
use ketbridge::direct_integral::{field_inner, field_norm, parseval_check};
use ketbridge::experiments::{bundled, build_scenario, parse_scenario};
use ketbridge::spectral::{probe_vectors, HilbertVector};
use ketbridge::transform::{ApproxFunctional, TransformScenario};
use ketbridge::{DensityMeasure, Grid1D, IntervalSet, C64};
use proptest::prelude::*;

fn identity() -> &'static TransformScenario {
    static SC: OnceLock<TransformScenario> = OnceLock::new();
    SC.get_or_init(|| build_scenario(&bundled("identity").unwrap()).unwrap())
}

fn fourier() -> &'static TransformScenario {
    static SC: OnceLock<TransformScenario> = OnceLock::new();
    SC.get_or_init(|| build_scenario(&bundled("fourier").unwrap()).unwrap())
}

fn pick(which: bool) -> &'static TransformScenario {
    if which {
        fourier()
    } else {
        identity()
    }
}

fn combo(sc: &TransformScenario, coefs: &[(f64, f64)]) -> HilbertVector {
    let car = sc.p().model().carrier();
    let mut v = car.zero();
    for (p, (a, b)) in probe_vectors(car).iter().zip(coefs) {
        v.axpy(C64::new(*a, *b), p);
    }
    v
}

/// An interval inside the Q-side spectral grid, from two fractions.
fn spectral_set(sc: &TransformScenario, s: f64, t: f64) -> IntervalSet {
    let g = sc.q_model().grid();
    let at = |u: f64| g.lower() + u * (g.upper() - g.lower());
    IntervalSet::closed(at(s.min(t)), at(s.max(t)))
}

fn coefs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measure_is_additive(a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64, w in 0.1..3.0f64) {
        let g = Grid1D::new(0.0, 1.0, 257).unwrap();
        let mu = DensityMeasure::from_fn(g, |x| 1.0 + w * (3.0 * x).sin().powi(2)).unwrap();
        let mut p = [a, b, c];
        p.sort_by(f64::total_cmp);
        let whole = mu.integrate(&IntervalSet::closed(p[0], p[2])).unwrap();
        let left = mu.integrate(&IntervalSet::half_open(p[0], p[1])).unwrap();
        let right = mu.integrate(&IntervalSet::closed(p[1], p[2])).unwrap();
        prop_assert!((whole - left - right).abs() < 1e-12);
    }

    #[test]
    fn projections_multiply_by_intersection(which: bool, s in (0.0..1.0f64, 0.0..1.0f64), t in (0.0..1.0f64, 0.0..1.0f64), c in coefs()) {
        let sc = pick(which);
        let q = sc.q_model();
        let (e, f) = (spectral_set(sc, s.0, s.1), spectral_set(sc, t.0, t.1));
        let h = combo(sc, &c);
        let ef = q.apply_projection(&e, &q.apply_projection(&f, &h).unwrap()).unwrap();
        let both = q.apply_projection(&e.intersect(&f), &h).unwrap();
        prop_assert!(q.carrier().norm(&ef.sub(&both)) < 1e-10);
        let again = q.apply_projection(&e, &q.apply_projection(&e, &h).unwrap()).unwrap();
        let once = q.apply_projection(&e, &h).unwrap();
        prop_assert!(q.carrier().norm(&again.sub(&once)) < 1e-10);
    }

    #[test]
    fn correlation_is_conjugate_symmetric(which: bool, s in (0.0..1.0f64, 0.0..1.0f64), c1 in coefs(), c2 in coefs()) {
        let sc = pick(which);
        let q = sc.q_model();
        let set = spectral_set(sc, s.0, s.1);
        let (f, g) = (combo(sc, &c1), combo(sc, &c2));
        let fg = q.spectral_mass(&f, &set, &g).unwrap();
        let gf = q.spectral_mass(&g, &set, &f).unwrap();
        prop_assert!((fg - gf.conj()).norm() < 1e-12);
        let ff = q.spectral_mass(&f, &set, &f).unwrap();
        prop_assert!(ff.re >= -1e-14 && ff.im.abs() < 1e-12);
    }

    #[test]
    fn forward_is_isometric_and_invertible(which: bool, c1 in coefs(), c2 in coefs()) {
        let sc = pick(which);
        for iso in [sc.p(), sc.q_iso().unwrap()] {
            let car = iso.model().carrier();
            let (f, h) = (combo(sc, &c1), combo(sc, &c2));
            let (vf, vh) = (iso.forward(&f).unwrap(), iso.forward(&h).unwrap());
            let scale = car.norm(&f) * car.norm(&h) + 1e-300;
            prop_assert!((field_inner(&vf, &vh).unwrap() - car.inner(&f, &h)).norm() / scale < 1e-6);
            let back = iso.inverse(&vh).unwrap();
            prop_assert!(car.norm(&back.sub(&h)) <= 1e-6 * (car.norm(&h) + 1e-300));
        }
    }

    #[test]
    fn parseval_holds_on_random_sets(which: bool, s in (0.0..1.0f64, 0.0..1.0f64), c1 in coefs(), c2 in coefs()) {
        let sc = pick(which);
        let iso = sc.q_iso().unwrap();
        let set = spectral_set(sc, s.0, s.1);
        let (f, h) = (combo(sc, &c1), combo(sc, &c2));
        prop_assert!(parseval_check(iso, &f, &h, &set).unwrap() < 1e-6);
    }

    #[test]
    fn truncation_norms_grow_with_l(which: bool, c in coefs()) {
        let sc = pick(which);
        let vh = sc.p().forward(&combo(sc, &c)).unwrap();
        let m = sc.p().multiplicity();
        let norms: Vec<f64> = (1..=m).map(|l| field_norm(&vh.truncated(l))).collect();
        prop_assert!(norms.windows(2).all(|w| w[1] + 1e-14 >= w[0]));
        prop_assert!((norms[m - 1] - field_norm(&vh)).abs() < 1e-12);
    }

    #[test]
    fn gamma_is_linear_and_bounded(k in 0usize..2, xi in 0.15..0.85f64, r in 0.02..0.1f64, c1 in coefs(), c2 in coefs(), a in (-2.0..2.0f64, -2.0..2.0f64), b in (-2.0..2.0f64, -2.0..2.0f64)) {
        let sc = identity();
        let af = ApproxFunctional::new(sc, xi, k, IntervalSet::closed(xi - r, xi + r)).unwrap();
        let (h1, h2) = (combo(sc, &c1), combo(sc, &c2));
        let (a, b) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
        let mut mix = h1.scale(a);
        mix.axpy(b, &h2);
        let v = |h: &HilbertVector| af.gamma_tilde(&sc.p().forward(h).unwrap());
        let (g1, g2, gm) = (v(&h1), v(&h2), v(&mix));
        let car = sc.p().model().carrier();
        for l in 0..g1.len() {
            let want = a * g1[l] + b * g2[l];
            prop_assert!((gm[l] - want).norm() <= 1e-12 * (1.0 + want.norm()));
        }
        let norms = af.dual_norms();
        for (g, n) in g1.iter().zip(&norms) {
            prop_assert!(g.norm() <= n * car.norm(&h1) * (1.0 + 1e-10) + 1e-14);
        }
    }

    #[test]
    fn martingale_obeys_the_tower_rule(x in 0.0..0.999f64, w in 0.0..2.0f64) {
        let g = Grid1D::new(0.0, 1.0, 1025).unwrap();
        let mu = DensityMeasure::from_fn(g, |t| 1.0 + 0.5 * t).unwrap();
        let nu = DensityMeasure::from_fn(g, |t| 1.0 + w * (5.0 * t).cos().powi(2)).unwrap();
        let tree = DyadicPartitionTree::new(mu.clone(), 8).unwrap();
        let est = martingale_estimate(&nu, &tree, x).unwrap();
        for level in 1..tree.depth() {
            let parent = IntervalSet::from(est.cells[level - 1]);
            let children: Vec<_> = tree.cells(level + 1).into_iter().filter(|c| {
                let c = IntervalSet::from(*c);
                !c.intersect(&parent).is_empty() && c.intersect(&parent).total_length() > 0.0
            }).collect();
            prop_assert_eq!(children.len(), 2);
            let mut avg = 0.0;
            for c in children {
                let c = IntervalSet::from(c);
                avg += nu.integrate(&c).unwrap();
            }
            let want = avg / mu.integrate(&parent).unwrap();
            prop_assert!((est.values[level - 1] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_size_must_be_at_least_two(n in -1000i64..1000) {
        let text = format!("grid.lower = 0\ngrid.upper = 1\ngrid.n = {n}\np.gen.1 = one\nq.unitary = identity\nq.gen.1 = one\n");
        prop_assert_eq!(parse_scenario(&text).is_ok(), n >= 2);
    }
}
