use std::path::Path;

use ketbridge::experiments::{
    bundled, list_scenarios, load_scenario, parse_scenario, run, write_outputs, Expect, UnitaryId,
};
use ketbridge::Error;

fn scn(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.scn"))
}

#[test]
fn bundled_files_load_from_disk() {
    let id = load_scenario(&scn("identity")).unwrap();
    assert_eq!(id.unitary, UnitaryId::Identity);
    assert_eq!(id.grid.n, 1001);
    assert_eq!(id.p.profile.max(), 2);
    let fo = load_scenario(&scn("fourier")).unwrap();
    assert_eq!(fo.unitary, UnitaryId::Dft);
    assert!(fo.sweeps.iter().any(|s| s.expect == Expect::Fourier));
    assert_eq!(list_scenarios(), vec!["identity", "fourier", "diffeo", "decomposable", "atomic"]);
    for name in list_scenarios() {
        assert_eq!(bundled(name).unwrap(), load_scenario(&scn(name)).unwrap());
    }
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_scenario(Path::new("/nonexistent/x.scn")), Err(Error::Io(_))));
}

#[test]
fn negative_grid_size_names_the_key() {
    let text = "grid.lower = 0\ngrid.upper = 1\ngrid.n = -5\np.gen.1 = one\nq.unitary = identity\nq.gen.1 = one\n";
    match parse_scenario(text) {
        Err(Error::Config { key, .. }) => assert_eq!(key, "grid.n"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_key_reports_its_line() {
    let text = "grid.lower = 0\ngrid.upper = 1\n\n# comment\ngrid.size = 10\n";
    match parse_scenario(text) {
        Err(Error::Parse { line, msg }) => {
            assert_eq!(line, 5);
            assert!(msg.contains("grid.size"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_lines_and_duplicates_are_rejected() {
    assert!(matches!(parse_scenario("grid.n 10\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_scenario("grid.n = 10\ngrid.n = 11\n"), Err(Error::Parse { line: 2, .. })));
    let gap = "grid.lower = 0\ngrid.upper = 1\ngrid.n = 11\np.gen.1 = one\np.gen.3 = one\nq.unitary = identity\nq.gen.1 = one\n";
    assert!(matches!(parse_scenario(gap), Err(Error::Config { .. })));
    let both = "grid.lower = 0\ngrid.upper = 1\ngrid.period = 1\ngrid.n = 11\np.gen.1 = one\nq.unitary = identity\nq.gen.1 = one\n";
    assert!(matches!(parse_scenario(both), Err(Error::Config { key, .. }) if key == "grid.period"));
}

#[test]
fn sweeps_need_their_schedule() {
    let base = "grid.lower = 0\ngrid.upper = 1\ngrid.n = 11\np.gen.1 = one\nq.unitary = identity\nq.gen.1 = one\n";
    let t = format!("{base}sweep.a.flavor = martingale-hilbert\nsweep.a.xi = 0.5\nsweep.a.probe = one\n");
    assert!(matches!(parse_scenario(&t), Err(Error::Config { key, .. }) if key == "sweep.a.depth"));
    let t = format!("{base}sweep.a.flavor = vitali-hilbert\nsweep.a.xi = 0.5\nsweep.a.probe = one\n");
    assert!(matches!(parse_scenario(&t), Err(Error::Config { key, .. }) if key == "sweep.a.contraction"));
    let t = format!("{base}sweep.a.flavor = vitali-hilbert\nsweep.a.xi = 0.5\nsweep.a.probe = one\nsweep.a.contraction = 0.1, 1.5, 3\n");
    assert!(matches!(parse_scenario(&t), Err(Error::Config { .. })));
}

#[test]
fn every_bundled_scenario_passes() {
    for name in list_scenarios() {
        let report = run(&bundled(name).unwrap(), None).unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }
}

#[test]
fn rows_cover_the_full_sweep() {
    for name in list_scenarios() {
        let cfg = bundled(name).unwrap();
        let m = cfg.p.profile.max();
        let report = run(&cfg, None).unwrap();
        for (spec, out) in cfg.sweeps.iter().zip(&report.sweeps) {
            if out.expected_failure {
                assert_eq!(out.row_count(), 0);
                continue;
            }
            let l_len = if spec.l.is_empty() { m } else { spec.l.len() };
            let want = spec.xi.len() * spec.k.len() * spec.levels() * l_len;
            assert_eq!(out.row_count(), want, "{name}/{}", spec.name);
            assert_eq!(out.csv.lines().count(), want + 1);
        }
    }
}

#[test]
fn atomic_refusal_is_an_expected_failure() {
    let report = run(&bundled("atomic").unwrap(), None).unwrap();
    let s = &report.sweeps[0];
    assert!(s.expected_failure && s.passed);
    assert!(report.to_text().contains("atomic"));
}

#[test]
fn unexpected_rejection_fails_the_sweep() {
    let text = bundled("atomic").unwrap().source.replace("rejection:atomic", "q");
    let report = run(&parse_scenario(&text).unwrap(), None).unwrap();
    assert!(!report.passed());
}

#[test]
fn only_filters_sweeps() {
    let cfg = bundled("identity").unwrap();
    let report = run(&cfg, Some("dyadic")).unwrap();
    assert_eq!(report.sweeps.len(), 1);
    assert_eq!(report.sweeps[0].name, "dyadic");
    assert!(matches!(run(&cfg, Some("nope")), Err(Error::Config { .. })));
}

#[test]
fn outputs_are_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&bundled("decomposable").unwrap(), None).unwrap();
    let paths = write_outputs(&report, dir.path()).unwrap();
    assert_eq!(paths.len(), report.sweeps.len() + 1);
    for p in &paths {
        assert!(p.exists());
    }
    let leftovers = std::fs::read_dir(dir.path()).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "tmp")
    });
    assert_eq!(leftovers.count(), 0);
    let csv = std::fs::read_to_string(dir.path().join("fibers.csv")).unwrap();
    assert!(csv.starts_with("flavor,xi,k,n,l,re,im,abs_err,dual_norm\n"));
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.contains("rotreflect:0.6"));
}

#[test]
fn tight_tolerance_fails_honestly() {
    let text = bundled("identity").unwrap().source.replace("sweep.vitali.tol = 1e-3", "sweep.vitali.tol = 1e-12");
    let report = run(&parse_scenario(&text).unwrap(), Some("vitali")).unwrap();
    assert!(!report.passed());
    assert!(report.to_text().contains("FAIL"));
}
