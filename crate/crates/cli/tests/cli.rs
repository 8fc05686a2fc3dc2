use std::path::Path;
use std::process::{Command, Output};

fn ketbridge(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ketbridge")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_bundled_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let o = ketbridge(&["run", "--list-scenarios"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["identity", "fourier", "diffeo", "decomposable", "atomic"]);
}

#[test]
fn runs_a_bundled_scenario_into_the_default_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = ketbridge(&["run", "decomposable"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out/decomposable");
    for f in ["fibers.csv", "vitali.csv", "report.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(stdout(&o).contains("overall pass"));
}

#[test]
fn only_runs_one_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = ketbridge(&["run", "identity", "--only", "dyadic", "--out", "x"], dir.path());
    assert!(o.status.success());
    let names: Vec<String> = std::fs::read_dir(dir.path().join("x"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 2);
    assert!(names.contains(&"dyadic.csv".to_string()));
    assert!(!ketbridge(&["run", "identity", "--only", "nope"], dir.path()).status.success());
}

#[test]
fn hard_fail_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = "out.name = strict\ngrid.lower = 0\ngrid.upper = 1\ngrid.n = 101\np.gen.1 = one\nq.unitary = identity\n\
                q.gen.1 = one\nsweep.a.flavor = vitali-hilbert\nsweep.a.xi = 0.5\nsweep.a.probe = gauss:0.1:0.3\n\
                sweep.a.contraction = 0.3, 0.5, 2\nsweep.a.tol = 1e-14\n";
    std::fs::write(dir.path().join("strict.scn"), text).unwrap();
    let soft = ketbridge(&["run", "strict.scn"], dir.path());
    assert!(soft.status.success());
    assert!(stdout(&soft).contains("FAIL"));
    let hard = ketbridge(&["run", "strict.scn", "--hard-fail"], dir.path());
    assert!(!hard.status.success());
    assert!(dir.path().join("out/strict/a.csv").exists());
}

#[test]
fn bad_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!ketbridge(&["run", "no-such-scenario"], dir.path()).status.success());
    std::fs::write(dir.path().join("bad.scn"), "grid.lower = 0\ngrid.bogus = 1\n").unwrap();
    let o = ketbridge(&["run", "bad.scn"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn csv_outputs_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert!(ketbridge(&["run", "identity", "--out", out], dir.path()).status.success());
    }
    for f in ["vitali.csv", "ket.csv", "dyadic.csv", "fibers.csv", "simple.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}
