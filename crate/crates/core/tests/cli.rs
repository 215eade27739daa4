use std::process::Command;

use pcclone::cli::read_curve_csv;
use pcclone::counts::read_records_csv;
use pcclone::tomography::read_choi_csv;

fn pcclone() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pcclone"));
    c.env_remove("PCCLONE_OUT");
    c
}

#[test]
fn sweep_writes_parseable_csv_under_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcclone()
        .env("PCCLONE_OUT", dir.path())
        .args(["sweep-theta", "--grid", "6", "--periods", "2", "--splitter", "ideal", "--visibility", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = read_curve_csv(std::fs::File::open(dir.path().join("sweep_theta_curve.csv")).unwrap()).unwrap();
    assert_eq!(curve.len(), 6);
    // θ = 0 on the ideal splitter: |V⟩ is copied perfectly.
    assert!((curve[0].f1_analytic - 1.0).abs() < 1e-12);
    let records = read_records_csv(std::fs::File::open(dir.path().join("sweep_theta_records.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 6);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[noise]\nvisibility = 2.0\n").unwrap();
    let out = pcclone().arg("--config").arg(&cfg).arg("symmetrize").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("visibility"));

    let out = pcclone().args(["sweep-phi", "--grid", "zero"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = pcclone().args(["sweep-phi", "--visibility", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_needs_prior_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcclone().arg("report").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep-phi"));
}

#[test]
fn tomography_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = pcclone().args(args).arg("--out").arg(dir.path()).args(["--grid", "8", "--periods", "2"]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    run(&["sweep-phi"]);
    let tomo = run(&["tomography"]);
    assert!(tomo.contains("map fidelity") && tomo.contains("HVH"));
    let m = read_choi_csv(std::fs::File::open(dir.path().join("choi_nofilter.csv")).unwrap()).unwrap();
    assert_eq!(m.nrows(), 8);
    let report = run(&["report"]);
    for key in ["F_pc", "R_V", "Q, configured", "map fidelity, filter", "mean P_succ"] {
        assert!(report.contains(key), "{key} missing from\n{report}");
    }
    let sym = run(&["symmetrize"]);
    assert!(sym.contains("0.833740"));
}
