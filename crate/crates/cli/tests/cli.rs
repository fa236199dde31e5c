use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fbnet() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fbnet"));
    c.env_remove("FBNET_WORKERS").env_remove("RUST_LOG");
    c
}

fn fig3() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/paper_fig3.slh")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_sweep(out: &Path, workers: &str) -> Output {
    fbnet()
        .args(["--out", out.to_str().unwrap(), "--workers", workers, "g2"])
        .arg(fig3())
        .args(["--from", "0.5", "--to", "2.5", "--points", "5"])
        .args(["--trunc", "a=3", "--trunc", "c=4", "--trunc", "b=5"])
        .output()
        .unwrap()
}

#[test]
fn compose_prints_triple_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("t.json");
    let o = fbnet().arg("compose").arg(fig3()).arg("--json").arg(&json).output().unwrap();
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    assert!(s.contains("modes: a (optical), c (optical), b (mechanical)"), "{s}");
    assert!(s.contains("check hermiticity") && s.contains("(ok)"), "{s}");
    assert!(!s.contains("FAILED"), "{s}");
    let t = fbnet_core::io::triple_from_json(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(t.channels(), 1);
}

#[test]
fn malformed_document_is_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.slh");
    std::fs::write(&bad, "slh 1\nmode a optical 4\nsystem P {\n    S = identity\n    L = A(\n}\n").unwrap();
    let o = fbnet().arg("compose").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("6:1: expected a mode label"), "{err}");
}

#[test]
fn threshold_query() {
    let o = fbnet().args(["meanfield", "--threshold", "0.5"]).output().unwrap();
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("y_threshold = 0.866025403784"), "{s}");
    assert!(s.contains("z_threshold = 0.0962250448649"), "{s}");
}

#[test]
fn zero_kerr_gives_coherent_light() {
    let dir = tempfile::tempdir().unwrap();
    let o = fbnet()
        .args(["--out", dir.path().to_str().unwrap(), "analytic", "--chi", "0", "--points", "7"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("analytic.csv")).unwrap();
    let formula: Vec<&str> = csv.lines().filter(|l| l.ends_with("analytic_formula")).collect();
    assert_eq!(formula.len(), 7);
    for l in formula {
        assert_eq!(l.split(',').nth(1), Some("1"), "{l}");
    }
}

#[test]
fn bad_usage_is_exit_2() {
    for args in [
        &["reproduce", "fig8"][..],
        &["meanfield", "--sweep", "w", "--x", "0.5", "--y", "1"],
        &["analytic", "--set", "fig6"],
        &["g2", "--points", "0"],
        &["check", "--criteria", "12"],
    ] {
        let o = fbnet().args(args).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = fbnet().env("FBNET_WORKERS", "0").args(["meanfield", "--threshold", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let (d1, d4) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (d, w) in [(&d1, "1"), (&d4, "4")] {
        let o = small_sweep(d.path(), w);
        assert!(o.status.success(), "{o:?}");
    }
    let a = std::fs::read(d1.path().join("g2.csv")).unwrap();
    let b = std::fs::read(d4.path().join("g2.csv")).unwrap();
    assert_eq!(a, b);
    let header = String::from_utf8(a).unwrap();
    assert!(header.starts_with("delta_over_chi,g2_a,g2_c,n_a,n_c,n_b\n"), "{header}");
    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(d1.path().join("g2.json")).unwrap()).unwrap();
    assert!(side["provenance"]["command"].as_str().unwrap().starts_with("fbnet "));
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let cfg = dir.path().join("fbnet.toml");
    std::fs::write(&cfg, format!("out = {:?}\n[meanfield]\nsweep = \"z\"\nx = 0.5\ny = 1.2\npoints = 21\n", out)).unwrap();
    let o = fbnet().env("FBNET_WORKERS", "2").arg("--config").arg(&cfg).arg("meanfield").output().unwrap();
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(out.join("meanfield.csv")).unwrap();
    assert!(csv.starts_with("sweep_value,root_index,lambda,n,n_A,stable\n"));
    // A flag overrides the file.
    let o = fbnet().arg("--config").arg(&cfg).args(["meanfield", "--points", "3"]).output().unwrap();
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("meanfield.csv")).unwrap();
    let values: std::collections::BTreeSet<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(values.len(), 3);

    std::fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    let o = fbnet().arg("--config").arg(&cfg).args(["meanfield", "--threshold", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_bistability_panel() {
    let dir = tempfile::tempdir().unwrap();
    let o = fbnet().args(["--out", dir.path().to_str().unwrap(), "reproduce", "fig4a"]).output().unwrap();
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("PASS fig4a"));
    for f in ["fig4a.json", "fig4a_y0.8.csv", "fig4a_y1.2.csv", "fig4a_y1.7.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn fast_acceptance_criteria() {
    let o = fbnet().args(["check", "--criteria", "1,2,3"]).output().unwrap();
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{s}");
}

/// `(kind, value, location)` of every g2_a extremum printed by `g2`.
fn g2_a_extrema(s: &str) -> Vec<(String, f64, f64)> {
    s.lines()
        .filter_map(|l| {
            let w: Vec<&str> = l.split_whitespace().collect();
            (w.len() == 8 && w[1] == "g2_a").then(|| (w[0].to_string(), w[3].parse().unwrap(), w[7].parse().unwrap()))
        })
        .collect()
}

#[test]
fn drive_flag_flips_bad_cavity_extremum_near_two() {
    let dir = tempfile::tempdir().unwrap();
    let run = |drive: &str| {
        let o = fbnet()
            .args(["--out", dir.path().to_str().unwrap(), "g2", "--set", "fig7", "--drive", drive])
            .args(["--from", "1.8", "--to", "2.2", "--points", "17", "--dims", "4,4,8"])
            .output()
            .unwrap();
        assert!(o.status.success(), "{o:?}");
        g2_a_extrema(&stdout(&o))
    };
    let near_two = |x: f64| (x - 2.0).abs() <= 0.1 + 1e-9;
    let a = run("a");
    assert!(a.iter().any(|(k, v, x)| k == "max" && *v > 1.0 && near_two(*x)), "{a:?}");
    let c = run("c");
    assert!(c.iter().any(|(k, v, x)| k == "min" && *v < 1.0 && near_two(*x)), "{c:?}");
}
