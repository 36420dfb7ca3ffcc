//! Black-box checks of the binary: exit codes and manifest behavior.

use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_isoland")
}

#[test]
fn bad_dt_exits_1_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(&cfg, "dt = -1\n").unwrap();
    let out = Command::new(bin())
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dt"), "stderr: {stderr}");
}

#[test]
fn moser_without_trajectory_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin())
        .arg("moser")
        .arg("--out")
        .arg(dir.path().join("empty"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trajectory"), "stderr: {stderr}");
}

#[test]
fn gamma_star_rejects_low_dimension() {
    let out = Command::new(bin())
        .args(["gamma-star", "-d", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let ok = Command::new(bin())
        .args(["gamma-star", "-d", "3"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("gamma_star"), "stdout: {stdout}");
}

#[test]
fn gamma_below_star_runs_with_manifest_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    std::fs::write(
        &cfg,
        "gamma = -2.6\nn_cells = 64\nr_max = 8.0\ndt = 1e-3\nt_end = 0.005\n\
         monitor_every = 1\nsnapshot_count = 2\np_list = \n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(bin())
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("gamma_star"), "{manifest}");
    assert!(manifest.contains("not guaranteed"), "{manifest}");
}
