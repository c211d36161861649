use std::path::Path;
use std::process::{Command, Output};

fn terasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_terasim")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, format!("{body}\n[run]\nout_dir = \"{}\"\n", dir.join("out").display())).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = "[grid]\nsubcarriers = 8\n[tx]\nae_rows = 2\nae_cols = 2\n[rx]\nae_rows = 2\nae_cols = 2\ncenter_m = [2, 0, 0]";

#[test]
fn absorb_defaults_write_901_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = terasim(&["absorb", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/absorption.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "frequency_hz,k_exact_per_m,k_approx1_per_m,k_approx2_per_m,approx1_in_band,approx2_in_band"
    );
    assert_eq!(lines.count(), 901);
    assert!(!text.contains('\r'));
    assert!(String::from_utf8_lossy(&o.stdout).contains("wrote "));
}

#[test]
fn invalid_config_exits_1_and_lists_all_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nsubcarriers = 0\nbogus = 3\n[medium]\nrelative_humidity = 150");
    let o = terasim(&["channel", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid.bogus"), "{err}");
    assert!(err.contains("subcarriers"), "{err}");
    assert!(err.contains("relative_humidity"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn zero_threads_is_a_usage_error() {
    let o = terasim(&["absorb", "--threads", "0", "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stats_on_a_non_tensor_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let bad = dir.path().join("bad.tsim");
    std::fs::write(&bad, b"not a tensor").unwrap();
    let o = terasim(&["stats", bad.to_str().unwrap(), "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_config_file_is_a_runtime_error() {
    let o = terasim(&["channel", "--config", "/nonexistent/terasim.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_run_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    // A directory where the statistics table should go makes the last write fail.
    let out = dir.path().join("out");
    std::fs::create_dir_all(out.join("channel_stats.csv")).unwrap();
    let o = terasim(&["channel", "--config", &cfg, "--quiet"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let left: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .flatten()
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(left, vec!["channel_stats.csv".to_string()]);
}

#[test]
fn channel_then_stats_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = terasim(&["channel", "--config", &cfg, "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("tau_rms_s = "));
    let out = dir.path().join("out");
    let prov = std::fs::read_to_string(out.join("channel.provenance.toml")).unwrap();
    assert!(prov.contains("seed = 5"), "{prov}");
    assert!(prov.contains("channel_freq_r000.tsim"));
    assert!(prov.contains("subcarriers = 8"));

    let tensor = out.join("channel_freq_r000.tsim");
    let o = terasim(&["stats", tensor.to_str().unwrap(), "--config", &cfg, "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("stats_report.txt").exists());
    assert!(out.join("stats.provenance.toml").exists());
}

#[test]
fn capacity_and_tv_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SMALL}\n[options.doppler]\nvelocity_mps = 2\n[capacity]\nscenario = \"both\""),
    );
    for cmd in ["capacity", "tv"] {
        let o = terasim(&[cmd, "--config", &cfg, "--quiet"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let rep = std::fs::read_to_string(dir.path().join("out/capacity_report.txt")).unwrap();
    assert!(rep.contains("capacity_bound_bps"));
    assert!(dir.path().join("out/tv_acf.csv").exists());
}
