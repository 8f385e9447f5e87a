use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_jrcsim");

const SMALL_OFDMA: &str = r#"
version = 1
waveform = "ofdma"
trials = 6
seed = 9

[ofdma]
subcarriers = 32
symbols = 8
n_rx = 2

[scene]
targets = [{ range_m = 0.5, velocity_mps = 10.0, angle_deg = 15.0 }]

[sweep]
snr_db = [10, 20]
mux_percent = [50]
"#;

fn jrcsim(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("JRCSIM_OUT_DIR")
        .output()
        .expect("spawn jrcsim")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL_OFDMA);
    let out = dir.path().join("out");
    let o = jrcsim(&["run", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "rmse_vs_snr.csv",
        "ber_vs_snr.csv",
        "estimates.csv",
        "objective.csv",
        "af_surface.csv",
        "af_surface.jrct",
        "af_delay_cut.csv",
        "af_doppler_cut.csv",
        "report.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let (header, rows) = read_csv(&out.join("rmse_vs_snr.csv"));
    assert_eq!(header[0], "mux_percent");
    assert_eq!(rows.len(), 2);
    let (_, est) = read_csv(&out.join("estimates.csv"));
    assert_eq!(est.len(), 2 * 6);

    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["points"].as_array().unwrap().len(), 2);
}

#[test]
fn env_var_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL_OFDMA);
    let out = dir.path().join("from-env");
    let o = Command::new(BIN)
        .args(["af", &cfg])
        .env("JRCSIM_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("af_delay_cut.csv").is_file());
}

#[test]
fn af_peaks_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL_OFDMA);
    let o = jrcsim(&["af", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let (_, rows) = read_csv(&dir.path().join("af_surface.csv"));
    let parsed: Vec<[f64; 3]> = rows
        .iter()
        .map(|r| [r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap()])
        .collect();
    let peak = parsed.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert_eq!(peak[0], 0.0);
    assert_eq!(peak[1], 0.0);
    assert!((peak[2] - 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL_OFDMA);
    let run = |sub: &str, workers: &str| {
        let out = dir.path().join(sub);
        let o = jrcsim(&["run", &cfg, "--workers", workers, "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(out.join("estimates.csv")).unwrap()
    };
    assert_eq!(run("a", "1"), run("b", "3"));
}

#[test]
fn seed_flag_changes_draws() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &SMALL_OFDMA.replace("targets = [", "jitter = true\ntargets = ["));
    let run = |seed: &str| {
        let out = dir.path().join(seed);
        let o = jrcsim(&["run", &cfg, "--seed", seed, "--trials", "2", "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(out.join("estimates.csv")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn validate_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL_OFDMA);
    let o = jrcsim(&["validate", &cfg]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[estimator]"));
    assert!(text.contains("subcarriers = 32"));
}

#[test]
fn invalid_mux_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL_OFDMA.replace("mux_percent = [50]", "mux_percent = [150]"));
    let o = jrcsim(&["validate", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("mux"));
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL_OFDMA.replace("seed = 9", "seed = 9\nsed = 3"));
    assert!(!jrcsim(&["validate", &cfg]).status.success());
}

#[test]
fn alloc_two_channel_file() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(
        dir.path(),
        "p.csv",
        "# budget = 4\n# method = waterfill\nk,g_k,h_k,n_k,t_k\n0,1,1,1,0\n1,1,1,3,0\n",
    );
    let o = jrcsim(&["alloc", &problem, "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("allocation.csv"));
    assert_eq!(header, ["k", "g_k", "h_k", "n_k", "t_k_bits", "P_k_w"]);
    let p: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!((p[0] - 3.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
}

#[test]
fn alloc_reports_infeasible_floors() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.csv", "# budget = 0.5\nk,g_k,h_k,n_k,t_k\n0,1,1,1,2\n1,1,1,1,2\n");
    let o = jrcsim(&["alloc", &problem, "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn missing_config_fails() {
    let o = jrcsim(&["run", "/nonexistent/s.toml"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}
