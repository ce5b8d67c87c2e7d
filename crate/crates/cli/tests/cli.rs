use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tadpole"));
    c.env("RUST_LOG", "warn");
    c
}

fn fresh_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("tadpole-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn nonpositive_length_is_a_config_error() {
    let d = fresh_dir("badl");
    let o = run(&["spectrum", "--L", "-1"], &d);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(&d).unwrap().count(), 0);
    let o = run(&["spectrum", "--L", "0"], &d);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_output_directory_is_a_config_error() {
    let d = fresh_dir("missing").join("does-not-exist");
    let o = run(&["figure2"], &d);
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.exists());
}

#[test]
fn unknown_config_field_is_a_config_error() {
    let d = fresh_dir("unknown");
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"alpha": 1.0, "bogus": 3}"#).unwrap();
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap()], &d);
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.join("spectrum.csv").exists());
    let o = bin().args(["spectrum", "--nmax", "notanumber"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_flags_merge() {
    let d = fresh_dir("merge");
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"alpha": 0.0, "nmax": 3}"#).unwrap();
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--nmax", "4"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.join("spectrum.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("\"nmax\":4"));
    assert!(text.lines().next().unwrap().contains("\"alpha\":0.0"));
}

#[test]
fn figure2_is_reproducible() {
    let d = fresh_dir("fig2");
    assert_eq!(run(&["figure2"], &d).status.code(), Some(0));
    let ta = std::fs::read(d.join("figure2.csv")).unwrap();
    assert_eq!(run(&["figure2"], &d).status.code(), Some(0));
    let tb = std::fs::read(d.join("figure2.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(data_rows(&text).len(), 120);
}

#[test]
fn undamped_spectrum_is_closed_form() {
    let d = fresh_dir("alpha0");
    let o = run(&["spectrum", "--alpha", "0", "--nmax", "10"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.join("spectrum.csv")).unwrap();
    let l = 2.0 * PI;
    let mut damped = 0;
    for row in data_rows(&text) {
        let (re, im): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        if row[0] == "embedded" {
            continue;
        }
        damped += 1;
        let n: f64 = row[1].parse().unwrap();
        assert!((re - 2.0 * n * PI / l).abs() < 1e-10, "{row:?}");
        assert!((im.abs() - 3f64.ln() / l).abs() < 1e-10, "{row:?}");
    }
    assert!(damped >= 10);
}

#[test]
fn damped_spectrum_has_sixty_certified_points() {
    let d = fresh_dir("alpha1");
    let o = run(&["spectrum"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.join("spectrum.csv")).unwrap();
    assert!(text.starts_with("# config {"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r[6].parse::<f64>().unwrap() < 1e-10));
    let certs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("certificates.json")).unwrap()).unwrap();
    assert!(certs["config"].is_object());
    let list = certs["data"]["certificates"].as_array().unwrap();
    assert_eq!(list.len(), 31);
    assert!(list.iter().all(|c| c["winding_count"] == c["roots_found"]));
    assert!(d.join("asymptotic_deviation.csv").exists());
}

#[test]
fn modes_kernel_and_evolve_write_their_outputs() {
    let d = fresh_dir("outputs");
    let l = 2.0 * PI;
    let common = ["--nmax", "3", "--kmax", "2", "--xmax", &format!("{}", 4.0 * l)];
    for cmd in ["modes", "kernel"] {
        let mut args = vec![cmd];
        args.extend(common.iter().map(|s| &**s));
        let o = run(&args, &d);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["evolve", "--xmax", &format!("{}", 4.0 * l), "--tmax", "0.5", "--dt", "0.01"], &d);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "mode_embedded_1.csv",
        "mode_embedded_1.json",
        "mode_damped_0.json",
        "modes_summary.json",
        "kernel_slice.csv",
        "split_report.json",
        "energy_trace.csv",
        "u_final_modal.csv",
        "oracle_trace.csv",
        "u_final_oracle.csv",
        "evolve_summary.json",
    ] {
        assert!(d.join(f).exists(), "{f}");
    }
    let split: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("split_report.json")).unwrap()).unwrap();
    assert_eq!(split["data"]["path"], "derived");
}

#[test]
fn coarse_verify_reports_convergence_orders() {
    let d = fresh_dir("verify");
    let l = 2.0 * PI;
    let h = format!("{}", l / 20.0);
    let o = run(&["verify", "--h1", &h, "--h2", &h], &d);
    // criterion 6 fails at any resolution, so the run is a numerical failure
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("verify.json")).unwrap()).unwrap();
    let crit = v["data"]["criteria"].as_array().unwrap();
    assert_eq!(crit.len(), 10);
    let m = |id: usize| &crit[id - 1]["measured"];
    for row in m(1)["rows"].as_array().unwrap() {
        for s in row["slopes"].as_array().unwrap() {
            assert!((s.as_f64().unwrap() - 2.0).abs() < 0.2, "{s}");
        }
    }
    let ratio = m(3)["refinement_ratio"].as_f64().unwrap();
    assert!(ratio > 3.0, "{ratio}");
    let r7 = m(7)["ratio"].as_f64().unwrap();
    assert!(r7 > 3.0, "{r7}");
    assert!(crit[0]["passed"].as_bool().unwrap());
    assert!(!crit[5]["passed"].as_bool().unwrap());
    assert!(d.join("figure2.csv").exists());
}
