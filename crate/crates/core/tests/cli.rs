use std::path::PathBuf;
use std::process::{Command, Output};

use qbm_core::model::ModelParams;
use qbm_core::observables::delta_e_asy;
use qbm_core::spectral::find_roots;

fn qbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm"))
        .args(args)
        .output()
        .unwrap()
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qbm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_cfg(name: &str, text: &str) -> String {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Data rows of a CSV document as numbers.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn roots_table() {
    let c = write_cfg("roots.cfg", "sigma = 1\neta_r = 0\neta_0 = 0.5\n");
    let out = qbm(&["roots", "--config", &c]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "record,re,im");
    assert_eq!(data.len(), 11);
    assert!(data[9].starts_with("sum_R,") && data[10].starts_with("sum_R_eta,"));
    let first_moment: f64 = data[10].split(',').nth(1).unwrap().parse().unwrap();
    assert!((first_moment + 1.0).abs() < 1e-10);
    assert!(!text.contains('\r'));

    let json = qbm(&["roots", "--config", &c, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["params"]["sigma"], 1.0);
    assert_eq!(v["R_1"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors() {
    let c = write_cfg("bad_key.cfg", "sigma = 1\nsig ma = 2\n");
    let out = qbm(&["roots", "--config", &c]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("sig ma"), "{err}");

    let c = write_cfg(
        "unknown.cfg",
        "sigma = 1\neta_r = 1\neta_0 = 1\nsigmaa = 3\n",
    );
    let err = String::from_utf8(qbm(&["roots", "--config", &c]).stderr).unwrap();
    assert!(err.contains("sigmaa"));

    let c = write_cfg("zero.cfg", "sigma = 0\neta_r = 1\neta_0 = 1\n");
    let out = qbm(&["roots", "--config", &c]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("sigma must be > 0"));

    let out = qbm(&["roots", "--config", "/nonexistent/q.cfg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_point_trace() {
    let c = write_cfg(
        "one.cfg",
        "sigma = 1\neta_r = 1\neta_0 = 0.5\nn_points = 1\nt_max = 0\n",
    );
    let out = qbm(&["trace", "--config", &c]);
    assert!(out.status.success());
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][0], 0.0);
    assert!(r[0][1].abs() < 1e-12 && r[0][2].abs() < 1e-12);
}

#[test]
fn subvacuum_trace_and_determinism() {
    let out = scratch("fig6.csv");
    let o = out.to_string_lossy().into_owned();
    assert!(qbm(&["trace", "--config", &cfg("fig6.cfg"), "--out", &o])
        .status
        .success());
    let first = std::fs::read(scratch("fig6_run0.csv")).unwrap();
    let r = rows(std::str::from_utf8(&first).unwrap());
    assert_eq!(r.len(), 601);
    assert!(r.iter().any(|row| row[2] < 0.0));
    assert!(r.iter().all(|row| row[5] >= 0.25 - 1e-12));
    assert!(qbm(&["trace", "--config", &cfg("fig6.cfg"), "--out", &o])
        .status
        .success());
    assert_eq!(first, std::fs::read(scratch("fig6_run0.csv")).unwrap());
    assert!(scratch("fig6_run2.csv").exists());
}

#[test]
fn damping_orders_relaxation() {
    let o = scratch("fig4.csv").to_string_lossy().into_owned();
    assert!(
        qbm(&["trace", "--config", &cfg("fig4_top.cfg"), "--out", &o])
            .status
            .success()
    );
    let mut late = Vec::new();
    for (i, e0) in [0.25, 0.5, 1.0].into_iter().enumerate() {
        let text = std::fs::read_to_string(scratch(&format!("fig4_run{i}.csv"))).unwrap();
        assert!(text.contains(&format!("# eta_0 = {e0:.16e}")));
        let p = ModelParams::natural(1.0, 0.0, e0).unwrap();
        let asy = delta_e_asy(&p, &find_roots(&p).unwrap()).unwrap();
        let r = rows(&text);
        let dev = r
            .iter()
            .filter(|row| row[0] >= 15.0)
            .map(|row| (row[1] - asy).abs())
            .fold(0.0, f64::max);
        late.push(dev);
    }
    assert!(late[0] > late[1] && late[1] > late[2], "{late:?}");
}

#[test]
fn grids() {
    let out = qbm(&["grid", "--config", &cfg("fig2.cfg")]);
    assert!(out.status.success());
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r.len(), 400);
    let best = r.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert_eq!((best[0], best[1]), (0.05, 0.0));

    let c = write_cfg(
        "cell.cfg",
        "sigma = 1\neta0_values = 0.5\netar_values = 1\nquantity = relaxation_time\n",
    );
    let out = qbm(&["grid", "--config", &c, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["relaxation_time"][0].as_f64().unwrap() - 4.0).abs() < 1e-9);

    let c = write_cfg(
        "desc.cfg",
        "sigma = 1\neta0_values = 0.5, 0.2\netar_values = 1\n",
    );
    assert_eq!(qbm(&["grid", "--config", &c]).status.code(), Some(2));
}

#[test]
fn validation_exit_codes() {
    let out = qbm(&["validate", "--level", "fast"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",PASS")));
    assert!(text.contains("commutator,"));

    let out = qbm(&["validate", "--corrupt-spectral"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("reconstruction,"));
}

#[test]
fn small_bath_run() {
    let c = write_cfg(
        "bath.cfg",
        "sigma = 1\neta_r = 1\neta_0 = 0.5\nn_modes = 60\nnu_max = 20\nt_max = 2\ndt = 0.5\n",
    );
    let out = qbm(&["bath-sim", "--config", &c]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("time,delta_E,delta_T,x_var,p_var,uncertainty,H_R,total"));
    let r = rows(&text);
    assert_eq!(r.len(), 5);
    assert!(r[0][1].abs() < 1e-12);
    assert!(r.iter().all(|row| (row[7] - r[0][7]).abs() < 1e-9));
}
