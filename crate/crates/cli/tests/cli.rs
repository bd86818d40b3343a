use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[config]
dimension = 3
rho = 0.1
variant = { kind = "fixed_lossy" }
object = { lambda1 = 2.0, lambda2 = 3.0 }
"#;

const SWEEP: &str = r#"
[sweep]
omega = 1.0
n_max = 0
rho_list = [0.1, 0.05, 0.025]
expect_slope = [0.85, 1.15]
source = { kind = "modal_shell", n = 0, r_in = 2.5, r_out = 3.5 }
"#;

const FIELD: &str = r#"
[field]
omega = 1.3
n_max = 22
r_max = 4.0
radial_points = 8
angular_points = 7
source = { kind = "plane_wave", direction = [0.0, 0.0, 1.0] }
"#;

fn cloaksim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloaksim")).args(args).current_dir(dir).output().expect("binary runs")
}

fn scenario(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn verify_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = cloaksim(&["verify", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&dir.path().join("o/verify.csv"));
    assert_eq!(header, ["check", "value", "tolerance", "passed"]);
    assert!(rows.len() >= 8);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "verify");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_rho = scenario(dir.path(), &format!("{}{SWEEP}", CONFIG.replace("rho = 0.1", "rho = 0.6")));
    let out = cloaksim(&["sweep", "--config", &bad_rho], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config error") && err.contains("line"), "{err}");

    let out = cloaksim(&["sweep"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let ok = scenario(dir.path(), &format!("{CONFIG}{SWEEP}"));
    let out = cloaksim(&["sweep", "--config", &ok, "--rho-list", "0.05,0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2), "increasing rho list is rejected");

    let out = cloaksim(&["field", "--config", &ok], dir.path());
    assert_eq!(out.status.code(), Some(2), "missing section");
}

#[test]
fn sweep_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), &format!("{CONFIG}{SWEEP}"));
    let out = cloaksim(&["sweep", "--config", &path, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&dir.path().join("o/sweep.csv"));
    assert_eq!(header, ["rho", "norm_L2", "norm_H1", "interior_L2", "interior_H1"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3][0], "slope");
    let slope: f64 = rows[3][2].parse().unwrap();
    assert!((slope - 1.0).abs() < 0.15, "{slope}");
    let rho: Vec<f64> = rows[..3].iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(rho, [0.1, 0.05, 0.025]);
}

#[test]
fn failed_expectation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), &format!("{CONFIG}{}", SWEEP.replace("[0.85, 1.15]", "[2.0, 3.0]")));
    let out = cloaksim(&["sweep", "--config", &path], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn two_point_sweep_has_no_slope_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), &format!("{CONFIG}{}", SWEEP.replace("expect_slope = [0.85, 1.15]\n", "")));
    let out = cloaksim(&["sweep", "--config", &path, "--rho-list", "0.1,0.05", "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/sweep.json")).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    assert_eq!(doc["columns"][2], "norm_H1");
    assert_eq!(doc["manifest"], "manifest.json");
}

#[test]
fn free_plane_wave_field_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), &format!("{CONFIG}{FIELD}"));
    let out = cloaksim(&["field", "--config", &path, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&dir.path().join("o/field.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 56);
    for row in &rows {
        let v = |name: &str| row[col(name)].parse::<f64>().unwrap();
        let (re, im) = ((1.3 * v("z")).cos(), (1.3 * v("z")).sin());
        assert!((v("re_u_free") - re).abs() < 1e-10 && (v("im_u_free") - im).abs() < 1e-10, "{row:?}");
        assert_eq!(v("y"), 0.0);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(dir.path(), &format!("{CONFIG}{SWEEP}{FIELD}"));
    for out in ["a", "b"] {
        for cmd in ["sweep", "field"] {
            let o = cloaksim(&[cmd, "--config", &path, "--out", out, "--jobs", "2"], dir.path());
            assert_eq!(o.status.code(), Some(0));
        }
    }
    for file in ["sweep.csv", "field.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn resonance_tables_for_both_polarizations() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONFIG.replace(r#"{ kind = "fixed_lossy" }"#, r#"{ kind = "maxwell_no_loss" }"#)
        + "\n[resonance]\norders = [1]\nwindow = [0.05, 8.0]\n";
    let path = scenario(dir.path(), &body);
    let out = cloaksim(&["resonance", "--config", &path], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for stem in ["resonance_te", "resonance_tm"] {
        let (header, rows) = table(&dir.path().join(format!("out/{stem}.csv")));
        assert_eq!(header, ["order", "index", "omega", "k", "certification_residual"]);
        assert!(!rows.is_empty());
        for r in &rows {
            assert!(r[4].parse::<f64>().unwrap() < 1e-9);
        }
    }
}
