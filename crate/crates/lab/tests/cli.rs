use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vacancy-lab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("VACANCY_LAB_THREADS")
        .output()
        .unwrap()
}

fn config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn sample_is_reproducible_and_certified() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(lab(&["sample", "--seed", "42"], a.path()).status.code(), Some(0));
    assert_eq!(lab(&["sample", "--seed", "42", "--threads", "2"], b.path()).status.code(), Some(0));
    let ra = std::fs::read(a.path().join("realization_0.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.path().join("realization_0.json")).unwrap());
    let m = json(&a.path().join("manifest_sample.json"));
    assert_eq!(m["summary"]["certified"][0], true);
    assert_eq!(m["seed"], 42);
    assert_eq!(m["outputs"][0], "realization_0.json");
    let r = json(&a.path().join("realization_0.json"));
    assert_eq!(r["lambda_sq"], 100.0);
    assert_eq!(r["window"], 20.0);
}

#[test]
fn thread_count_from_environment() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config(a.path(), "[run]\nreplicas = 4\ngrid_size = 256\n");
    assert!(lab(&["sample", "--config", &cfg, "--threads", "1"], a.path()).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_vacancy-lab"))
        .args(["sample", "--config", &cfg, "--out"])
        .arg(b.path())
        .env("VACANCY_LAB_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    for k in 0..4 {
        let f = format!("realization_{k}.json");
        assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap());
    }
}

#[test]
fn malformed_config_names_the_key() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "[run]\nlambda_sq = 100.0\nwindow_size = 3\n");
    let out = lab(&["sample", "--config", &cfg], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window_size"));
}

#[test]
fn exhausted_window_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "[run]\nlambda_sq = 0.01\ntarget_ball_M = 0.0\nwindow_rho_max = 0.1\n");
    let out = lab(&["sample", "--config", &cfg], d.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window exhausted"));
    assert!(json(&d.path().join("manifest_sample.json"))["summary"]["error"].is_string());
}

#[test]
fn defect_trace_shape_and_accuracy() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config(a.path(), "[run]\nlambda_sq = 1e4\ngrid_size = 4096\n");
    assert_eq!(lab(&["defect", "--config", &cfg], a.path()).status.code(), Some(0));
    assert_eq!(lab(&["defect", "--config", &cfg], b.path()).status.code(), Some(0));
    let text = std::fs::read_to_string(a.path().join("defect_0.csv")).unwrap();
    assert_eq!(text, std::fs::read_to_string(b.path().join("defect_0.csv")).unwrap());

    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4096);
    let f = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    let max_d = rows.iter().map(|r| f(r, 3).abs()).fold(0.0, f64::max);
    let n = rows.len();
    let mut checked = 0;
    for j in 0..n {
        // away from vertex angles: the same atom carries both hits here and
        // at both neighbours
        let same = |r: &csv::StringRecord| r[6] == r[7];
        let (p, q) = (&rows[(j + n - 1) % n], &rows[(j + 1) % n]);
        if same(&rows[j]) && same(p) && same(q) && p[6] == rows[j][6] && q[6] == rows[j][6] {
            assert!((f(&rows[j], 3) - f(&rows[j], 4)).abs() < 1e-3 * max_d, "row {j}");
            checked += 1;
        }
    }
    assert!(checked > n / 2);
}

#[test]
fn sentinel_defect_exits_3_and_keeps_traces() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "[run]\nlambda_sq = 2.0\ntarget_ball_M = 0.5\nreplicas = 3\ngrid_size = 256\n");
    let out = lab(&["defect", "--config", &cfg], d.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda too small"));
    for k in 0..3 {
        assert!(d.path().join(format!("defect_{k}.csv")).exists());
    }
}

#[test]
fn verify_runs_only_the_named_tests() {
    let d = tempfile::tempdir().unwrap();
    let out = lab(&["verify", "--tests", "first_hit_law,two_direction_structure"], d.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&d.path().join("verify_report.json"));
    let names: Vec<&str> = r["tests"].as_array().unwrap().iter().map(|t| t["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["first_hit_law", "two_direction_structure"]);
    assert_eq!(r["failures"], 0);
    let m = json(&d.path().join("manifest_verify.json"));
    assert!(m["summary"]["test_seeds"]["first_hit_law"].is_u64());
}

#[test]
fn literal_marks_are_an_expected_failure() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "[marks]\nkind = \"uniform\"\na = 0.5\nb = 1.5\nsize_biased = false\n");
    let out = lab(&["verify", "--config", &cfg, "--tests", "coupling_intensity"], d.path());
    assert_eq!(out.status.code(), Some(0));
    let r = json(&d.path().join("verify_report.json"));
    let t = &r["tests"][0];
    assert_eq!(t["details"]["outcome"], "expected-fail");
    assert!(t["p_value"].as_f64().unwrap() < 1e-4);
}

#[test]
fn failing_battery_sets_exit_code() {
    let d = tempfile::tempdir().unwrap();
    // a threshold no p-value can clear
    let cfg = config(d.path(), "[verify]\np_threshold = 0.999999\n");
    let out = lab(&["verify", "--config", &cfg, "--tests", "first_hit_law"], d.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_reports_slopes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["sweep"], d.path()).status.code(), Some(0));
    let text = std::fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for name in ["sup_slope", "l1_slope"] {
        let s: f64 = rows[0][col(name)].parse().unwrap();
        assert!((-1.4..=-0.6).contains(&s), "{name} {s}");
    }
}

#[test]
fn covariogram_csv_shape() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), "[run]\nlambda_sq = 1e3\ngrid_size = 512\n[covariogram]\nsamples = 1000\n");
    assert_eq!(lab(&["covariogram", "--config", &cfg], d.path()).status.code(), Some(0));
    let text = std::fs::read_to_string(d.path().join("covariogram.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 65);
    assert_eq!(lines[0], "t,cov,ci_half,trimmed_cov,mirror_cov,mirror_ci_half,lambda_sq,samples");
    let last: Vec<f64> = lines[64].split(',').take(3).map(|x| x.parse().unwrap()).collect();
    assert!((last[0] - std::f64::consts::PI).abs() < 1e-15);
    // at t = π the two directions never share a line: covariance near zero
    assert!(last[1].abs() < 3.0 * last[2], "{last:?}");
    let small = config(d.path(), "[covariogram]\nsamples = 10\n");
    assert_eq!(lab(&["covariogram", "--config", &small], d.path()).status.code(), Some(1));
}
