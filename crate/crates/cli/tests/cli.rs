use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn adelic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adelic")).args(args).output().expect("spawn adelic")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn decompose_three_p1_minus_p2() {
    let spec = data("decompose.json");
    let out = adelic(&["decompose", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json(&out);
    assert_eq!(r["pass"], true);
    let parts = r["results"]["parts"].as_array().unwrap();
    assert_eq!(parts.len(), 2);
    assert_eq!(parts[0]["coefficient"], "1");
    assert_eq!(parts[1]["coefficient"], "1");
    assert_eq!(parts[1]["divisor"], serde_json::json!([{"point": "t-2", "c": "-1"}, {"point": "t-1", "c": "2"}]));
}

#[test]
fn decompose_accepts_bare_divisor_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    std::fs::write(&path, r#"[{"point":"inf","c":"7/3"},{"point":"t^2+1","c":"-1/2"}]"#).unwrap();
    let out = adelic(&["decompose", "--divisor", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    std::fs::write(&path, r#"[{"point":"inf","c":"1"},{"point":"t","c":"-1"}]"#).unwrap();
    let out = adelic(&["decompose", "--divisor", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("divisor"), "{}", stderr(&out));
}

#[test]
fn trivial_green_has_zero_chi_volume() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, r#"{"kind":"volumes","series":{"divisor":[{"point":"inf","c":"2"}]},"n_max":40}"#).unwrap();
    let out = adelic(&["volumes", "chi", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let est = &json(&out)["results"]["estimate"];
    assert_eq!(est["point_estimate"].as_f64(), Some(0.0));
    assert_eq!(est["bracket"], serde_json::json!([0.0, 0.0]));
}

#[test]
fn empty_schedule_is_an_error() {
    let spec = data("trivial.json");
    let out = adelic(&["trivial", "--spec", spec.to_str().unwrap(), "--schedule", ","]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("schedule"), "{}", stderr(&out));
}

#[test]
fn reports_are_byte_identical() {
    let spec = data("okounkov.json");
    let a = adelic(&["okounkov", "transform", "--spec", spec.to_str().unwrap(), "--nmax", "60"]);
    let b = adelic(&["okounkov", "transform", "--spec", spec.to_str().unwrap(), "--nmax", "60"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let spec = data("bundle_hn.json");
    for _ in 0..2 {
        let out = adelic(&["bundle", "hn", "--spec", spec.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let first = std::fs::read(dir.path().join("bundle.json")).unwrap();
    let again = adelic(&["run", "--spec", spec.to_str().unwrap()]);
    assert_eq!(first, again.stdout);
}

#[test]
fn csv_tables() {
    let spec = data("okounkov.json");
    let out = adelic(&["okounkov", "transform", "--spec", spec.to_str().unwrap(), "--nmax", "20", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,alpha,g"));

    let spec = data("series_shift.json");
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = adelic(&["series", "--spec", spec.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,value,lo,hi"));
    assert_eq!(lines.count(), 12);

    let spec = data("decompose.json");
    let out = adelic(&["decompose", "--spec", spec.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"kind":"series","series":{"divisor":[],"green":{"finite":{"2":{"u":"x"}}}}}"#).unwrap();
    let out = adelic(&["series", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("green.finite.2.u"), "{}", stderr(&out));

    let spec = data("decompose.json");
    let out = adelic(&["series", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kind"), "{}", stderr(&out));
}

#[test]
fn every_sample_spec_passes() {
    for name in ["bundle_hn", "series_shift", "continuity", "trivial"] {
        let spec = data(&format!("{name}.json"));
        let out = adelic(&["run", "--spec", spec.to_str().unwrap(), "--nmax", "40"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
    }
}

#[test]
fn timing_is_opt_in() {
    let spec = data("bundle_hn.json");
    let out = adelic(&["bundle", "hn", "--spec", spec.to_str().unwrap()]);
    assert!(json(&out).get("wall_time_ms").is_none());
    let out = adelic(&["bundle", "hn", "--spec", spec.to_str().unwrap(), "--timing"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["wall_time_ms"].is_u64());
}
