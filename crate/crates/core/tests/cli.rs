use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ccsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccsim")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().into(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn validate_bundled_scenarios() {
    for name in ["grid_neighbourhood.json", "isp_scaling.json", "jitter_response.json"] {
        let out = ccsim(&["validate", "--scenario", &scenario(name)]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(ccsim(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        ccsim(&["validate", "--scenario", "/no/such/file.json"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"seed": 1, "strategy": "sideways"}"#).unwrap();
    let out = ccsim(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn repeated_runs_write_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = ccsim(&[
            "run",
            "--scenario",
            &scenario("grid_neighbourhood.json"),
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = files(dirs[0].path());
    assert!(a.iter().any(|(p, _)| p == Path::new("summary.csv")));
    assert!(a.iter().any(|(p, _)| p == Path::new("node_loads.csv")));
    assert_eq!(a, files(dirs[1].path()));
}

#[test]
fn replicates_flag_gives_one_row_each() {
    let dir = tempfile::tempdir().unwrap();
    let out = ccsim(&[
        "run",
        "--scenario",
        &scenario("jitter_response.json"),
        "--replicates",
        "50",
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows[0].starts_with("0,9,"));
    assert!(dir.path().join("replicate_49/series_1.csv").exists());
}

#[test]
fn json_format_and_topology_generation() {
    let dir = tempfile::tempdir().unwrap();
    let out = ccsim(&[
        "run",
        "--scenario",
        &scenario("grid_neighbourhood.json"),
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 1);

    let topo = ccsim(&["topo", "gen", "grid", "--rows", "3", "--cols", "4", "--cpu", "2"]);
    assert!(topo.status.success());
    let text = String::from_utf8(topo.stdout).unwrap();
    let (parsed, warnings) = compute_congestion::topology::parse_topology(&text).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(parsed.router_count(), 12);

    let path = dir.path().join("line.topo");
    let out = ccsim(&["topo", "gen", "line", "--routers", "4", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(
        compute_congestion::topology::load_from_file(&path)
            .unwrap()
            .router_count(),
        4
    );
}
