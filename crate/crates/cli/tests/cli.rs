use gl3d::binio::{read_field, Field};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn gl3d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gl3d")).args(args).output().expect("spawn gl3d")
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = gl3d(&args);
    assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

#[test]
fn mincon_matches_committed_brute_force_value() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("mincon", &fixture("mincon_4x4.json"), dir.path(), &[]);
    let v = read_json(&dir.path().join("mincon.json"));
    let golden: f64 = std::fs::read_to_string(fixture("mincon_4x4.golden")).unwrap().trim().parse().unwrap();
    let cost = v["cost"].as_f64().unwrap();
    assert!((cost - golden).abs() <= 1e-12 * golden, "{cost} vs {golden}");
    assert_eq!(v["links"].as_array().unwrap().len(), 4);
}

#[test]
fn outputs_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("mincon", &fixture("mincon_4x4.json"), dir.path(), &["--seed", "7"]);
    let p = &read_json(&dir.path().join("mincon.json"))["provenance"];
    assert_eq!(p["tool"], "gl3d");
    assert_eq!(p["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(p["stage"], "minimal-connection");
    assert_eq!(p["seed"], 7);
    assert_eq!(p["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn identical_runs_are_byte_identical_at_any_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        run_ok("hodge", &fixture("hodge_gradient.json"), dir.path(), &["--threads", threads]);
        run_ok("mincon", &fixture("mincon_4x4.json"), dir.path(), &["--threads", threads]);
        run_ok("discretize", &fixture("discretize_swirl.json"), dir.path(), &["--threads", threads]);
    }
    for name in ["hodge.json", "mincon.json", "discretize.json", "lines.vtk"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn hodge_of_a_gradient_has_no_coexact_part() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("hodge", &fixture("hodge_gradient.json"), dir.path(), &[]);
    let v = read_json(&dir.path().join("hodge.json"));
    assert!(v["norm_dstar_beta"].as_f64().unwrap() <= 1e-9);
    assert!(v["norm_gamma"].as_f64().unwrap() <= 1e-9);
    assert!(v["report"]["residual"].as_f64().unwrap() <= 1e-9);
    let (p, da) = (v["norm_p"].as_f64().unwrap(), v["norm_d_alpha"].as_f64().unwrap());
    assert!((p - da).abs() <= 1e-9 * p);
}

#[test]
fn gamma_sweep_smoke_run_is_fast_and_finite() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    run_ok("gamma-sweep", &fixture("gamma_smoke.json"), dir.path(), &[]);
    assert!(t.elapsed().as_secs_f64() < 10.0, "took {:?}", t.elapsed());
    let v = read_json(&dir.path().join("gamma.json"));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    for key in ["energy", "energy_over_g", "gap", "vorticity_share", "w_ratio"] {
        assert!(rows[0][key].as_f64().is_some_and(f64::is_finite), "{key}: {}", rows[0][key]);
    }
    let csv = std::fs::read_to_string(dir.path().join("gamma.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# gl3d "));
    assert!(lines[1].starts_with("eps,n,g,h"));
    assert_eq!(lines.len(), 3);
}

fn read_complex_field(field: &Path) -> gl3d::ComplexField {
    match read_field(std::fs::File::open(field).unwrap()).unwrap() {
        Field::Complex(u) => u,
        _ => panic!("not a complex field"),
    }
}

#[test]
fn synthesized_line_round_trips_through_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    run_ok("synthesize", &fixture("synthesize_line.json"), &out, &[]);
    assert!(out.join("filaments.vtk").exists());
    let mut cfg = read_json(&fixture("extract_line.json"));
    cfg["field"] = Value::from(out.join("field.bin").to_str().unwrap());
    let cfg_path = write_config(dir.path(), "extract.json", &cfg);
    run_ok("extract", &cfg_path, dir.path(), &[]);
    let v = read_json(&dir.path().join("vorticity.json"));
    let edges = v["vorticity"]["dual_edges"].as_array().unwrap();
    // one unit crossing per horizontal coarse face layer (z = 0, 1/4, ..., 1),
    // all in the column containing the line
    assert_eq!(edges.len(), 5, "{edges:?}");
    for e in edges {
        assert_eq!((e["i"].as_u64(), e["j"].as_u64(), e["axis"].as_u64()), (Some(2), Some(1), Some(2)));
        assert_eq!(e["weight"].as_i64(), Some(1));
    }
    let vtk = std::fs::read_to_string(dir.path().join("vorticity.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\ngl3d "));
    assert!(vtk.contains("LINES 5 15"));
}

#[test]
fn extraction_keeps_a_shifted_grid_origin() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&fixture("synthesize_line.json"));
    let shift = [1.0, -2.0, 0.5];
    cfg["grid"]["origin"] = serde_json::json!(shift);
    for f in cfg["filaments"].as_array_mut().unwrap() {
        for end in ["a", "b"] {
            for k in 0..3 {
                let x = f[end][k].as_f64().unwrap();
                f[end][k] = Value::from(x + shift[k]);
            }
        }
    }
    let p = write_config(dir.path(), "shifted.json", &cfg);
    run_ok("synthesize", &p, dir.path(), &[]);
    let mut ex = read_json(&fixture("extract_line.json"));
    ex["field"] = Value::from(dir.path().join("field.bin").to_str().unwrap());
    let p = write_config(dir.path(), "extract.json", &ex);
    run_ok("extract", &p, dir.path(), &[]);
    let v = read_json(&dir.path().join("vorticity.json"));
    let offset: Vec<f64> = v["vorticity"]["offset"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(offset, shift);
    assert_eq!(v["vorticity"]["dual_edges"].as_array().unwrap().len(), 5);
}

#[test]
fn empty_synthesis_is_the_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("synthesize", &fixture("synthesize_empty.json"), dir.path(), &[]);
    let u = read_complex_field(&dir.path().join("field.bin"));
    assert_eq!(u.grid.dims, [6, 5, 4]);
    assert!(u.data.iter().all(|z| z.re == 1.0 && z.im == 0.0));
    assert!(dir.path().join("field.bin.json").exists());
    let mut cfg = serde_json::json!({"schema_version": 1, "eps": 0.05, "regime": {"kind": "s2"}});
    cfg["field"] = Value::from(dir.path().join("field.bin").to_str().unwrap());
    let p = write_config(dir.path(), "energy_cfg.json", &cfg);
    run_ok("energy", &p, dir.path(), &[]);
    assert_eq!(read_json(&dir.path().join("energy.json"))["total"].as_f64(), Some(0.0));
}

#[test]
fn curvature_of_matched_circle_is_small() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("curvature", &fixture("curvature_circle.json"), dir.path(), &[]);
    let v = read_json(&dir.path().join("curvature.json"));
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-8 / 0.25);
}

#[test]
fn discretize_reports_properties() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("discretize", &fixture("discretize_swirl.json"), dir.path(), &[]);
    let v = read_json(&dir.path().join("discretize.json"));
    assert_eq!(v["summary"]["h"].as_f64(), Some(0.03125));
    assert_eq!(v["properties"]["sep_ok"], Value::Bool(true));
    assert!(v["system"]["segments"].as_array().is_some_and(|s| !s.is_empty()));
}

#[test]
fn biot_savart_links_probe_once() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("biot-savart", &fixture("biot_savart_ring.json"), dir.path(), &[]);
    let v = read_json(&dir.path().join("biot_savart.json"));
    assert_eq!(v["linking"][0]["value"].as_i64().map(i64::abs), Some(1));
    // centre of a ring of radius R carries 1/(2R) along the axis
    let bz = v["points"][0]["field"][2].as_f64().unwrap();
    assert!((bz.abs() - 2.0).abs() < 1e-3, "{bz}");
}

#[test]
fn bad_schema_exits_with_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&fixture("mincon_4x4.json"));
    cfg["weights"] = Value::from(1.0);
    let p = write_config(dir.path(), "bad.json", &cfg);
    let o = gl3d(&["mincon", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("weights"));

    let o = gl3d(&["mincon", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pipeline_errors_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&fixture("mincon_4x4.json"));
    cfg["negative"].as_array_mut().unwrap().pop();
    let p = write_config(dir.path(), "unbalanced.json", &cfg);
    let o = gl3d(&["mincon", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage minimal connection"));
}
