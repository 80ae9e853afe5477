use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn invfem(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_invfem"));
    cmd.args(args).env_remove("INVFEM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tet_config() -> Value {
    json!({
        "mesh": {"generator": "unit_tet"},
        "direction": "forward",
        "degree": 1,
        "material": {"kind": "mooney_rivlin_compressible", "constants": {"c1": 10.0, "c2": 5.0, "d1": 100.0}, "rho0": 1.0},
        "dirichlet": [{"tag": 1, "components": "xyz", "exprs": ["0", "0", "0"]}],
        "body_force": ["0", "3", "0"],
        "output": {"vtk_path": "tet.vtk", "report_path": "report.json"}
    })
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn read_report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strip(mut v: Value) -> Value {
    invfem::config::strip_timings(&mut v);
    v
}

fn run_solve(sub: &str, cfg: &Value, extra: &[&str]) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), cfg);
    let out_dir = dir.path().join("out");
    let mut args = vec![sub, "--config", path.to_str().unwrap(), "--output", out_dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = invfem(&args, &[]);
    (dir, out)
}

#[test]
fn forward_writes_report_and_vtk() {
    let (dir, out) = run_solve("forward", &tet_config(), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let o = dir.path().join("out");
    let r = read_report(&o.join("report.json"));
    assert_eq!(r["status"], "converged");
    assert_eq!(r["direction"], "forward");
    assert!(r["displacement"]["max_magnitude"].as_f64().unwrap() > 0.0);
    let vtk = std::fs::read_to_string(o.join("tet.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0") && vtk.contains("VECTORS displacement double"));
    assert!(o.join("tet_updated.vtk").exists());
}

#[test]
fn inverse_and_iga_recover_the_same_shape() {
    let (dir, out) = run_solve("forward", &tet_config(), &[]);
    assert_eq!(code(&out), 0);
    let deformed = read_report(&dir.path().join("out/report.json"));
    let (_, inv) = run_solve("inverse", &tet_config(), &[]);
    assert_eq!(code(&inv), 0, "{}", stderr(&inv));
    let (idir, iga) = run_solve("iga", &tet_config(), &["--set", "iga.epsilon=1e-10"]);
    assert_eq!(code(&iga), 0, "{}", stderr(&iga));
    let r = read_report(&idir.path().join("out/report.json"));
    assert_eq!(r["direction"], "iga");
    assert_eq!(r["iga"]["converged"], true);
    assert!(r["iga"]["iterations"].as_u64().unwrap() >= 2);
    assert!(deformed["output_mesh"]["volume"].as_f64().unwrap() > 0.0);
}

#[test]
fn identical_runs_give_identical_reports() {
    let (d1, o1) = run_solve("forward", &tet_config(), &["--seed", "5"]);
    let (d2, o2) = run_solve("forward", &tet_config(), &["--seed", "5"]);
    assert_eq!((code(&o1), code(&o2)), (0, 0));
    let a = strip(read_report(&d1.path().join("out/report.json")));
    let b = strip(read_report(&d2.path().join("out/report.json")));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn thread_count_does_not_change_the_report() {
    let mut cfg = tet_config();
    cfg["mesh"] = json!({"generator": "box", "params": {"divisions": [3, 2, 2]}});
    cfg["dirichlet"] = json!([{"tag": 1, "components": "xyz", "exprs": ["0", "0", "0"]}]);
    cfg["body_force"] = json!(["0", "-2", "0"]);
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let dir = TempDir::new().unwrap();
        let path = write_config(dir.path(), &cfg);
        let out = invfem(
            &["forward", "--config", path.to_str().unwrap(), "--output", dir.path().to_str().unwrap()],
            &[("INVFEM_THREADS", threads)],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        reports.push(strip(read_report(&dir.path().join("report.json"))));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn schema_errors_exit_2_with_key_path() {
    let mut unknown = tet_config();
    unknown["material"]["constants"]["nu"] = json!(0.3);
    let mut bad_expr = tet_config();
    bad_expr["body_force"][1] = json!("3 *");
    let mut missing = tet_config();
    missing["material"]["constants"] = json!({"c1": 1.0, "c2": 1.0});
    let mut bad_tag = tet_config();
    bad_tag["dirichlet"][0]["tag"] = json!(7);
    for (cfg, path) in [
        (&unknown, "material.constants.nu"),
        (&bad_expr, "body_force[1]"),
        (&missing, "material.constants.d1"),
        (&bad_tag, "dirichlet[0].tag"),
    ] {
        let (_, out) = run_solve("forward", cfg, &[]);
        assert_eq!(code(&out), 2, "{}", stderr(&out));
        assert!(stderr(&out).contains(&format!("`{path}`")), "{}", stderr(&out));
    }
    let (_, out) = run_solve("forward", &tet_config(), &["--set", "solver.tolerance=1e-8"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("`solver.tolerance`"));
    let (_, out) = run_solve("forward", &tet_config(), &["--set", "no_equals_sign"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_json_and_missing_config_exit_2() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("broken.json");
    std::fs::write(&p, "{\"mesh\": ").unwrap();
    assert_eq!(code(&invfem(&["forward", "--config", p.to_str().unwrap()], &[])), 2);
    let out = invfem(&["inverse"], &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--config"));
}

#[test]
fn bad_thread_variable_exits_2() {
    let out = invfem(&["verify", "shear"], &[("INVFEM_THREADS", "zero")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("INVFEM_THREADS"));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(code(&invfem(&["solve"], &[])), 2);
}

#[test]
fn divergence_exits_3_and_still_writes_report() {
    let (dir, out) = run_solve(
        "forward",
        &tet_config(),
        &["--set", "body_force.1=1e4", "--set", "solver.max_iter=3", "--set", "solver.max_bisections=1"],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let r = read_report(&dir.path().join("out/report.json"));
    assert_eq!(r["status"], "diverged");
    assert!(r["convergence"]["steps"].as_array().unwrap().iter().all(|s| s["converged"] == false));
    assert!(!dir.path().join("out/tet.vtk").exists());
}

#[test]
fn iga_iteration_limit_exits_3() {
    let (dir, out) = run_solve("iga", &tet_config(), &["--set", "iga.max_iterations=2", "--set", "iga.epsilon=1e-14"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let r = read_report(&dir.path().join("out/report.json"));
    assert_eq!(r["iga"]["iterations"], 2);
    assert_eq!(r["iga"]["converged"], false);
}

#[test]
fn runtime_failures_exit_1() {
    let out = invfem(&["forward", "--config", "/definitely/not/here.json"], &[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("/definitely/not/here.json"));
    let mut cfg = tet_config();
    cfg["mesh"] = json!({"generator": "gmsh", "params": {"path": "missing.msh"}});
    let (_, out) = run_solve("forward", &cfg, &[]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn gmsh_mesh_relative_to_config() {
    let dir = TempDir::new().unwrap();
    let msh = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n\
$Elements\n5\n1 2 2 1 1 1 2 4\n2 2 2 2 2 1 3 2\n3 2 2 2 2 1 4 3\n4 2 2 2 2 2 3 4\n5 4 2 0 1 1 2 3 4\n$EndElements\n";
    std::fs::write(dir.path().join("tet.msh"), msh).unwrap();
    let mut cfg = tet_config();
    cfg["mesh"] = json!({"generator": "gmsh", "params": {"path": "tet.msh"}});
    let path = write_config(dir.path(), &cfg);
    let out = invfem(&["forward", "--config", path.to_str().unwrap(), "--output", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn verify_shear_passes() {
    let dir = TempDir::new().unwrap();
    let out = invfem(&["verify", "shear", "--output", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_report(&dir.path().join("verify_shear.json"));
    assert!(r["summary"]["max_simple_error"].as_f64().unwrap() <= 1e-10);
    assert!(r["summary"]["generalized_finest_error"].as_f64().unwrap() < 0.02);
    assert_eq!(r["summary"]["passed"], true);
}

#[test]
fn failed_verification_exits_1() {
    let dir = TempDir::new().unwrap();
    // a single refinement level cannot show a decreasing trend below 2%
    let out = invfem(
        &["verify", "shear", "--set", "generalized_divisions=[1]", "--output", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn bench_tet_is_reproducible() {
    let mut reports = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().unwrap();
        let out = invfem(
            &["bench", "tet", "--seed", "42", "--set", "draws_per_part=6", "--output", dir.path().to_str().unwrap()],
            &[],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        reports.push(strip(read_report(&dir.path().join("bench_tet.json"))));
    }
    assert_eq!(reports[0], reports[1]);
    let parts = reports[0]["parts"].as_array().unwrap();
    assert_eq!(parts.len(), 2);
    for p in parts {
        assert!(p["one_shot"]["error"]["mean"].as_f64().unwrap() <= 1e-9);
        let its = p["iga"]["iterations"]["mean"].as_f64().unwrap();
        assert!((3.0..=8.0).contains(&its), "{its}");
    }
}
