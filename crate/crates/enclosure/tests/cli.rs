//! End-to-end runs of the `enclosure` binary on small configurations.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enclosure")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn small(k: f64) -> Value {
    json!({
        "domain": {"boundary_resolution": 64},
        "inclusions": [{"vertices": [[0.2, 0.0], [0.0, 0.2], [-0.2, 0.0], [0.0, -0.2]], "conductivity": k}],
        "mesh": {"h_target": 0.08},
        "tau_grid": [2.0, 3.0, 4.0, 5.0, 6.0],
        "t_values": [0.0, 0.3],
        "indicator_directions": [0.0, 1.0],
        "direction_count": 6,
        "verify": {"taus": [2.0, 3.0, 4.0], "refinement": false},
        "oracle": {"h_target": 0.08, "boundary_resolution": 64, "modes": [1, 2]},
        "tolerances": {"oracle_rel": 0.2}
    })
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_mesh_file_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(2.0);
    cfg["mesh"]["file"] = json!("no-such-mesh.txt");
    let c = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run(&["indicator", "--config", &c, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("mesh not found"), "{}", stderr(&o));
}

#[test]
fn overlapping_inclusions_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(2.0);
    cfg["inclusions"] = json!([
        {"vertices": [[0.0, 0.0], [0.3, 0.0], [0.3, 0.3], [0.0, 0.3]], "conductivity": 2.0},
        {"vertices": [[0.2, 0.2], [0.5, 0.2], [0.5, 0.5], [0.2, 0.5]], "conductivity": 3.0}
    ]);
    let c = write_config(dir.path(), "c.json", &cfg);
    let o = run(&["mesh", "--config", &c, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("disjointness violated"), "{}", stderr(&o));
}

#[test]
fn malformed_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, "{\"tau_grid\": [1, 2,").unwrap();
    let o = run(&["mesh", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let unknown = write_config(dir.path(), "u.json", &json!({"taus": [1.0]}));
    assert_eq!(code(&run(&["mesh", "--config", &unknown])), 2);
}

#[test]
fn indicator_output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", &small(2.0));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = run(&["indicator", "--config", &c, "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["indicator.csv", "indicator.svg", "indicator.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let csv = std::fs::read_to_string(a.join("indicator.csv")).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("direction_angle,tau,t,re,im,abs,log_abs,status"));
    assert_eq!(lines.count(), 2 * 2 * 5);
    assert!(csv.starts_with("# enclosure "));
}

#[test]
fn mesh_written_by_the_tool_can_be_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", &small(2.0));
    let gen = dir.path().join("gen");
    assert_eq!(code(&run(&["mesh", "--config", &c, "--out", gen.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["indicator", "--config", &c, "--out", gen.to_str().unwrap()])), 0);

    let mut cfg = small(2.0);
    cfg["mesh"]["file"] = json!("gen/mesh.txt");
    let c2 = write_config(dir.path(), "c2.json", &cfg);
    let from_file = dir.path().join("file");
    let o = run(&["indicator", "--config", &c2, "--out", from_file.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p.join("indicator.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    assert_eq!(rows(&gen), rows(&from_file));
}

#[test]
fn corrupt_mesh_file_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.txt"), "H_TARGET 0.1\nNODES 2\n0 0\n1 x\n").unwrap();
    let mut cfg = small(2.0);
    cfg["mesh"]["file"] = json!("m.txt");
    let c = write_config(dir.path(), "c.json", &cfg);
    let o = run(&["indicator", "--config", &c, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn unit_contrast_detects_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", &small(1.0));
    let out = dir.path().join("o");
    let o = run(&["reconstruct", "--config", &c, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("no inclusion detected"), "{}", stdout(&o));
    assert!(!out.join("hull.csv").exists());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("reconstruct.json")).unwrap()).unwrap();
    assert_eq!(report["detected"], json!(false));
}

#[test]
fn reconstruct_writes_support_table_and_hull() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", &small(2.0));
    let out = dir.path().join("o");
    let o = run(&["reconstruct", "--config", &c, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let support = std::fs::read_to_string(out.join("support.csv")).unwrap();
    let rows: Vec<&str> = support.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("direction_angle,replaces_angle,regular,h_hat"));
    // multiples of 60 degrees miss the diamond's edge normals, so nothing is replaced
    assert_eq!(rows.len(), 1 + 6);
    assert!(out.join("hull.csv").exists());
    assert!(std::fs::read_to_string(out.join("hull.svg")).unwrap().contains("<polygon"));
}

#[test]
fn verify_passes_and_flipped_normals_fail() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", &small(2.0));
    let good = dir.path().join("good");
    let o = run(&["verify", "--config", &c, "--out", good.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(good.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], json!(true));
    assert_eq!(report["weak_form"].as_array().unwrap().len(), 5);

    let bad = dir.path().join("bad");
    let o = run(&["verify", "--config", &c, "--out", bad.to_str().unwrap(), "--flip-normals"]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn oracle_gate_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", &small(2.0));
    let o = run(&["oracle", "--config", &c, "--out", dir.path().join("a").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut strict = small(2.0);
    strict["tolerances"]["oracle_rel"] = json!(1e-9);
    let c = write_config(dir.path(), "s.json", &strict);
    let o = run(&["oracle", "--config", &c, "--out", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let csv = std::fs::read_to_string(dir.path().join("b/oracle.csv")).unwrap();
    assert!(csv.contains("mode,theta_q,fem_re,fem_im,oracle_re,oracle_im,rel_error,pass"));
}

#[test]
fn help_documents_columns_and_exit_codes() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("direction_angle,tau,t,re,im,abs,log_abs,status"));
    assert!(text.contains("Exit codes"));
}

#[test]
fn oversized_mesh_target_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(2.0);
    cfg["mesh"]["h_target"] = json!(0.5);
    let c = write_config(dir.path(), "c.json", &cfg);
    let o = run(&["mesh", "--config", &c, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("precondition violated"), "{}", stderr(&o));
}

#[test]
fn empty_inclusion_set_is_flagged_below_noise() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(2.0);
    cfg["inclusions"] = json!([]);
    let c = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("o");
    let o = run(&["indicator", "--config", &c, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("no inclusion detected"));
    let csv = std::fs::read_to_string(out.join("indicator.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",below-noise-floor")), "{csv}");
}

#[test]
fn unit_contrast_verify_passes_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", &small(1.0));
    let o = run(&["verify", "--config", &c, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn violated_geometric_condition_is_a_banner_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(2.0);
    // diameter 1.0 exceeds the distance 0.4 to the boundary
    cfg["inclusions"] = json!([{"vertices": [[-0.5, -0.1], [0.5, -0.1], [0.5, 0.1], [-0.5, 0.1]], "conductivity": 2.0}]);
    cfg["poles"] = json!({"p_angle": 1.5707963267948966, "q_angle": -1.5707963267948966});
    let c = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("o");
    let o = run(&["reconstruct", "--config", &c, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("WARNING"));
    for name in ["support.csv", "reconstruct.json", "hull.svg"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(text.contains("WARNING: geometric condition violated"), "{name}");
    }
}
