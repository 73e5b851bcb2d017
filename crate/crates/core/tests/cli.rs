mod common;

use std::process::{Command, Output};

fn dimsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimsynth"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"));
    line.split('=').nth(1).unwrap().trim().parse().unwrap()
}

#[test]
fn jacobian_at_reference_optimum() {
    let o = dimsynth(&[
        "jacobian",
        "topologies/2d_m71.toml",
        "configs/2d_m71_optimum.toml",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("J̃ (6x2)"));
    assert!((value_after(&text, "mu ") - 173.16).abs() < 0.01);
    assert!(text.contains("det(A2) = "));
}

#[test]
fn serial_chain_has_no_type2_matrices() {
    let o = dimsynth(&[
        "jacobian",
        "topologies/3d_m1.toml",
        "configs/3d_m1_reference.toml",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("serial: Ã/B̃ not applicable"));
}

#[test]
fn singular_loop_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.toml");
    // every joint at the task point with parallel axes
    let mut text = String::from("task_point = [1.0, 1.0, 1.0]\n");
    for id in ["13", "14", "25", "35", "42"] {
        text.push_str(&format!(
            "[[joint]]\nid = \"{id}\"\nposition = [1.0, 1.0, 1.0]\naxis = [0.0, 0.0, 1.0]\n"
        ));
    }
    std::fs::write(&cfg, text).unwrap();
    let o = dimsynth(&["jacobian", "topologies/2d_m71.toml", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("type-2 singularity"));
}

#[test]
fn malformed_topology_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\nlinks = [\"L1\", \"L2\"]\nbase = \"L1\"\nend_effector = \"L2\"\n\n[[joints]]\nid = \"12\"\nkind = \"Q\"\nbetween = [\"L1\", \"L2\"]\n").unwrap();
    let cfg = common::asset("configs/2r_planar.toml");
    let o = dimsynth(&["jacobian", path.to_str().unwrap(), cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":8:"), "{}", stderr(&o));
}

#[test]
fn empty_catalog_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "name = \"empty\"\n").unwrap();
    let o = dimsynth(&["synthesize", path.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn three_dof_csv_has_eight_rows() {
    let o = dimsynth(&[
        "synthesize",
        "catalogs/dof3.toml",
        "--seed",
        "3",
        "--restarts",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "S.No.,Name,mu_bar,kappa,i_kappa,mu,f");
    assert_eq!(lines.len(), 9);
}

#[test]
fn synthesize_then_evaluate_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = dimsynth(&[
        "synthesize",
        "catalogs/dof1.toml",
        "--seed",
        "5",
        "--restarts",
        "3",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows =
        dimsynth::io::parse_prescription_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for row in rows {
        let topo = match row.result.name.as_str() {
            "1D-M10" => "topologies/1d_m10.toml",
            "1D-RSSR" => "topologies/rssr.toml",
            "1D-R" => "topologies/1d_r.toml",
            other => panic!("unexpected entry {other}"),
        };
        let e = dimsynth(&["evaluate", topo, out.to_str().unwrap(), "--format", "json"]);
        assert_eq!(e.status.code(), Some(0), "{}", stderr(&e));
        let v: serde_json::Value = serde_json::from_str(&stdout(&e)).unwrap();
        assert_eq!(v["report"]["mu_bar"].as_f64(), row.result.mu_bar);
        assert_eq!(v["report"]["kappa"].as_f64(), Some(row.result.kappa));
    }
}

#[test]
fn evaluate_reports_link_lengths() {
    let o = dimsynth(&[
        "evaluate",
        "topologies/1d_m10.toml",
        "configs/1d_m10_optimum.toml",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for expect in ["9.1261", "3.0381", "1.0934", "7.7462", "8.7499", "1.9348"] {
        assert!(text.contains(expect), "{expect} missing from\n{text}");
    }
}

#[test]
fn zero_design_vector_is_flagged() {
    let t = common::shipped("1d_r");
    let labels: Vec<String> = dimsynth::optimizer::layout(&t)
        .into_iter()
        .map(|c| c.label)
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.json");
    let body = serde_json::json!({ "task_point": [0.0, 0.0, 0.0], "labels": labels, "values": vec![0.0; labels.len()] });
    std::fs::write(&path, body.to_string()).unwrap();
    let o = dimsynth(&["evaluate", "topologies/1d_r.toml", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("warning: ZeroCharacteristicLength"), "{text}");
    assert!(text.contains("mu_bar = undefined"));
}

#[test]
fn wrong_design_length_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.json");
    std::fs::write(
        &path,
        r#"{"task_point":[3,4,5],"labels":["12.rx"],"values":[1.0]}"#,
    )
    .unwrap();
    let o = dimsynth(&["evaluate", "topologies/1d_r.toml", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("needs 5"), "{}", stderr(&o));
}
