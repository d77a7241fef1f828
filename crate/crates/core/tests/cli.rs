use std::process::{Command, Output};

fn wlpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlpower")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn wl_text_and_json() {
    let o = wlpower(&["wl", "run", "--graph", "fig1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("round 1: 4 classes {v1,v2} {v3} {v4,v5} {v6}"), "{text}");
    assert!(text.contains("stabilized at round 3"));

    let o = wlpower(&["--format", "json", "wl", "run", "--graph", "g1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stabilized_at"], 1);
    assert_eq!(v["rounds"][0], serde_json::json!([0, 1, 1, 2]));
}

#[test]
fn compare_exit_codes_follow_the_verdict() {
    let o = wlpower(&["compare", "--graph", "fig1", "--left", "gcn", "--right", "wl", "--shift", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness: wl merges v4, v5 at round 1"));

    let o = wlpower(&["compare", "--graph", "fig1", "--left", "gcn", "--right", "wl", "--shift", "+1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = wlpower(&["compare", "--graph", "fig1", "--left", "gcn", "--right", "wl", "--shift", "+2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_emits_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("verdict.json");
    let p = path.to_str().unwrap();
    let o = wlpower(&["compare", "--graph", "fig1", "--left", "gcn", "--right", "wl", "--emit", p]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let c = &v["comparisons"][0];
    assert_eq!(c["verdict"]["first_violation"]["round"], 1);
    assert_eq!(c["witness_names"], serde_json::json!(["v4", "v5"]));
    assert_eq!(v["fails"], 1);
}

#[test]
fn cases_verify_and_list() {
    let o = wlpower(&["cases", "list"]);
    assert_eq!(o.status.code(), Some(0));
    for id in ["fig1-gcn", "g1-dgnn12", "g2-dgnn34", "g3-dgnn5"] {
        assert!(stdout(&o).contains(id));
    }
    let o = wlpower(&["--format", "json", "cases", "verify", "--case", "g3-dgnn5", "--trials", "5", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["pair"], serde_json::json!(["v1", "w1"]));

    let o = wlpower(&["cases", "verify", "--case", "g9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_writes_a_replayable_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let o = wlpower(&["synth", "--graph", "fig1", "--target", "gnn-minus", "--sigma", "sign", "--emit", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["target"], "gnn-minus");
    assert_eq!(v["sigma"], "sign");
    assert_eq!(v["all_verified"], true);
    assert_eq!(v["rounds"].as_array().unwrap().len(), 3);

    let o = wlpower(&["synth", "--graph", "fig1", "--target", "dgnn6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("refines true"));
}

#[test]
fn mpnn_run_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.txt");
    std::fs::write(&graph, "n 3\nv 1 1: 1\nv 2 1: 1\nv 3 1: 1\ne 1 2\ne 2 3\n").unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"f_mode": "degree", "layers": [{"kind": "builtin", "family": "dgnn4", "sigma": "relu", "w": [["1"]]}]}"#,
    )
    .unwrap();
    let o = wlpower(&[
        "--format",
        "json",
        "mpnn",
        "run",
        "--graph",
        graph.to_str().unwrap(),
        "--spec",
        spec.to_str().unwrap(),
        "--rounds",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // ends: 1/2 + 1/sqrt(6); middle: 1/3 + 2/sqrt(6)
    let labels = &v["rounds"][1]["labels"];
    assert_eq!(labels[0], serde_json::json!(["1/2 + 1/6*sqrt(6)"]));
    assert_eq!(labels[0], labels[2]);
    assert_eq!(labels[1], serde_json::json!(["1/3 + 1/3*sqrt(6)"]));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(wlpower(&["wl", "run"]).status.code(), Some(2));
    assert_eq!(wlpower(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(wlpower(&["--help"]).status.code(), Some(0));
    let o = wlpower(&["mpnn", "run", "--graph", "fig1", "--spec", "no-such-family"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}
