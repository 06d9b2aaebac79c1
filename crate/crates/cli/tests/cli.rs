use std::path::PathBuf;
use std::process::{Command, Output};

fn germ(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "germs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn mplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn fiber_of_z_cubed_has_three_components() {
    let out = mplan(&["fiber", "--germ", &germ("zd3.json"), "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["components"], 3);
}

#[test]
fn monodromy_of_z_cubed_is_a_three_cycle() {
    let out = mplan(&["monodromy", "--germ", &germ("zd3.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["cycles"], serde_json::json!([3]));
}

#[test]
fn certify_brieskorn_gives_exact_two() {
    let out = mplan(&["certify", "--germ", &germ("brieskorn23.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tc"]["exact"], 2);
    assert_eq!(v["sec"]["exact"], 1);
}

#[test]
fn certify_hopf_is_bounds_only() {
    let out = mplan(&["certify", "--germ", "builtin:hopf"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tc"]["lower"], 2);
    assert_eq!(v["tc"]["upper"], 3);
    assert!(v["tc"]["exact"].is_null());
    assert!(v.get("sec").is_none());
}

#[test]
fn verify_sphere_two_passes_and_is_reproducible() {
    let args = ["verify", "--case", "sphere:2", "--queries", "5000", "--seed", "7"];
    let a = mplan(&args);
    let b = mplan(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["report"]["succeeded"], 5000);
    assert_eq!(v["report"]["regions"], 3);
}

#[test]
fn plan_sphere_writes_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let out = mplan(&[
        "plan-sphere", "--dim", "3", "--from", "1,0,0,0", "--to", "-1,0,0,0", "--samples", "5",
        "--format", "csv", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x1,x2,x3,x4");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("1.0,-1.0,"));
}

#[test]
fn plan_tube_is_deterministic_and_reaches_goal() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = mplan(&[
            "plan-tube", "--germ", &germ("zd2.json"), "--target", "2.5", "--seed", "3",
            "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(v["endpoint_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn plan_tube_hopf_uses_numeric_lift() {
    let out = mplan(&["plan-tube", "--germ", "builtin:hopf", "--target", "0,0,-1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["path"]["kind"], "numeric_lift");
    assert!(v["endpoint_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn arm_goal_at_pole_exits_with_lift_failure() {
    let out = mplan(&["plan-arm", "--start", "0,0", "--goal", "0,0,1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t* ="));
}

#[test]
fn arm_regular_goal_succeeds() {
    let out = mplan(&["plan-arm", "--start", "0.1,-0.2", "--goal", "0,1,0"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn near_pole_suite_is_a_contract_failure() {
    let out = mplan(&["verify", "--case", "arm", "--near-pole", "0.001", "--queries", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["report"]["lift_failures"], 10);
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(mplan(&["plan-sphere", "--dim", "2", "--from", "1,0", "--to", "1,0,0"]).status.code(), Some(2));
    assert_eq!(mplan(&["plan-sphere", "--dim", "2", "--from", "2,0,0", "--to", "1,0,0"]).status.code(), Some(2));
    assert_eq!(mplan(&["fiber", "--germ", "no-such-file.json"]).status.code(), Some(2));
    assert_eq!(mplan(&["verify", "--case", "torus"]).status.code(), Some(2));
    assert_eq!(mplan(&["plan-sphere", "--dim", "2", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        mplan(&["plan-tube", "--germ", &germ("zd3.json"), "--start", "0.3,0.1", "--target", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn probe_and_link_report_json() {
    let p = mplan(&["probe", "--germ", &germ("zw.json")]);
    assert_eq!(p.status.code(), Some(0));
    assert_eq!(json(&p)["probably_regular"], true);
    let l = mplan(&["link", "--germ", &germ("zw.json"), "--samples", "200"]);
    assert_eq!(l.status.code(), Some(0));
    assert_eq!(json(&l)["link_nonempty"], "yes");
}
