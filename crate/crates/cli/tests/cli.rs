use std::process::{Command, Output};

use gft_verify::CheckResult;

fn gft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gft")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_names_checks_and_mechanisms() {
    let o = gft(&["list"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for name in ["lemma-reduce", "convergence-bound", "btr", "mcafee92"] {
        assert!(out.contains(name), "missing {name} in\n{out}");
    }
}

#[test]
fn passing_check_exits_zero() {
    let o = gft(&["check", "fsd-11-lower", "--eps", "1/4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("57/64") && out.contains("15/16"), "{out}");
    assert!(out.contains("1/1 checks passed"), "{out}");
}

#[test]
fn failing_check_exits_one_with_witness() {
    let o = gft(&["check", "log-lower-bound", "--mB", "4", "--k", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("45/32"), "{out}");
    assert!(out.contains("witness"), "{out}");
}

#[test]
fn unknown_check_or_param_exits_two() {
    let o = gft(&["check", "nosuch"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nosuch"));
    let o = gft(&["check", "thm-iid", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn strict_rule_is_caught() {
    let o = gft(&["check", "--btr", "strict", "lemma-reduce"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn json_output_round_trips() {
    let o = gft(&["check", "--format", "json", "fsd-11-lower", "thm-iid", "--mS", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let results: Vec<CheckResult> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| CheckResult::from_json(r).unwrap())
        .collect();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0].id, "fsd-11-lower");
    assert_eq!(results[1].params["mS"], gft_core::scalar::int(2));
    assert_eq!(CheckResult::from_json(&results[0].to_json()).unwrap().to_json(), results[0].to_json());
}

#[test]
fn csv_header_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = gft(&["check", "--format", "csv", "--output", path.to_str().unwrap(), "fsd-11-lower"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check_id,passed,lhs,rhs,slack,seed,notes"));
    assert!(lines.next().unwrap().starts_with("fsd-11-lower,true,57/64,15/16,-3/64,"));
}

#[test]
fn check_runs_are_reproducible() {
    let args = ["check", "--format", "json", "--seed", "3", "merge-superadditivity", "--n_trials", "2000"];
    assert_eq!(gft(&args).stdout, gft(&args).stdout);
}

#[test]
fn config_file_drives_checks_and_markets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"checks": [{"id": "fsd-11-lower", "params": {"eps": "1/8"}}],
            "markets": [{"seller": {"atoms": [[0, "1/4"], [1, "3/4"]]},
                         "buyer": {"atoms": [[0, "1/4"], [2, "3/4"]]},
                         "m_s": 1, "m_b": 2, "mechanisms": ["btr"]}],
            "output": {"format": "csv"}}"#,
    )
    .unwrap();
    let o = gft(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("469/512"), "{}", stdout(&o));
    let o = gft(&["estimate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("57/64"), "{}", stdout(&o));

    std::fs::write(&path, r#"{"checks": [{"id": "nosuch"}]}"#).unwrap();
    let o = gft(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nosuch"));
}

#[test]
fn estimate_exact_two_point_pair() {
    let seller = r#"{"atoms": [[0, "1/4"], [1, "3/4"]]}"#;
    let buyer = r#"{"atoms": [[0, "1/4"], [2, "3/4"]]}"#;
    let o = gft(&["estimate", "--seller", seller, "--buyer", buyer, "--mb", "2", "-m", "btr"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("57/64"), "{}", stdout(&o));
    let o = gft(&["estimate", "--seller", seller, "--buyer", buyer, "-m", "vcg", "--multiset"]);
    assert!(stdout(&o).contains("15/16"), "{}", stdout(&o));
}

#[test]
fn estimate_monte_carlo_requires_seed() {
    let o = gft(&["estimate", "--seller", "uniform", "--buyer", "uniform", "--mc", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"), "{}", stderr(&o));
    let args = [
        "estimate", "--seller", "uniform", "--buyer", "uniform", "-m", "vcg", "--mc", "100000", "--seed", "7",
        "--format", "csv",
    ];
    let o = gft(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(o.stdout, gft(&args).stdout);
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let (mean, se): (f64, f64) = (row[4].parse().unwrap(), row[5].parse().unwrap());
    assert!((mean - 1.0 / 6.0).abs() <= 5.0 * se, "{out}");
}

#[test]
fn one_shot_vcg_runs_a_deficit() {
    let o = gft(&["estimate", "-m", "vcg", "-m", "btr", "--seller-values", "2", "--buyer-values", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let vcg = out.lines().find(|l| l.starts_with("vcg")).unwrap();
    let cells: Vec<&str> = vcg.split_whitespace().collect();
    assert_eq!(&cells[1..3], ["1", "-1"], "{out}");
}

#[test]
fn bk_gap_labels_its_scope() {
    let o = gft(&["bk-gap", "--family", "iid", "--max-support", "2", "--k-max", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("empirical over configured family"), "{out}");
    assert!(out.contains("family max k = 1"), "{out}");
}
