use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn siting(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siting"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = siting(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json", "--no-header"];
    full.extend_from_slice(args);
    serde_json::from_str(&stdout_ok(&full)).unwrap()
}

#[test]
fn transport_two_by_two_costs_forty() {
    let text = stdout_ok(&[
        "--no-header",
        "transport",
        "-i",
        &fixture("transport_2x2.json"),
    ]);
    assert!(text.contains("L = 40.00"), "{text}");
    let v = json_ok(&["transport", "-i", &fixture("transport_2x2.json")]);
    assert_eq!(v["objective"], 40.0);
    assert_eq!(v["flows"], serde_json::json!([[10.0, 0.0], [5.0, 15.0]]));
}

#[test]
fn unbalanced_transport_adds_fictitious_node() {
    let v = json_ok(&["transport", "-i", &fixture("transport_surplus_supply.json")]);
    assert_eq!(v["objective"], 12.0);
    let text = stdout_ok(&[
        "--no-header",
        "transport",
        "-i",
        &fixture("transport_surplus_demand.json"),
    ]);
    assert!(text.contains("fictitious source"), "{text}");
}

#[test]
fn load_with_zero_capacity() {
    let text = stdout_ok(&[
        "--no-header",
        "load",
        "-i",
        &fixture("loading_two_items.json"),
        "--capacity",
        "0",
    ]);
    assert!(text.contains("z = 0.00"), "{text}");
}

#[test]
fn load_examples() {
    let v = json_ok(&["load", "-i", &fixture("loading_two_items.json")]);
    assert_eq!(v["objective"], 7.0);
    let v = json_ok(&["load", "-i", &fixture("loading_single_item.json")]);
    assert_eq!(v["items"][0]["count"], 3);
    let v = json_ok(&[
        "load",
        "-i",
        &fixture("loading_fractional.json"),
        "--quantum",
        "0.5",
    ]);
    assert_eq!(v["capacity_units"], 5);
    assert_eq!(v["objective"], 6.0);
}

#[test]
fn fractional_weights_need_a_quantum() {
    let out = siting(&["load", "-i", &fixture("loading_fractional.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_examples() {
    let v = json_ok(&["plan", "-i", &fixture("plan_single_resource.json")]);
    assert!((v["objective"].as_f64().unwrap() - 24.0).abs() < 1e-9);
    let v = json_ok(&["plan", "-i", &fixture("plan_obligatory.json")]);
    assert!((v["objective"].as_f64().unwrap() - 23.0).abs() < 1e-9);
    let v = json_ok(&["plan", "-i", &fixture("plan_zero_resource.json")]);
    assert_eq!(v["objective"].as_f64().unwrap(), 0.0);
    let v = json_ok(&["plan", "--integer", "-i", &fixture("plan_obligatory.json")]);
    assert_eq!(v["objective"].as_f64().unwrap(), 23.0);
}

#[test]
fn infeasible_plan_exits_with_three() {
    let out = siting(&["plan", "-i", &fixture("plan_infeasible.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn invalid_scenario_exits_with_two() {
    let out = siting(&["solve", "-s", &fixture("invalid_negative_fee.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a1"));
    let out = siting(&["solve", "-s", &fixture("does_not_exist.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn raw_distance_row_from_the_extraction_site() {
    let v = json_ok(&[
        "paths",
        "-s",
        &fixture("example_s8.json"),
        "--commodity",
        "a1",
        "--from",
        "x1",
        "--to",
        "x2,x3,x4,x5",
    ]);
    assert_eq!(v["costs"], serde_json::json!([[1.0, 2.0, 3.0, 4.0]]));
}

#[test]
fn two_candidates_give_one_selected_situation() {
    let v = json_ok(&["solve", "-s", &fixture("example_two_plants.json")]);
    assert_eq!(v["labels"], serde_json::json!(["(x7,x12)"]));
    assert_eq!(v["selection"]["selected"], serde_json::json!(["(x7,x12)"]));
    for row in v["residuals"].as_array().unwrap() {
        assert_eq!(row, &serde_json::json!([0.0]));
    }
}

fn section<'a>(text: &'a str, title: &str) -> Vec<&'a str> {
    text.lines()
        .skip_while(|l| *l != title)
        .skip(2)
        .take_while(|l| !l.is_empty())
        .collect()
}

#[test]
fn json_and_table_carry_the_same_numbers() {
    let s8 = fixture("example_s8.json");
    let table = stdout_ok(&["--no-header", "solve", "-s", &s8]);
    let v = json_ok(&["solve", "-s", &s8]);
    for (title, key) in [("Payoff matrix", "payoffs"), ("Residuals", "residuals")] {
        let lines = section(&table, title);
        let rows = v[key].as_array().unwrap();
        assert_eq!(lines.len(), rows.len());
        for (line, row) in lines.iter().zip(rows) {
            let shown: Vec<f64> = line
                .split("  ")
                .skip(1)
                .filter_map(|w| w.trim().parse().ok())
                .collect();
            let full: Vec<f64> = row
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .collect();
            assert_eq!(shown.len(), full.len(), "{line}");
            for (a, b) in shown.iter().zip(&full) {
                assert!((a - b).abs() <= 0.005 + 1e-9, "{title}: {a} vs {b}");
            }
        }
    }
    let selected = v["selection"]["selected"][0].as_str().unwrap();
    assert!(table.contains(&format!("selected: {selected}")));
}

#[test]
fn reruns_are_byte_identical() {
    let s8 = fixture("example_s8.json");
    for fmt in ["table", "json"] {
        let a = siting(&["--format", fmt, "solve", "-s", &s8, "--details"]);
        let b = siting(&["--format", fmt, "solve", "-s", &s8, "--details"]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn header_is_separate_from_the_payload() {
    let path = fixture("transport_1x1.json");
    let out = siting(&["--format", "json", "transport", "-i", &path]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("# siting "));
    serde_json::from_slice::<Value>(&out.stdout).unwrap();
    let with = stdout_ok(&["transport", "-i", &path]);
    let without = stdout_ok(&["--no-header", "transport", "-i", &path]);
    assert!(with.starts_with("# siting "));
    assert_eq!(with.split_once('\n').unwrap().1, without);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let target_str = target.to_string_lossy().into_owned();
    let out = siting(&[
        "--format",
        "json",
        "--no-header",
        "--out",
        &target_str,
        "solve",
        "--matrix",
        &fixture("s8_residuals.json"),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["selection"]["selected"], serde_json::json!(["(x7,x12)"]));
}

#[test]
fn normalization_and_unit_selection_flags() {
    let s8 = fixture("example_s8.json");
    let v = json_ok(&[
        "solve",
        "-s",
        &s8,
        "--normalize",
        "by_ideal",
        "--warehouse-selection",
        "unit",
    ]);
    assert_eq!(v["options"]["normalize"], "by_ideal");
    assert_eq!(v["options"]["warehouse_selection"], "unit");
    assert!(v["scored_residuals"].is_array());
    let out = siting(&[
        "solve",
        "--matrix",
        &fixture("s8_residuals.json"),
        "--normalize",
        "by_ideal",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
