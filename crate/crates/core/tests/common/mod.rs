#![allow(dead_code)]

use serde_json::Value;
use siting::scenario::{parse_scenario, Scenario};

pub fn fixture_path(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn s8_value() -> Value {
    let text = std::fs::read_to_string(fixture_path("example_s8.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn s8() -> Scenario {
    from_value(&s8_value())
}

pub fn from_value(v: &Value) -> Scenario {
    parse_scenario(&v.to_string()).unwrap()
}

pub fn try_from_value(v: &Value) -> siting::Result<Scenario> {
    parse_scenario(&v.to_string())
}

pub fn node(s: &Scenario, label: &str) -> usize {
    s.node_id(label).unwrap()
}

pub fn commodity(s: &Scenario, name: &str) -> usize {
    s.commodity_id(name).unwrap()
}
