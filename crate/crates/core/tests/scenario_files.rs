mod common;

use common::*;
use serde_json::json;
use siting::agents::{build_situation, EvalOptions};
use siting::scenario::{parse_scenario, validate_feasibility, Scenario, Violation};
use siting::Error;

#[test]
fn worked_example_loads() {
    let s = s8();
    assert_eq!(s.network().node_count(), 18);
    assert_eq!(s.raws().len(), 2);
    assert_eq!(s.products().len(), 3);
    assert_eq!(s.sites().stores.len(), 4);
    assert_eq!(s.sites().plants.len(), 4);
    assert_eq!(s.handling_rate(), 0.2);
}

#[test]
fn grid_and_override_distances() {
    let s = s8();
    let a1 = commodity(&s, "a1");
    let a2 = commodity(&s, "a2");
    let x = |l: &str| node(&s, l);
    let raw_legs: Vec<f64> = ["x2", "x3", "x4", "x5"]
        .iter()
        .map(|w| s.leg_cost(a1, x("x1"), x(w)))
        .collect();
    assert_eq!(raw_legs, vec![1.0, 2.0, 3.0, 4.0]);
    let raw_legs: Vec<f64> = ["x2", "x3", "x4", "x5"]
        .iter()
        .map(|w| s.leg_cost(a2, x("x6"), x(w)))
        .collect();
    assert_eq!(raw_legs, vec![8.0, 6.0, 4.0, 2.0]);
    // the override replaces the grid value 8 for this leg only
    assert_eq!(s.leg_cost(a1, x("x2"), x("x18")), 7.0);
    assert_eq!(s.shortest_paths(a1).get(x("x2"), x("x18")), 8.0);
    assert_eq!(s.leg_cost(a1, x("x18"), x("x2")), 8.0);
}

#[test]
fn round_trip_preserves_costs_and_payoffs() {
    let s = s8();
    let again = parse_scenario(&s.to_json()).unwrap();
    for c in 0..s.commodities().len() {
        assert_eq!(s.effective_distances(c), again.effective_distances(c));
    }
    let opts = EvalOptions::default();
    let a = siting::agents::evaluate_all(&s, &opts).unwrap();
    let b = siting::agents::evaluate_all(&again, &opts).unwrap();
    assert_eq!(a.matrix, b.matrix);
}

fn expect_invalid(v: serde_json::Value) -> Error {
    match try_from_value(&v) {
        Ok(_) => panic!("scenario should have been rejected"),
        Err(e) => e,
    }
}

#[test]
fn empty_store_list_is_rejected() {
    let mut v = s8_value();
    v["sites"]["stores"] = json!([]);
    v["demand"]["orders"] = json!({});
    assert!(matches!(expect_invalid(v), Error::Invalid(_)));
}

#[test]
fn negative_fee_is_rejected() {
    let mut v = s8_value();
    v["commodities"][0]["storage_fee"] = json!(-1);
    let msg = expect_invalid(v).to_string();
    assert!(msg.contains("storage"), "{msg}");
}

#[test]
fn unknown_node_and_commodity() {
    let mut v = s8_value();
    v["sites"]["plants"] = json!(["x7", "x99"]);
    assert!(matches!(expect_invalid(v), Error::UnknownNode(l) if l == "x99"));

    let mut v = s8_value();
    v["recipes"]["b1"] = json!({"a9": 1});
    assert!(matches!(expect_invalid(v), Error::UnknownCommodity(c) if c == "a9"));
}

#[test]
fn missing_recipe_is_reported() {
    let mut v = s8_value();
    v["recipes"].as_object_mut().unwrap().remove("b3");
    assert!(matches!(expect_invalid(v), Error::MissingRecipe(_)));
}

#[test]
fn overlapping_candidate_lists_are_rejected() {
    let mut v = s8_value();
    v["sites"]["raw_warehouses"] = json!(["x2", "x7"]);
    assert!(matches!(expect_invalid(v), Error::Invalid(_)));
}

#[test]
fn unknown_fields_name_their_location() {
    let mut v = s8_value();
    v["production"]["capcity"] = json!({});
    let msg = expect_invalid(v).to_string();
    assert!(msg.contains("production"), "{msg}");
    assert!(msg.contains("capcity"), "{msg}");
}

#[test]
fn diagonal_edge_with_grid_costs_is_rejected() {
    let mut v = s8_value();
    v["edges"]
        .as_array_mut()
        .unwrap()
        .push(json!({"from": "x1", "to": "x8"}));
    assert!(matches!(expect_invalid(v), Error::NotAxisAligned { .. }));
}

fn situation_7_12(s: &Scenario) -> siting::agents::Situation {
    build_situation(s, [node(s, "x7"), node(s, "x12")], &EvalOptions::default()).unwrap()
}

#[test]
fn worked_example_situation_is_feasible() {
    let s = s8();
    assert!(validate_feasibility(&s, &situation_7_12(&s)).is_empty());
}

#[test]
fn distance_bound_between_active_sites() {
    let mut v = s8_value();
    v["limits"] = json!({"max_distances": [
        {"a": "x7", "b": "x12", "max": 4.0},
        {"a": "x13", "b": "x18", "max": 1.0}
    ]});
    let s = from_value(&v);
    let found = validate_feasibility(&s, &situation_7_12(&s));
    // x13 and x18 are not used here, so only the first bound applies
    assert_eq!(found.len(), 1);
    assert!(
        matches!(&found[0], Violation::Distance { distance, max, .. } if *distance == 5.0 && *max == 4.0)
    );
}

#[test]
fn edge_capacity_is_checked_per_commodity() {
    let mut v = s8_value();
    for e in v["edges"].as_array_mut().unwrap() {
        if e["from"] == "x7" && e["to"] == "x8" {
            e["capacities"] = json!({"b1": 1.0});
        }
    }
    let s = from_value(&v);
    let found = validate_feasibility(&s, &situation_7_12(&s));
    assert_eq!(found.len(), 1, "{found:?}");
    match &found[0] {
        Violation::Capacity {
            commodity,
            flow,
            capacity,
            ..
        } => {
            assert_eq!(commodity, "b1");
            assert_eq!(*capacity, 1.0);
            assert_eq!(*flow, 7.0);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn global_totals() {
    let mut v = s8_value();
    v["limits"] = json!({"total_raw": 100.0, "total_product": 50.0});
    let s = from_value(&v);
    let found = validate_feasibility(&s, &situation_7_12(&s));
    assert_eq!(
        found,
        vec![Violation::TotalRaw {
            required: 133.0,
            limit: 100.0
        }]
    );
}

#[test]
fn infeasible_pairs_are_skipped_not_fatal() {
    let mut v = s8_value();
    v["limits"] = json!({"max_distances": [{"a": "x7", "b": "x12", "max": 4.0}]});
    let s = from_value(&v);
    let ev = siting::agents::evaluate_all(&s, &EvalOptions::default()).unwrap();
    assert_eq!(ev.matrix.situations(), 5);
    assert_eq!(ev.skipped.len(), 1);
    assert_eq!(ev.skipped[0].label, "(x7,x12)");
}
