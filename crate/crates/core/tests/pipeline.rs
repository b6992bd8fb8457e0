mod common;

use std::collections::BTreeMap;

use common::*;
use serde_json::json;
use siting::agents::*;
use siting::costflow::*;
use siting::production::*;

#[test]
fn six_situations_in_pair_order() {
    let s = s8();
    let ev = evaluate_all(&s, &EvalOptions::default()).unwrap();
    assert_eq!(
        ev.matrix.labels().to_vec(),
        [
            "(x7,x12)",
            "(x7,x13)",
            "(x7,x18)",
            "(x12,x13)",
            "(x12,x18)",
            "(x13,x18)"
        ]
    );
    assert!(ev.skipped.is_empty());
}

#[test]
fn pair_counts_follow_candidate_count() {
    let mut v = s8_value();
    v["sites"]["plants"] = json!(["x7", "x12"]);
    let s = from_value(&v);
    let ev = evaluate_all(&s, &EvalOptions::default()).unwrap();
    assert_eq!(ev.matrix.situations(), 1);
    let sit = &ev.situations[0];
    let p = payoffs(&s, sit).unwrap();
    assert_eq!(ev.matrix.column(0), p.as_array().to_vec());

    let mut v = s8_value();
    v["sites"]["plants"] = json!(["x7", "x12", "x13", "x18", "x16"]);
    v["sites"]["stores"] = json!(["x14", "x15", "x17"]);
    let orders = v["demand"]["orders"].as_object_mut().unwrap();
    orders.remove("x16");
    v["production"]["factors"]["x16"] = json!({"b1": 2.0, "b2": 2.0, "b3": 2.0});
    let s = from_value(&v);
    let en = enumerate_situations(&s, &EvalOptions::default()).unwrap();
    assert_eq!(en.situations.len() + en.skipped.len(), 10);
}

#[test]
fn too_few_plant_candidates() {
    let mut v = s8_value();
    v["sites"]["plants"] = json!(["x7"]);
    let s = from_value(&v);
    assert!(enumerate_situations(&s, &EvalOptions::default()).is_err());
}

#[test]
fn demand_and_requirements() {
    let s = s8();
    let summary = demand_summary(&s).unwrap();
    let b: Vec<u64> = summary.total_per_product.values().copied().collect();
    assert_eq!(b, vec![17, 17, 16]);
    let a: Vec<f64> = summary.total_raw_required.values().copied().collect();
    assert_eq!(a, vec![66.0, 67.0]);
}

#[test]
fn raw_bundle_cost_per_unit() {
    let s = s8();
    let a1 = commodity(&s, "a1");
    let bundle: BTreeMap<usize, f64> = [(a1, 1.0)].into_iter().collect();
    // extraction 1, legs 1 and 3, fee 15
    let c = raw_bundle_cost(&s, node(&s, "x7"), &bundle, node(&s, "x2")).unwrap();
    assert_eq!(c, 20.0);
    let twice: BTreeMap<usize, f64> = [(a1, 2.0)].into_iter().collect();
    assert_eq!(
        raw_bundle_cost(&s, node(&s, "x7"), &twice, node(&s, "x2")).unwrap(),
        40.0
    );
}

#[test]
fn greedy_flow_conserves_units() {
    let s = s8();
    for sit in evaluate_all(&s, &EvalOptions::default())
        .unwrap()
        .situations
    {
        for p in s.products() {
            for (k, &plant) in sit.plants.iter().enumerate() {
                let sent: u64 = sit
                    .flow
                    .shipments
                    .iter()
                    .filter(|sh| sh.product == p && sh.plant == plant)
                    .map(|sh| sh.units)
                    .sum();
                assert_eq!(sent, sit.allocation.quantity(k, p));
            }
            for (si, &store) in s.sites().stores.iter().enumerate() {
                let got: u64 = sit
                    .flow
                    .shipments
                    .iter()
                    .filter(|sh| sh.product == p && sh.store == store)
                    .map(|sh| sh.units)
                    .sum();
                assert_eq!(got, s.demand().orders[si].get(&p).copied().unwrap_or(0));
            }
        }
        let total: f64 = sit.flow.shipments.iter().map(|sh| sh.cost()).sum();
        assert_eq!(total, sit.flow.total_transport_cost);
    }
}

#[test]
fn flow_reports_shortfall() {
    let s = s8();
    let pair = [node(&s, "x7"), node(&s, "x12")];
    let mut alloc = allocate_output(&s, pair, &total_demand(&s)).unwrap();
    *alloc.units[0].get_mut(&commodity(&s, "b1")).unwrap() -= 1;
    let err = greedy_flow(&s, &alloc, [node(&s, "x8"), node(&s, "x11")]).unwrap_err();
    assert!(err.is_infeasible());
}

#[test]
fn split_table_agrees_with_profit_rule() {
    let with_table = s8();
    let mut v = s8_value();
    v["production"].as_object_mut().unwrap().remove("splits");
    let without = from_value(&v);
    let totals = total_demand(&with_table);
    for (i, &a) in with_table.sites().plants.iter().enumerate() {
        for &b in &with_table.sites().plants[i + 1..] {
            let x = allocate_output(&with_table, [a, b], &totals).unwrap();
            let y = allocate_output(&without, [a, b], &totals).unwrap();
            assert_eq!(
                x,
                y,
                "pair ({}, {})",
                with_table.label(a),
                with_table.label(b)
            );
        }
    }
}

#[test]
fn plant_economics_rows() {
    let s = s8();
    let b1 = commodity(&s, "b1");
    let e = plant_economics(&s, node(&s, "x7"), b1, 10);
    assert_eq!(e.input_cost, 370.0);
    assert!((e.output_value - 381.48).abs() < 0.005);
    assert!((plant_net_profit(&e) - 11.48).abs() < 0.005);
    let idle = plant_economics(&s, node(&s, "x7"), b1, 0);
    assert_eq!(
        (idle.output_value, idle.unit_value, plant_net_profit(&idle)),
        (0.0, 0.0, 0.0)
    );
}

#[test]
fn agent_one_decomposes() {
    let s = s8();
    for sit in evaluate_all(&s, &EvalOptions::default())
        .unwrap()
        .situations
    {
        let b = agent1_breakdown(&s, &sit).unwrap();
        let raw_net = b.raw_storage_income - b.raw_handling_cost;
        let product_net = b.product_storage_income - b.product_handling_cost;
        let direct = agent1_payoff(&s, &sit).unwrap();
        assert!((direct - (raw_net + product_net - sit.flow.total_transport_cost)).abs() < 1e-6);
        assert!((b.storage_income() - 3700.0).abs() < 1e-9);

        // recompute the handling terms from scratch
        let mut raw_handling = 0.0;
        for (k, need) in sit.plant_raw_requirements(&s).iter().enumerate() {
            for (&raw, &units) in need {
                let c = s.commodity(raw);
                let ex = s.sites().extraction[&raw];
                let wh = sit.raw_warehouses[k];
                let leg = s.leg_cost(raw, ex, wh) + s.leg_cost(raw, wh, sit.plants[k]);
                raw_handling += (leg + 0.2 * c.unit_cost) * units;
            }
        }
        assert!((raw_handling - b.raw_handling_cost).abs() < 1e-6);
        let value: f64 = sit.economics(&s).iter().map(|e| e.output_value).sum();
        assert!((0.2 * value - b.product_handling_cost).abs() < 1e-6);
    }
}

#[test]
fn zero_money_gives_zero_payoffs() {
    let mut v = s8_value();
    for c in v["commodities"].as_array_mut().unwrap() {
        c["unit_cost"] = json!(0);
        c["purchase_price"] = json!(0);
        c["storage_fee"] = json!(0);
    }
    for g in v["grid_costs"].as_object_mut().unwrap().values_mut() {
        *g = json!({"horizontal": 0, "vertical": 0});
    }
    v.as_object_mut().unwrap().remove("precomputed_distances");
    v["demand"]["retail_price"] = json!({"b1": 0, "b2": 0, "b3": 0});
    let s = from_value(&v);
    let ev = evaluate_all(&s, &EvalOptions::default()).unwrap();
    for row in ev.matrix.values() {
        assert!(row.iter().all(|&x| x == 0.0), "{row:?}");
    }
}

#[test]
fn store_payoff_is_revenue_minus_purchases() {
    let s = s8();
    let sit = build_situation(
        &s,
        [node(&s, "x7"), node(&s, "x12")],
        &EvalOptions::default(),
    )
    .unwrap();
    let cost = agent3_purchase_cost(&s, &sit);
    assert!((agent3_revenue(&s) - 5410.0).abs() < 1e-9);
    assert!((agent3_payoff(&s, &sit) - (5410.0 - cost)).abs() < 1e-9);
}

#[test]
fn store_revenue_is_situation_independent_and_linear() {
    let s = s8();
    let base = evaluate_all(&s, &EvalOptions::default()).unwrap();
    let revenue = agent3_revenue(&s);
    for sit in &base.situations {
        assert!((agent3_payoff(&s, sit) + agent3_purchase_cost(&s, sit) - revenue).abs() < 1e-9);
    }

    let mut v = s8_value();
    v["demand"]["retail_price"]["b2"] = json!(125.0 + 4.0);
    let bumped = evaluate_all(&from_value(&v), &EvalOptions::default()).unwrap();
    for j in 0..base.matrix.situations() {
        let delta = bumped.matrix.get(2, j) - base.matrix.get(2, j);
        assert!((delta - 4.0 * 17.0).abs() < 1e-9);
        assert_eq!(bumped.matrix.get(0, j), base.matrix.get(0, j));
        assert_eq!(bumped.matrix.get(1, j), base.matrix.get(1, j));
    }
}

#[test]
fn evaluation_is_deterministic() {
    let s = s8();
    let first = evaluate_all(&s, &EvalOptions::default()).unwrap();
    for _ in 0..5 {
        let again = evaluate_all(&s, &EvalOptions::default()).unwrap();
        let bits = |m: &siting::compromise::PayoffMatrix| -> Vec<u64> {
            m.values().iter().flatten().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&first.matrix), bits(&again.matrix));
        assert_eq!(first.situations, again.situations);
    }
}

#[test]
fn unit_selection_mode_runs() {
    let s = s8();
    let opts = EvalOptions {
        warehouse_selection: WarehouseSelection::Unit,
    };
    let ev = evaluate_all(&s, &opts).unwrap();
    assert_eq!(ev.matrix.situations(), 6);
    for sit in &ev.situations {
        assert_ne!(sit.raw_warehouses[0], sit.raw_warehouses[1]);
        assert_ne!(sit.product_warehouses[0], sit.product_warehouses[1]);
    }
}
