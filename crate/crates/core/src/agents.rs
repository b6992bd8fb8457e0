//! Situations (one plant pair with everything it induces) and the payoffs of
//! the three agents: the warehouse and transport operator, the plant owner
//! and the store chain.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::compromise::PayoffMatrix;
use crate::costflow::{
    raw_route_unit_cost, select_product_warehouses, select_raw_warehouses, total_demand,
    FlowAssignment, WarehouseSelection,
};
use crate::error::{Error, Result};
use crate::network::{CommodityId, NodeId};
use crate::production::{
    allocate_output, plant_economics, plant_net_profit, Allocation, PlantEconomics,
};
use crate::scenario::{validate_feasibility, Scenario};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalOptions {
    pub warehouse_selection: WarehouseSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Situation {
    pub plants: [NodeId; 2],
    /// Raw warehouse serving `plants[k]`.
    pub raw_warehouses: [NodeId; 2],
    pub product_warehouses: [NodeId; 2],
    pub allocation: Allocation,
    pub flow: FlowAssignment,
}

impl Situation {
    pub fn label(&self, s: &Scenario) -> String {
        format!("({},{})", s.label(self.plants[0]), s.label(self.plants[1]))
    }

    pub fn plant_raw_requirements(&self, s: &Scenario) -> [BTreeMap<CommodityId, f64>; 2] {
        self.allocation.raw_requirements(s.recipes())
    }

    /// One row per plant and product, plants in pair order.
    pub fn economics(&self, s: &Scenario) -> Vec<PlantEconomics> {
        let mut rows = Vec::new();
        for (k, &plant) in self.plants.iter().enumerate() {
            for product in s.products() {
                rows.push(plant_economics(
                    s,
                    plant,
                    product,
                    self.allocation.quantity(k, product),
                ));
            }
        }
        rows
    }
}

/// Completes a plant pair into a situation: output split, raw warehouse
/// per plant, product warehouse pair and store shipments.
pub fn build_situation(
    s: &Scenario,
    plants: [NodeId; 2],
    options: &EvalOptions,
) -> Result<Situation> {
    if plants[0] == plants[1] {
        return Err(Error::Invalid(format!(
            "plant {} paired with itself",
            s.label(plants[0])
        )));
    }
    let allocation = allocate_output(s, plants, &total_demand(s))?;
    let raw_warehouses = select_raw_warehouses(s, &allocation, options.warehouse_selection)?;
    let (product_warehouses, flow) =
        select_product_warehouses(s, &allocation, options.warehouse_selection)?;
    Ok(Situation {
        plants,
        raw_warehouses,
        product_warehouses,
        allocation,
        flow,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub plants: [NodeId; 2],
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Enumeration {
    pub situations: Vec<Situation>,
    pub skipped: Vec<Skipped>,
}

/// Builds a situation for every unordered pair of plant candidates, in
/// lexicographic node order. Pairs that cannot be completed or that break a
/// limit are reported in `skipped`.
pub fn enumerate_situations(s: &Scenario, options: &EvalOptions) -> Result<Enumeration> {
    let candidates = &s.sites().plants;
    if candidates.len() < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 plant candidates, found {}",
            candidates.len()
        )));
    }
    let pairs: Vec<[NodeId; 2]> = candidates
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| candidates[i + 1..].iter().map(move |&b| [a, b]))
        .collect();
    let outcomes: Vec<Result<std::result::Result<Situation, String>>> = pairs
        .par_iter()
        .map(|&pair| match build_situation(s, pair, options) {
            Ok(sit) => {
                let violations = validate_feasibility(s, &sit);
                if violations.is_empty() {
                    Ok(Ok(sit))
                } else {
                    let reasons: Vec<String> = violations.iter().map(ToString::to_string).collect();
                    Ok(Err(reasons.join("; ")))
                }
            }
            Err(e) if e.is_infeasible() => Ok(Err(e.to_string())),
            Err(e) => Err(e),
        })
        .collect();
    let mut situations = Vec::new();
    let mut skipped = Vec::new();
    for (pair, outcome) in pairs.into_iter().zip(outcomes) {
        match outcome? {
            Ok(sit) => situations.push(sit),
            Err(reason) => skipped.push(Skipped {
                plants: pair,
                label: format!("({},{})", s.label(pair[0]), s.label(pair[1])),
                reason,
            }),
        }
    }
    Ok(Enumeration {
        situations,
        skipped,
    })
}

/// Agent 1's payoff split into independently computed terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agent1Breakdown {
    /// Storage fees collected on raw materials.
    pub raw_storage_income: f64,
    /// Raw transport along both legs plus handling at the handling rate.
    pub raw_handling_cost: f64,
    /// Storage fees collected on finished products.
    pub product_storage_income: f64,
    /// Handling of finished products at the handling rate of their value.
    pub product_handling_cost: f64,
    /// Cost of shipping products from plants to stores.
    pub transport_cost: f64,
}

impl Agent1Breakdown {
    pub fn raw_net(&self) -> f64 {
        self.raw_storage_income - self.raw_handling_cost
    }

    pub fn product_storage_net(&self) -> f64 {
        self.product_storage_income - self.product_handling_cost
    }

    pub fn storage_income(&self) -> f64 {
        self.raw_storage_income + self.product_storage_income
    }

    pub fn total(&self) -> f64 {
        self.raw_net() + self.product_storage_net() - self.transport_cost
    }
}

pub fn agent1_breakdown(s: &Scenario, sit: &Situation) -> Result<Agent1Breakdown> {
    let rate = s.handling_rate();
    let needs = sit.plant_raw_requirements(s);
    let mut raw_storage_income = 0.0;
    let mut raw_handling_cost = 0.0;
    for (k, &plant) in sit.plants.iter().enumerate() {
        for (&raw, &units) in &needs[k] {
            if units == 0.0 {
                continue;
            }
            let c = s.commodity(raw);
            let route = raw_route_unit_cost(s, raw, sit.raw_warehouses[k], plant)?;
            raw_storage_income += c.storage_fee * units;
            raw_handling_cost += (route + rate * c.unit_cost) * units;
        }
    }
    let mut product_storage_income = 0.0;
    let mut product_handling_cost = 0.0;
    for econ in sit.economics(s) {
        product_storage_income += s.commodity(econ.product).storage_fee * econ.quantity as f64;
        product_handling_cost += rate * econ.output_value;
    }
    Ok(Agent1Breakdown {
        raw_storage_income,
        raw_handling_cost,
        product_storage_income,
        product_handling_cost,
        transport_cost: sit.flow.total_transport_cost,
    })
}

pub fn agent1_payoff(s: &Scenario, sit: &Situation) -> Result<f64> {
    Ok(agent1_breakdown(s, sit)?.total())
}

pub fn agent2_payoff(s: &Scenario, sit: &Situation) -> f64 {
    sit.economics(s).iter().map(plant_net_profit).sum()
}

/// Retail value of all store orders; the same for every situation.
pub fn agent3_revenue(s: &Scenario) -> f64 {
    let prices = &s.demand().retail_price;
    total_demand(s)
        .iter()
        .map(|(p, &q)| prices.get(p).copied().unwrap_or(0.0) * q as f64)
        .sum()
}

/// What the stores pay plants and product warehouses for their goods.
pub fn agent3_purchase_cost(s: &Scenario, sit: &Situation) -> f64 {
    sit.economics(s)
        .iter()
        .map(|e| (e.unit_value + s.commodity(e.product).storage_fee) * e.quantity as f64)
        .sum()
}

pub fn agent3_payoff(s: &Scenario, sit: &Situation) -> f64 {
    agent3_revenue(s) - agent3_purchase_cost(s, sit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffVector {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl PayoffVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p1, self.p2, self.p3]
    }
}

pub fn payoffs(s: &Scenario, sit: &Situation) -> Result<PayoffVector> {
    Ok(PayoffVector {
        p1: agent1_payoff(s, sit)?,
        p2: agent2_payoff(s, sit),
        p3: agent3_payoff(s, sit),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub matrix: PayoffMatrix,
    pub situations: Vec<Situation>,
    pub payoffs: Vec<PayoffVector>,
    pub skipped: Vec<Skipped>,
}

/// Enumerates situations and builds the agents-by-situations payoff matrix.
pub fn evaluate_all(s: &Scenario, options: &EvalOptions) -> Result<Evaluation> {
    let Enumeration {
        situations,
        skipped,
    } = enumerate_situations(s, options)?;
    if situations.is_empty() {
        let why: Vec<String> = skipped
            .iter()
            .map(|k| format!("{}: {}", k.label, k.reason))
            .collect();
        return Err(Error::Infeasible(format!(
            "no feasible situation ({})",
            why.join("; ")
        )));
    }
    let payoffs = situations
        .par_iter()
        .map(|sit| payoffs(s, sit))
        .collect::<Result<Vec<_>>>()?;
    let values = (0..3)
        .map(|a| payoffs.iter().map(|p| p.as_array()[a]).collect())
        .collect();
    let labels = situations.iter().map(|sit| sit.label(s)).collect();
    Ok(Evaluation {
        matrix: PayoffMatrix::new(values, labels)?,
        situations,
        payoffs,
        skipped,
    })
}
