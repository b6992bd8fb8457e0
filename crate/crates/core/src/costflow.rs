//! Demand aggregation, the raw and product cost chains, warehouse choice and
//! the cheapest-first shipment of finished goods to stores.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CommodityId, NodeId};
use crate::production::Allocation;
use crate::scenario::{Recipe, Scenario};

/// How candidate warehouses are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarehouseSelection {
    /// Unit route costs weighted by the units that travel them.
    #[default]
    Weighted,
    /// Plain sum of unit route costs.
    Unit,
}

impl FromStr for WarehouseSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted" => Ok(Self::Weighted),
            "unit" => Ok(Self::Unit),
            other => Err(Error::Invalid(format!(
                "unknown warehouse selection `{other}`"
            ))),
        }
    }
}

impl fmt::Display for WarehouseSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Weighted => "weighted",
            Self::Unit => "unit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandSummary {
    pub total_per_product: BTreeMap<CommodityId, u64>,
    pub total_raw_required: BTreeMap<CommodityId, f64>,
}

/// Sum of all store orders, with an entry for every product.
pub fn total_demand(s: &Scenario) -> BTreeMap<CommodityId, u64> {
    let mut total: BTreeMap<CommodityId, u64> = s.products().into_iter().map(|p| (p, 0)).collect();
    for order in &s.demand().orders {
        for (&p, &q) in order {
            *total.entry(p).or_default() += q;
        }
    }
    total
}

/// Recipe-weighted raw units needed to make `total`.
pub fn raw_requirements(
    total: &BTreeMap<CommodityId, u64>,
    recipes: &BTreeMap<CommodityId, Recipe>,
) -> Result<BTreeMap<CommodityId, f64>> {
    let mut need: BTreeMap<CommodityId, f64> = BTreeMap::new();
    for (&product, &q) in total {
        let recipe = recipes
            .get(&product)
            .ok_or_else(|| Error::MissingRecipe(format!("#{product}")))?;
        for (&raw, &v) in &recipe.raw_per_unit {
            *need.entry(raw).or_default() += v * q as f64;
        }
    }
    Ok(need)
}

pub fn demand_summary(s: &Scenario) -> Result<DemandSummary> {
    let total_per_product = total_demand(s);
    let total_raw_required = raw_requirements(&total_per_product, s.recipes())?;
    Ok(DemandSummary {
        total_per_product,
        total_raw_required,
    })
}

/// Transport cost of one raw unit from its extraction point through
/// `warehouse` to `plant`.
pub fn raw_route_unit_cost(
    s: &Scenario,
    raw: CommodityId,
    warehouse: NodeId,
    plant: NodeId,
) -> Result<f64> {
    let source = s.sites().extraction[&raw];
    Ok(s.require_leg(raw, source, warehouse)? + s.require_leg(raw, warehouse, plant)?)
}

/// Delivered cost of a raw bundle at `plant`: extraction, both transport
/// legs and the warehouse fee, per unit, summed over the bundle.
pub fn raw_bundle_cost(
    s: &Scenario,
    plant: NodeId,
    bundle: &BTreeMap<CommodityId, f64>,
    warehouse: NodeId,
) -> Result<f64> {
    let mut total = 0.0;
    for (&raw, &units) in bundle {
        if units == 0.0 {
            continue;
        }
        let c = s.commodity(raw);
        let route = raw_route_unit_cost(s, raw, warehouse, plant)?;
        total += (c.unit_cost + route + c.storage_fee) * units;
    }
    Ok(total)
}

/// Plant price plus the product warehouse fee; transport to the store is
/// accounted for in the flow assignment.
pub fn product_unit_total_cost(plant_unit_price: f64, storage_fee: f64) -> f64 {
    plant_unit_price + storage_fee
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shipment {
    pub product: CommodityId,
    pub store: NodeId,
    pub plant: NodeId,
    pub warehouse: NodeId,
    pub units: u64,
    pub unit_cost: f64,
}

impl Shipment {
    pub fn cost(&self) -> f64 {
        self.units as f64 * self.unit_cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowAssignment {
    pub shipments: Vec<Shipment>,
    pub total_transport_cost: f64,
}

impl FlowAssignment {
    pub fn shipped(&self, product: CommodityId, plant: NodeId, store: NodeId) -> u64 {
        self.shipments
            .iter()
            .filter(|s| s.product == product && s.plant == plant && s.store == store)
            .map(|s| s.units)
            .sum()
    }
}

/// Cheapest route from `plant` to `store` through one of `warehouses`;
/// the first warehouse wins ties.
fn best_route(
    s: &Scenario,
    product: CommodityId,
    plant: NodeId,
    store: NodeId,
    warehouses: &[NodeId],
) -> Option<(f64, NodeId)> {
    let mut best: Option<(f64, NodeId)> = None;
    for &w in warehouses {
        let c = s.leg_cost(product, plant, w) + s.leg_cost(product, w, store);
        if c.is_finite() && best.is_none_or(|(b, _)| c < b) {
            best = Some((c, w));
        }
    }
    best
}

/// Ships every store's demand from the plants' outputs, cheapest
/// (plant, store) route first.
///
/// Equal unit costs are served lowest store index first, then lowest plant
/// index. The result is generally not the transportation optimum.
pub fn greedy_flow(
    s: &Scenario,
    allocation: &Allocation,
    warehouses: [NodeId; 2],
) -> Result<FlowAssignment> {
    let stores = &s.sites().stores;
    let mut shipments = Vec::new();
    for product in s.products() {
        let mut cells = Vec::new();
        for (si, &store) in stores.iter().enumerate() {
            for (k, &plant) in allocation.plants.iter().enumerate() {
                if let Some((cost, wh)) = best_route(s, product, plant, store, &warehouses) {
                    cells.push((cost, si, k, wh));
                }
            }
        }
        cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut left = [
            allocation.quantity(0, product),
            allocation.quantity(1, product),
        ];
        let mut need: Vec<u64> = s
            .demand()
            .orders
            .iter()
            .map(|o| o.get(&product).copied().unwrap_or(0))
            .collect();
        for (cost, si, k, wh) in cells {
            let units = left[k].min(need[si]);
            if units == 0 {
                continue;
            }
            left[k] -= units;
            need[si] -= units;
            shipments.push(Shipment {
                product,
                store: stores[si],
                plant: allocation.plants[k],
                warehouse: wh,
                units,
                unit_cost: cost,
            });
        }
        if let Some(si) = need.iter().position(|&n| n > 0) {
            return Err(Error::Infeasible(format!(
                "store {} is short {} units of {}",
                s.label(stores[si]),
                need[si],
                s.commodity_name(product)
            )));
        }
    }
    let total_transport_cost = shipments.iter().map(Shipment::cost).sum();
    Ok(FlowAssignment {
        shipments,
        total_transport_cost,
    })
}

/// Assigns a distinct raw warehouse to each plant, minimizing total raw
/// transport cost. Assignments are scanned in lexicographic order of
/// candidate position and the first minimum is kept.
pub fn select_raw_warehouses(
    s: &Scenario,
    allocation: &Allocation,
    mode: WarehouseSelection,
) -> Result<[NodeId; 2]> {
    let candidates = &s.sites().raw_warehouses;
    if candidates.len() < 2 {
        return Err(Error::Infeasible(format!(
            "{} raw warehouse candidate(s) for 2 plants",
            candidates.len()
        )));
    }
    let needs = allocation.raw_requirements(s.recipes());
    let raws = s.raws();
    let score = |slot: usize, wh: NodeId| -> Option<f64> {
        let plant = allocation.plants[slot];
        let mut total = 0.0;
        for &raw in &raws {
            let units = needs[slot].get(&raw).copied().unwrap_or(0.0);
            let weight = match mode {
                WarehouseSelection::Weighted => units,
                WarehouseSelection::Unit => 1.0,
            };
            match raw_route_unit_cost(s, raw, wh, plant) {
                Ok(c) => total += c * weight,
                Err(_) if units == 0.0 => {}
                Err(_) => return None,
            }
        }
        Some(total)
    };
    let mut best: Option<(f64, [NodeId; 2])> = None;
    for &a in candidates {
        let Some(sa) = score(0, a) else { continue };
        for &b in candidates {
            if a == b {
                continue;
            }
            let Some(sb) = score(1, b) else { continue };
            if best.is_none_or(|(v, _)| sa + sb < v) {
                best = Some((sa + sb, [a, b]));
            }
        }
    }
    best.map(|(_, pair)| pair).ok_or_else(|| {
        Error::Infeasible(format!(
            "no raw warehouse assignment reaches plants {} and {}",
            s.label(allocation.plants[0]),
            s.label(allocation.plants[1])
        ))
    })
}

/// Picks the product warehouse pair whose shipment plan is cheapest.
///
/// In weighted mode the score is the greedy transport cost; in unit mode it
/// is the sum of best unit route costs over every product, plant and store.
/// Pairs are scanned in lexicographic node order and the first minimum wins.
pub fn select_product_warehouses(
    s: &Scenario,
    allocation: &Allocation,
    mode: WarehouseSelection,
) -> Result<([NodeId; 2], FlowAssignment)> {
    let candidates = &s.sites().product_warehouses;
    if candidates.len() < 2 {
        return Err(Error::Infeasible(format!(
            "{} product warehouse candidate(s), need 2",
            candidates.len()
        )));
    }
    let mut best: Option<(f64, [NodeId; 2], FlowAssignment)> = None;
    let mut last_err = None;
    for (i, &a) in candidates.iter().enumerate() {
        for &b in &candidates[i + 1..] {
            let pair = [a, b];
            let flow = match greedy_flow(s, allocation, pair) {
                Ok(f) => f,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let score = match mode {
                WarehouseSelection::Weighted => flow.total_transport_cost,
                WarehouseSelection::Unit => unit_route_score(s, allocation, &pair),
            };
            if best.as_ref().is_none_or(|(v, _, _)| score < *v) {
                best = Some((score, pair, flow));
            }
        }
    }
    match best {
        Some((_, pair, flow)) => Ok((pair, flow)),
        None => Err(last_err.unwrap_or_else(|| Error::Infeasible("no warehouse pair".into()))),
    }
}

fn unit_route_score(s: &Scenario, allocation: &Allocation, pair: &[NodeId]) -> f64 {
    let mut total = 0.0;
    for product in s.products() {
        for &plant in &allocation.plants {
            for &store in &s.sites().stores {
                if let Some((c, _)) = best_route(s, product, plant, store, pair) {
                    total += c;
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_requirements_weight_by_recipe() {
        let mut recipes = BTreeMap::new();
        recipes.insert(
            5,
            Recipe {
                product: 5,
                raw_per_unit: [(0, 2.0), (1, 3.0)].into_iter().collect(),
            },
        );
        let total = [(5, 4)].into_iter().collect();
        let need = raw_requirements(&total, &recipes).unwrap();
        assert_eq!(need[&0], 8.0);
        assert_eq!(need[&1], 12.0);

        let zero = [(5, 0)].into_iter().collect();
        let need = raw_requirements(&zero, &recipes).unwrap();
        assert!(need.values().all(|&v| v == 0.0));

        let unknown = [(9, 1)].into_iter().collect();
        assert!(matches!(
            raw_requirements(&unknown, &recipes),
            Err(Error::MissingRecipe(_))
        ));
    }

    #[test]
    fn product_unit_cost_adds_the_fee() {
        assert!((product_unit_total_cost(38.15, 19.0) - 57.15).abs() < 1e-12);
        assert!((product_unit_total_cost(61.70, 33.0) - 94.70).abs() < 1e-12);
        assert_eq!(product_unit_total_cost(0.0, 0.0), 0.0);
    }

    #[test]
    fn selection_mode_parses() {
        assert_eq!(
            "unit".parse::<WarehouseSelection>().unwrap(),
            WarehouseSelection::Unit
        );
        assert_eq!(WarehouseSelection::default().to_string(), "weighted");
        assert!("cheap".parse::<WarehouseSelection>().is_err());
    }
}
