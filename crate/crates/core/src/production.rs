//! Cobb-Douglas output valuation and the split of demand between two plants.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{CommodityId, NodeId};
use crate::scenario::{Recipe, Scenario};

/// `J * K^a * L^b`.
pub fn cobb_douglas(j: f64, k: f64, l: f64, a: f64, b: f64) -> f64 {
    j * k.powf(a) * l.powf(b)
}

/// Many-input form: `J * prod(spend_i ^ exponent_i)`.
pub fn cobb_douglas_inputs(j: f64, inputs: &[(f64, f64)]) -> f64 {
    inputs
        .iter()
        .fold(j, |acc, &(spend, exponent)| acc * spend.powf(exponent))
}

/// Forward difference `(Q(L0 + dL) - Q(L0)) / dL`.
///
/// # Panics
///
/// If `dl` is not strictly positive.
pub fn marginal_product(q: impl Fn(f64) -> f64, l0: f64, dl: f64) -> f64 {
    assert!(dl > 0.0, "increment must be positive, got {dl}");
    (q(l0 + dl) - q(l0)) / dl
}

/// Fills the first plant up to its capacity and gives the rest to the second.
pub fn split_output(demand: u64, first_capacity: u64, second_capacity: u64) -> Result<(u64, u64)> {
    let first = demand.min(first_capacity);
    let second = demand - first;
    if second > second_capacity {
        return Err(Error::Infeasible(format!(
            "demand {demand} exceeds combined capacity {}",
            first_capacity.saturating_add(second_capacity)
        )));
    }
    Ok((first, second))
}

/// Units of every product made at each plant of a pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub plants: [NodeId; 2],
    pub units: [BTreeMap<CommodityId, u64>; 2],
}

impl Allocation {
    pub fn quantity(&self, slot: usize, product: CommodityId) -> u64 {
        self.units[slot].get(&product).copied().unwrap_or(0)
    }

    /// Raw units each plant consumes for its whole output.
    pub fn raw_requirements(
        &self,
        recipes: &BTreeMap<CommodityId, Recipe>,
    ) -> [BTreeMap<CommodityId, f64>; 2] {
        let per_plant = |units: &BTreeMap<CommodityId, u64>| {
            let mut need: BTreeMap<CommodityId, f64> = BTreeMap::new();
            for (product, &q) in units {
                for (&raw, &v) in &recipes[product].raw_per_unit {
                    *need.entry(raw).or_default() += v * q as f64;
                }
            }
            need
        };
        [per_plant(&self.units[0]), per_plant(&self.units[1])]
    }
}

/// Economics of one product line at one plant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantEconomics {
    pub plant: NodeId,
    pub product: CommodityId,
    pub factor: f64,
    pub quantity: u64,
    /// Raw units consumed for the whole quantity.
    pub raw_units: BTreeMap<CommodityId, f64>,
    /// Money spent on each raw (purchase price times units).
    pub raw_spend: BTreeMap<CommodityId, f64>,
    pub input_cost: f64,
    /// Production function evaluated on the total spend.
    pub output_value: f64,
    /// `output_value / quantity`, zero for an idle line.
    pub unit_value: f64,
}

pub fn plant_economics(
    s: &Scenario,
    plant: NodeId,
    product: CommodityId,
    quantity: u64,
) -> PlantEconomics {
    let factor = s.production().factor(plant, product);
    let exponents = &s.production().exponents[&product];
    let mut raw_units = BTreeMap::new();
    let mut raw_spend = BTreeMap::new();
    let mut inputs = Vec::new();
    for (&raw, &per_unit) in &s.recipes()[&product].raw_per_unit {
        if per_unit <= 0.0 {
            continue;
        }
        let units = per_unit * quantity as f64;
        let spend = units * s.commodity(raw).purchase_price;
        raw_units.insert(raw, units);
        raw_spend.insert(raw, spend);
        inputs.push((spend, exponents[&raw]));
    }
    let input_cost = raw_spend.values().sum();
    let (output_value, unit_value) = if quantity == 0 {
        (0.0, 0.0)
    } else {
        let q = cobb_douglas_inputs(factor, &inputs);
        (q, q / quantity as f64)
    };
    PlantEconomics {
        plant,
        product,
        factor,
        quantity,
        raw_units,
        raw_spend,
        input_cost,
        output_value,
        unit_value,
    }
}

/// Output value minus what the plant paid for its raws.
pub fn plant_net_profit(econ: &PlantEconomics) -> f64 {
    econ.output_value - econ.input_cost
}

/// Splits total demand between two plants, product by product.
///
/// The plant filled first is taken from the scenario's explicit split table
/// when it has an entry for this pair and product. Otherwise both orders are
/// tried and the one with the larger combined plant profit wins; on a tie
/// the lower-indexed plant goes first.
pub fn allocate_output(
    s: &Scenario,
    plants: [NodeId; 2],
    totals: &BTreeMap<CommodityId, u64>,
) -> Result<Allocation> {
    let mut units = [BTreeMap::new(), BTreeMap::new()];
    let rule = s.production().split_rule(plants[0], plants[1]);
    for (&product, &demand) in totals {
        let cap = |slot: usize| s.production().capacity(plants[slot], product);
        let try_order = |first: usize| -> Option<[u64; 2]> {
            let second = 1 - first;
            let (a, b) = split_output(demand, cap(first), cap(second)).ok()?;
            let mut q = [0; 2];
            q[first] = a;
            q[second] = b;
            Some(q)
        };
        let forced = rule
            .and_then(|r| r.first.get(&product))
            .map(|&node| usize::from(node == plants[1]));
        let q = match forced {
            Some(first) => try_order(first),
            None => {
                let profit = |q: [u64; 2]| -> f64 {
                    (0..2)
                        .map(|k| plant_net_profit(&plant_economics(s, plants[k], product, q[k])))
                        .sum()
                };
                match (try_order(0), try_order(1)) {
                    (Some(a), Some(b)) => Some(if profit(b) > profit(a) + 1e-9 { b } else { a }),
                    (a, b) => a.or(b),
                }
            }
        }
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "plants {} and {} cannot produce {demand} units of {}",
                s.label(plants[0]),
                s.label(plants[1]),
                s.commodity_name(product)
            ))
        })?;
        units[0].insert(product, q[0]);
        units[1].insert(product, q[1]);
    }
    Ok(Allocation { plants, units })
}
