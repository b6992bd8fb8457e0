//! Problem instances: commodities, candidate sites, demand, production
//! parameters and global limits, plus the JSON file format they load from.
//!
//! A [`Scenario`] can only be obtained through validation, so every node and
//! commodity id it hands out is in range.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::Situation;
use crate::error::{Error, Result};
use crate::network::{
    build_network, euclidean_distance, CommodityId, DistanceMatrix, Edge, GridCost, Network, Node,
    NodeId,
};

/// Capacity per plant and product when the scenario does not set one.
pub const DEFAULT_PLANT_CAPACITY: u64 = 10;

/// Share of a stored good's value the warehouse operator spends on handling it.
pub const DEFAULT_HANDLING_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommodityKind {
    Raw,
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub name: String,
    pub kind: CommodityKind,
    /// Extraction cost per unit for raws.
    pub unit_cost: f64,
    /// Price the plant operator pays per raw unit.
    pub purchase_price: f64,
    /// Warehouse fee per stored unit.
    pub storage_fee: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub product: CommodityId,
    pub raw_per_unit: BTreeMap<CommodityId, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sites {
    pub extraction: BTreeMap<CommodityId, NodeId>,
    pub raw_warehouses: Vec<NodeId>,
    pub plants: Vec<NodeId>,
    pub product_warehouses: Vec<NodeId>,
    pub stores: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    /// One entry per store, aligned with `Sites::stores`.
    pub orders: Vec<BTreeMap<CommodityId, u64>>,
    pub retail_price: BTreeMap<CommodityId, f64>,
}

/// Explicit choice of which plant of a pair is filled to capacity first.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRule {
    pub plants: [NodeId; 2],
    pub first: BTreeMap<CommodityId, NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductionParams {
    pub factors: BTreeMap<(NodeId, CommodityId), f64>,
    /// Per product, the output elasticity of each raw it consumes.
    pub exponents: BTreeMap<CommodityId, BTreeMap<CommodityId, f64>>,
    pub capacity: BTreeMap<(NodeId, CommodityId), u64>,
    pub default_capacity: u64,
    pub splits: Vec<SplitRule>,
}

impl ProductionParams {
    pub fn capacity(&self, plant: NodeId, product: CommodityId) -> u64 {
        self.capacity
            .get(&(plant, product))
            .copied()
            .unwrap_or(self.default_capacity)
    }

    pub fn factor(&self, plant: NodeId, product: CommodityId) -> f64 {
        self.factors[&(plant, product)]
    }

    pub fn split_rule(&self, a: NodeId, b: NodeId) -> Option<&SplitRule> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.splits.iter().find(|r| r.plants == key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceBound {
    pub a: NodeId,
    pub b: NodeId,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GlobalLimits {
    pub total_raw: Option<f64>,
    pub total_product: Option<f64>,
    pub max_distances: Vec<DistanceBound>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSelection {
    pub plants: Vec<NodeId>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: Option<String>,
    network: Network,
    commodities: Vec<Commodity>,
    recipes: BTreeMap<CommodityId, Recipe>,
    sites: Sites,
    demand: Demand,
    production: ProductionParams,
    limits: GlobalLimits,
    handling_rate: f64,
    overrides: BTreeMap<(CommodityId, NodeId, NodeId), f64>,
    reference: Option<ReferenceSelection>,
    distances: Vec<DistanceMatrix>,
}

impl Scenario {
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn commodity(&self, id: CommodityId) -> &Commodity {
        &self.commodities[id]
    }

    pub fn recipes(&self) -> &BTreeMap<CommodityId, Recipe> {
        &self.recipes
    }

    pub fn sites(&self) -> &Sites {
        &self.sites
    }

    pub fn demand(&self) -> &Demand {
        &self.demand
    }

    pub fn production(&self) -> &ProductionParams {
        &self.production
    }

    pub fn limits(&self) -> &GlobalLimits {
        &self.limits
    }

    pub fn handling_rate(&self) -> f64 {
        self.handling_rate
    }

    pub fn reference_selection(&self) -> Option<&ReferenceSelection> {
        self.reference.as_ref()
    }

    pub fn raws(&self) -> Vec<CommodityId> {
        self.ids_of(CommodityKind::Raw)
    }

    pub fn products(&self) -> Vec<CommodityId> {
        self.ids_of(CommodityKind::Product)
    }

    fn ids_of(&self, kind: CommodityKind) -> Vec<CommodityId> {
        self.commodities
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.network.node(node).label
    }

    pub fn commodity_name(&self, id: CommodityId) -> &str {
        &self.commodities[id].name
    }

    pub fn node_id(&self, label: &str) -> Result<NodeId> {
        self.network
            .nodes()
            .iter()
            .position(|n| n.label == label)
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    pub fn commodity_id(&self, name: &str) -> Result<CommodityId> {
        self.commodities
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownCommodity(name.to_string()))
    }

    /// Floyd output for a commodity, before overrides.
    pub fn shortest_paths(&self, commodity: CommodityId) -> &DistanceMatrix {
        &self.distances[commodity]
    }

    /// Effective cost of moving one unit from `from` to `to`: a precomputed
    /// override when the scenario has one, the Floyd distance otherwise.
    pub fn leg_cost(&self, commodity: CommodityId, from: NodeId, to: NodeId) -> f64 {
        self.overrides
            .get(&(commodity, from, to))
            .copied()
            .unwrap_or_else(|| self.distances[commodity].get(from, to))
    }

    /// Like [`Scenario::leg_cost`] but an unreachable pair is an error.
    pub fn require_leg(&self, commodity: CommodityId, from: NodeId, to: NodeId) -> Result<f64> {
        let cost = self.leg_cost(commodity, from, to);
        if cost.is_finite() {
            Ok(cost)
        } else {
            Err(Error::Unreachable {
                commodity: self.commodity_name(commodity).to_string(),
                from: self.label(from).to_string(),
                to: self.label(to).to_string(),
            })
        }
    }

    /// Effective |N|×|N| cost matrix for a commodity.
    pub fn effective_distances(&self, commodity: CommodityId) -> Vec<Vec<f64>> {
        let n = self.network.node_count();
        (0..n)
            .map(|i| (0..n).map(|j| self.leg_cost(commodity, i, j)).collect())
            .collect()
    }

    pub fn overrides(&self) -> &BTreeMap<(CommodityId, NodeId, NodeId), f64> {
        &self.overrides
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grid_costs: BTreeMap<String, GridCost>,
    #[serde(default)]
    pub edges: Vec<EdgeRecord>,
    pub commodities: Vec<CommodityRecord>,
    pub recipes: BTreeMap<String, BTreeMap<String, f64>>,
    pub sites: SitesRecord,
    pub demand: DemandRecord,
    pub production: ProductionRecord,
    #[serde(default)]
    pub limits: LimitsRecord,
    #[serde(default = "default_handling_rate")]
    pub handling_rate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub precomputed_distances: Vec<DistanceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_selection: Option<ReferenceRecord>,
}

fn default_handling_rate() -> f64 {
    DEFAULT_HANDLING_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    /// Emit the reverse arc as well.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bidirectional: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub costs: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capacities: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommodityRecord {
    pub id: String,
    pub kind: CommodityKind,
    #[serde(default)]
    pub unit_cost: f64,
    #[serde(default)]
    pub purchase_price: f64,
    #[serde(default)]
    pub storage_fee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SitesRecord {
    pub extraction: BTreeMap<String, String>,
    pub raw_warehouses: Vec<String>,
    pub plants: Vec<String>,
    pub product_warehouses: Vec<String>,
    pub stores: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandRecord {
    pub orders: BTreeMap<String, BTreeMap<String, u64>>,
    pub retail_price: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductionRecord {
    pub factors: BTreeMap<String, BTreeMap<String, f64>>,
    pub exponents: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_capacity: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capacity: BTreeMap<String, BTreeMap<String, u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub splits: Vec<SplitRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecord {
    pub plants: [String; 2],
    pub first: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_raw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_product: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub max_distances: Vec<DistanceBoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceBoundRecord {
    pub a: String,
    pub b: String,
    pub max: f64,
}

/// A block of precomputed leg costs: `costs[i][j]` is the cost of moving one
/// unit of `commodity` from `from[i]` to `to[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceBlock {
    pub commodity: String,
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub costs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRecord {
    pub plants: Vec<String>,
    #[serde(default)]
    pub note: String,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_scenario(&text)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file = parse_scenario_file(text)?;
    Scenario::from_file(&file)
}

pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        Error::Parse(format!("at `{path}`: {inner}"))
    })
}

struct Resolver<'a> {
    nodes: BTreeMap<&'a str, NodeId>,
    commodities: BTreeMap<&'a str, CommodityId>,
}

impl Resolver<'_> {
    fn node(&self, label: &str) -> Result<NodeId> {
        self.nodes
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    fn commodity(&self, name: &str) -> Result<CommodityId> {
        self.commodities
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownCommodity(name.to_string()))
    }

    fn nodes_sorted(&self, labels: &[String]) -> Result<Vec<NodeId>> {
        let mut ids = labels
            .iter()
            .map(|l| self.node(l))
            .collect::<Result<Vec<_>>>()?;
        ids.sort_unstable();
        Ok(ids)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn check_money(what: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "{what} must be finite and >= 0, got {value}"
        )))
    }
}

impl Scenario {
    /// Resolves string ids to dense indices, enforces every invariant and
    /// computes the per-commodity shortest-path matrices.
    pub fn from_file(file: &ScenarioFile) -> Result<Scenario> {
        let mut node_index = BTreeMap::new();
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for (i, rec) in file.nodes.iter().enumerate() {
            if node_index.insert(rec.id.as_str(), i).is_some() {
                return Err(invalid(format!("duplicate node id {}", rec.id)));
            }
            nodes.push(Node::new(i, rec.id.clone(), rec.x, rec.y));
        }
        let mut commodity_index = BTreeMap::new();
        let mut commodities = Vec::with_capacity(file.commodities.len());
        for (i, rec) in file.commodities.iter().enumerate() {
            if commodity_index.insert(rec.id.as_str(), i).is_some() {
                return Err(invalid(format!("duplicate commodity id {}", rec.id)));
            }
            for (what, v) in [
                ("unit_cost", rec.unit_cost),
                ("purchase_price", rec.purchase_price),
                ("storage_fee", rec.storage_fee),
            ] {
                check_money(&format!("commodity {}: {what}", rec.id), v)?;
            }
            commodities.push(Commodity {
                name: rec.id.clone(),
                kind: rec.kind,
                unit_cost: rec.unit_cost,
                purchase_price: rec.purchase_price,
                storage_fee: rec.storage_fee,
            });
        }
        let r = Resolver {
            nodes: node_index,
            commodities: commodity_index,
        };
        let kind_of = |c: CommodityId| commodities[c].kind;

        // network
        let mut grid = BTreeMap::new();
        for (name, cost) in &file.grid_costs {
            check_money(&format!("grid cost for {name}"), cost.horizontal)?;
            check_money(&format!("grid cost for {name}"), cost.vertical)?;
            grid.insert(r.commodity(name)?, *cost);
        }
        let mut edges = Vec::new();
        for rec in &file.edges {
            let mut edge = Edge::new(r.node(&rec.from)?, r.node(&rec.to)?);
            for (name, &cost) in &rec.costs {
                edge.costs.insert(r.commodity(name)?, cost);
            }
            for (name, &cap) in &rec.capacities {
                edge.capacities.insert(r.commodity(name)?, cap);
            }
            if rec.bidirectional {
                let back = edge.reversed();
                edges.push(edge);
                edges.push(back);
            } else {
                edges.push(edge);
            }
        }
        let network = build_network(nodes, edges, (!grid.is_empty()).then_some(&grid))?;

        // recipes
        let mut recipes = BTreeMap::new();
        for (product, raws) in &file.recipes {
            let p = r.commodity(product)?;
            if kind_of(p) != CommodityKind::Product {
                return Err(invalid(format!(
                    "recipe for {product}, which is not a product"
                )));
            }
            let mut raw_per_unit = BTreeMap::new();
            for (raw, &units) in raws {
                let id = r.commodity(raw)?;
                if kind_of(id) != CommodityKind::Raw {
                    return Err(invalid(format!("recipe for {product} uses non-raw {raw}")));
                }
                if !(units.is_finite() && units >= 0.0) {
                    return Err(invalid(format!(
                        "recipe for {product}: {raw} units must be >= 0, got {units}"
                    )));
                }
                raw_per_unit.insert(id, units);
            }
            if !raw_per_unit.values().any(|&u| u > 0.0) {
                return Err(invalid(format!(
                    "recipe for {product} has no positive entry"
                )));
            }
            recipes.insert(
                p,
                Recipe {
                    product: p,
                    raw_per_unit,
                },
            );
        }
        for (id, c) in commodities.iter().enumerate() {
            if c.kind == CommodityKind::Product && !recipes.contains_key(&id) {
                return Err(Error::MissingRecipe(c.name.clone()));
            }
        }

        // sites
        let mut extraction = BTreeMap::new();
        for (raw, node) in &file.sites.extraction {
            let id = r.commodity(raw)?;
            if kind_of(id) != CommodityKind::Raw {
                return Err(invalid(format!("extraction site given for non-raw {raw}")));
            }
            extraction.insert(id, r.node(node)?);
        }
        for (id, c) in commodities.iter().enumerate() {
            if c.kind == CommodityKind::Raw && !extraction.contains_key(&id) {
                return Err(invalid(format!("raw {} has no extraction site", c.name)));
            }
        }
        let sites = Sites {
            extraction,
            raw_warehouses: r.nodes_sorted(&file.sites.raw_warehouses)?,
            plants: r.nodes_sorted(&file.sites.plants)?,
            product_warehouses: r.nodes_sorted(&file.sites.product_warehouses)?,
            stores: r.nodes_sorted(&file.sites.stores)?,
        };
        let lists = [
            ("raw_warehouses", &sites.raw_warehouses),
            ("plants", &sites.plants),
            ("product_warehouses", &sites.product_warehouses),
            ("stores", &sites.stores),
        ];
        let mut seen: BTreeMap<NodeId, &str> = BTreeMap::new();
        // several raws may share one extraction node
        for &node in sites.extraction.values() {
            seen.insert(node, "extraction");
        }
        for (what, list) in lists {
            if list.is_empty() {
                return Err(invalid(format!("sites.{what} must not be empty")));
            }
            for &node in list.iter() {
                if let Some(prev) = seen.insert(node, what) {
                    return Err(invalid(format!(
                        "node {} listed both as {prev} and {what}",
                        network.node(node).label
                    )));
                }
            }
        }

        // demand
        let mut orders = vec![BTreeMap::new(); sites.stores.len()];
        for (store, units) in &file.demand.orders {
            let node = r.node(store)?;
            let slot = sites
                .stores
                .iter()
                .position(|&s| s == node)
                .ok_or_else(|| {
                    invalid(format!("demand given for {store}, which is not a store"))
                })?;
            for (product, &q) in units {
                let p = r.commodity(product)?;
                if kind_of(p) != CommodityKind::Product {
                    return Err(invalid(format!(
                        "store {store} orders non-product {product}"
                    )));
                }
                orders[slot].insert(p, q);
            }
        }
        let mut retail_price = BTreeMap::new();
        for (product, &price) in &file.demand.retail_price {
            let p = r.commodity(product)?;
            check_money(&format!("retail price of {product}"), price)?;
            retail_price.insert(p, price);
        }
        let demand = Demand {
            orders,
            retail_price,
        };

        // production
        let mut factors = BTreeMap::new();
        for (plant, per_product) in &file.production.factors {
            let node = r.node(plant)?;
            for (product, &j) in per_product {
                if !(j.is_finite() && j > 0.0) {
                    return Err(invalid(format!(
                        "production factor at {plant} for {product} must be > 0, got {j}"
                    )));
                }
                factors.insert((node, r.commodity(product)?), j);
            }
        }
        let mut exponents = BTreeMap::new();
        for (product, per_raw) in &file.production.exponents {
            let p = r.commodity(product)?;
            let mut map = BTreeMap::new();
            for (raw, &e) in per_raw {
                if !(e.is_finite() && e > 0.0) {
                    return Err(invalid(format!(
                        "exponent of {raw} for {product} must be > 0, got {e}"
                    )));
                }
                map.insert(r.commodity(raw)?, e);
            }
            exponents.insert(p, map);
        }
        for (&p, recipe) in &recipes {
            for (&raw, &units) in &recipe.raw_per_unit {
                if units > 0.0 && !exponents.get(&p).is_some_and(|m| m.contains_key(&raw)) {
                    return Err(invalid(format!(
                        "missing exponent of {} for product {}",
                        commodities[raw].name, commodities[p].name
                    )));
                }
            }
            for &plant in &sites.plants {
                if !factors.contains_key(&(plant, p)) {
                    return Err(invalid(format!(
                        "missing production factor at {} for {}",
                        network.node(plant).label,
                        commodities[p].name
                    )));
                }
            }
        }
        let mut capacity = BTreeMap::new();
        for (plant, per_product) in &file.production.capacity {
            let node = r.node(plant)?;
            for (product, &cap) in per_product {
                capacity.insert((node, r.commodity(product)?), cap);
            }
        }
        let mut splits = Vec::new();
        for rec in &file.production.splits {
            let a = r.node(&rec.plants[0])?;
            let b = r.node(&rec.plants[1])?;
            if a == b {
                return Err(invalid("split rule names the same plant twice"));
            }
            let mut first = BTreeMap::new();
            for (product, plant) in &rec.first {
                let node = r.node(plant)?;
                if node != a && node != b {
                    return Err(invalid(format!(
                        "split rule for ({}, {}) puts {product} first at {plant}",
                        rec.plants[0], rec.plants[1]
                    )));
                }
                first.insert(r.commodity(product)?, node);
            }
            splits.push(SplitRule {
                plants: [a.min(b), a.max(b)],
                first,
            });
        }
        let production = ProductionParams {
            factors,
            exponents,
            capacity,
            default_capacity: file
                .production
                .default_capacity
                .unwrap_or(DEFAULT_PLANT_CAPACITY),
            splits,
        };

        // limits
        let mut limits = GlobalLimits {
            total_raw: file.limits.total_raw,
            total_product: file.limits.total_product,
            max_distances: Vec::new(),
        };
        for (what, v) in [
            ("total_raw", limits.total_raw),
            ("total_product", limits.total_product),
        ] {
            if let Some(v) = v {
                check_money(&format!("limits.{what}"), v)?;
            }
        }
        for rec in &file.limits.max_distances {
            check_money(&format!("distance bound {}-{}", rec.a, rec.b), rec.max)?;
            limits.max_distances.push(DistanceBound {
                a: r.node(&rec.a)?,
                b: r.node(&rec.b)?,
                max: rec.max,
            });
        }
        check_money("handling_rate", file.handling_rate)?;

        let mut overrides = BTreeMap::new();
        for block in &file.precomputed_distances {
            let c = r.commodity(&block.commodity)?;
            if block.costs.len() != block.from.len() {
                return Err(invalid(format!(
                    "precomputed block for {}: {} rows for {} sources",
                    block.commodity,
                    block.costs.len(),
                    block.from.len()
                )));
            }
            for (from, row) in block.from.iter().zip(&block.costs) {
                if row.len() != block.to.len() {
                    return Err(invalid(format!(
                        "precomputed block for {}: row {from} has {} entries for {} targets",
                        block.commodity,
                        row.len(),
                        block.to.len()
                    )));
                }
                let f = r.node(from)?;
                for (to, &cost) in block.to.iter().zip(row) {
                    check_money(&format!("precomputed cost {from}->{to}"), cost)?;
                    overrides.insert((c, f, r.node(to)?), cost);
                }
            }
        }

        let reference = match &file.reference_selection {
            Some(rec) => Some(ReferenceSelection {
                plants: r.nodes_sorted(&rec.plants)?,
                note: rec.note.clone(),
            }),
            None => None,
        };

        let all: Vec<CommodityId> = (0..commodities.len()).collect();
        let distances = network.all_pairs_for(&all)?;

        Ok(Scenario {
            name: file.name.clone(),
            network,
            commodities,
            recipes,
            sites,
            demand,
            production,
            limits,
            handling_rate: file.handling_rate,
            overrides,
            reference,
            distances,
        })
    }

    /// Serializes back into the file format. Edges are written one arc at a
    /// time with explicit costs; overrides as one block per source row.
    pub fn to_file(&self) -> ScenarioFile {
        let node = |id: NodeId| self.label(id).to_string();
        let com = |id: CommodityId| self.commodity_name(id).to_string();
        let labels = |ids: &[NodeId]| ids.iter().map(|&i| node(i)).collect::<Vec<_>>();

        let nodes = self
            .network
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                id: n.label.clone(),
                x: n.x,
                y: n.y,
            })
            .collect();
        let edges = self
            .network
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                from: node(e.from),
                to: node(e.to),
                bidirectional: false,
                costs: e.costs.iter().map(|(&c, &v)| (com(c), v)).collect(),
                capacities: e.capacities.iter().map(|(&c, &v)| (com(c), v)).collect(),
            })
            .collect();
        let commodities = self
            .commodities
            .iter()
            .map(|c| CommodityRecord {
                id: c.name.clone(),
                kind: c.kind,
                unit_cost: c.unit_cost,
                purchase_price: c.purchase_price,
                storage_fee: c.storage_fee,
            })
            .collect();
        let recipes = self
            .recipes
            .values()
            .map(|r| {
                (
                    com(r.product),
                    r.raw_per_unit.iter().map(|(&c, &u)| (com(c), u)).collect(),
                )
            })
            .collect();
        let sites = SitesRecord {
            extraction: self
                .sites
                .extraction
                .iter()
                .map(|(&c, &n)| (com(c), node(n)))
                .collect(),
            raw_warehouses: labels(&self.sites.raw_warehouses),
            plants: labels(&self.sites.plants),
            product_warehouses: labels(&self.sites.product_warehouses),
            stores: labels(&self.sites.stores),
        };
        let demand = DemandRecord {
            orders: self
                .sites
                .stores
                .iter()
                .zip(&self.demand.orders)
                .map(|(&s, o)| (node(s), o.iter().map(|(&p, &q)| (com(p), q)).collect()))
                .collect(),
            retail_price: self
                .demand
                .retail_price
                .iter()
                .map(|(&p, &v)| (com(p), v))
                .collect(),
        };
        let mut factors: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (&(plant, product), &j) in &self.production.factors {
            factors
                .entry(node(plant))
                .or_default()
                .insert(com(product), j);
        }
        let mut capacity: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        for (&(plant, product), &cap) in &self.production.capacity {
            capacity
                .entry(node(plant))
                .or_default()
                .insert(com(product), cap);
        }
        let production = ProductionRecord {
            factors,
            exponents: self
                .production
                .exponents
                .iter()
                .map(|(&p, m)| (com(p), m.iter().map(|(&r, &e)| (com(r), e)).collect()))
                .collect(),
            default_capacity: Some(self.production.default_capacity),
            capacity,
            splits: self
                .production
                .splits
                .iter()
                .map(|s| SplitRecord {
                    plants: [node(s.plants[0]), node(s.plants[1])],
                    first: s.first.iter().map(|(&p, &n)| (com(p), node(n))).collect(),
                })
                .collect(),
        };
        let limits = LimitsRecord {
            total_raw: self.limits.total_raw,
            total_product: self.limits.total_product,
            max_distances: self
                .limits
                .max_distances
                .iter()
                .map(|b| DistanceBoundRecord {
                    a: node(b.a),
                    b: node(b.b),
                    max: b.max,
                })
                .collect(),
        };
        let mut rows: BTreeMap<(CommodityId, NodeId), Vec<(NodeId, f64)>> = BTreeMap::new();
        for (&(c, f, t), &v) in &self.overrides {
            rows.entry((c, f)).or_default().push((t, v));
        }
        let precomputed_distances = rows
            .into_iter()
            .map(|((c, f), row)| DistanceBlock {
                commodity: com(c),
                from: vec![node(f)],
                to: row.iter().map(|&(t, _)| node(t)).collect(),
                costs: vec![row.iter().map(|&(_, v)| v).collect()],
            })
            .collect();
        ScenarioFile {
            name: self.name.clone(),
            nodes,
            grid_costs: BTreeMap::new(),
            edges,
            commodities,
            recipes,
            sites,
            demand,
            production,
            limits,
            handling_rate: self.handling_rate,
            precomputed_distances,
            reference_selection: self.reference.as_ref().map(|r| ReferenceRecord {
                plants: labels(&r.plants),
                note: r.note.clone(),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }
}

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Distance {
        a: String,
        b: String,
        distance: f64,
        max: f64,
    },
    Capacity {
        edge: usize,
        from: String,
        to: String,
        commodity: String,
        flow: f64,
        capacity: f64,
    },
    TotalRaw {
        required: f64,
        limit: f64,
    },
    TotalProduct {
        required: f64,
        limit: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Distance {
                a,
                b,
                distance,
                max,
            } => write!(
                f,
                "distance bound: {a}-{b} is {distance:.3} apart, limit {max}"
            ),
            Violation::Capacity {
                from,
                to,
                commodity,
                flow,
                capacity,
                ..
            } => write!(
                f,
                "edge capacity: {from}->{to} carries {flow} of {commodity}, capacity {capacity}"
            ),
            Violation::TotalRaw { required, limit } => {
                write!(f, "total raw: {required} required, limit {limit}")
            }
            Violation::TotalProduct { required, limit } => {
                write!(f, "total product: {required} required, limit {limit}")
            }
        }
    }
}

/// Checks a situation against the scenario's distance bounds, edge
/// capacities and global totals. An empty list means feasible.
///
/// Distance bounds apply when both endpoints are occupied in the situation
/// (extraction points and stores always are). Edge flows are routed along
/// the Floyd routes of the base network; legs whose cost comes from a
/// precomputed override still use that route.
pub fn validate_feasibility(s: &Scenario, sit: &Situation) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut active: BTreeSet<NodeId> = s.sites.extraction.values().copied().collect();
    active.extend(s.sites.stores.iter().copied());
    active.extend(sit.plants);
    active.extend(sit.raw_warehouses);
    active.extend(sit.product_warehouses);
    for bound in &s.limits.max_distances {
        if !(active.contains(&bound.a) && active.contains(&bound.b)) {
            continue;
        }
        let distance = euclidean_distance(s.network.node(bound.a), s.network.node(bound.b));
        if distance > bound.max {
            out.push(Violation::Distance {
                a: s.label(bound.a).to_string(),
                b: s.label(bound.b).to_string(),
                distance,
                max: bound.max,
            });
        }
    }

    let mut flows: BTreeMap<(usize, CommodityId), f64> = BTreeMap::new();
    let mut push = |c: CommodityId, from: NodeId, to: NodeId, units: f64| {
        if let Some(route) = s.distances[c].route_edges(from, to) {
            for e in route {
                *flows.entry((e, c)).or_default() += units;
            }
        }
    };
    for (k, &plant) in sit.plants.iter().enumerate() {
        let wh = sit.raw_warehouses[k];
        for (&raw, &units) in &sit.plant_raw_requirements(s)[k] {
            if units > 0.0 {
                push(raw, s.sites.extraction[&raw], wh, units);
                push(raw, wh, plant, units);
            }
        }
    }
    for sh in &sit.flow.shipments {
        let units = sh.units as f64;
        push(sh.product, sh.plant, sh.warehouse, units);
        push(sh.product, sh.warehouse, sh.store, units);
    }
    for ((e, c), flow) in flows {
        let edge = &s.network.edges()[e];
        if let Some(&cap) = edge.capacities.get(&c) {
            if flow > cap {
                out.push(Violation::Capacity {
                    edge: e,
                    from: s.label(edge.from).to_string(),
                    to: s.label(edge.to).to_string(),
                    commodity: s.commodity_name(c).to_string(),
                    flow,
                    capacity: cap,
                });
            }
        }
    }

    if let Some(limit) = s.limits.total_raw {
        let required: f64 = sit
            .plant_raw_requirements(s)
            .iter()
            .flat_map(|m| m.values())
            .sum();
        if required > limit {
            out.push(Violation::TotalRaw { required, limit });
        }
    }
    if let Some(limit) = s.limits.total_product {
        let required: f64 = sit
            .allocation
            .units
            .iter()
            .flat_map(|m| m.values())
            .map(|&q| q as f64)
            .sum();
        if required > limit {
            out.push(Violation::TotalProduct { required, limit });
        }
    }
    out
}
