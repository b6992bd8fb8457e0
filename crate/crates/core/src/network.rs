//! Directed transport network over plane-embedded nodes.
//!
//! Every edge carries a per-commodity unit cost (and optionally a
//! per-commodity capacity). Shortest-path costs are computed per commodity
//! with Floyd's algorithm; unreachable pairs hold `f64::INFINITY`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type CommodityId = usize;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn new(id: NodeId, label: impl Into<String>, x: f64, y: f64) -> Self {
        Node {
            id,
            label: label.into(),
            x,
            y,
        }
    }
}

/// A directed arc. Commodities absent from `costs` are not carried by the arc.
/// Commodities absent from `capacities` are unbounded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub costs: BTreeMap<CommodityId, f64>,
    pub capacities: BTreeMap<CommodityId, f64>,
}

impl Edge {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Edge {
            from,
            to,
            ..Default::default()
        }
    }

    pub fn with_cost(mut self, commodity: CommodityId, cost: f64) -> Self {
        self.costs.insert(commodity, cost);
        self
    }

    pub fn with_capacity(mut self, commodity: CommodityId, capacity: f64) -> Self {
        self.capacities.insert(commodity, capacity);
        self
    }

    /// The same arc in the opposite direction.
    pub fn reversed(&self) -> Self {
        Edge {
            from: self.to,
            to: self.from,
            costs: self.costs.clone(),
            capacities: self.capacities.clone(),
        }
    }
}

/// Unit transport cost per unit of horizontal and vertical displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCost {
    pub horizontal: f64,
    pub vertical: f64,
}

impl GridCost {
    pub fn edge_cost(&self, a: &Node, b: &Node) -> f64 {
        self.horizontal * (a.x - b.x).abs() + self.vertical * (a.y - b.y).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

const AXIS_TOLERANCE: f64 = 1e-9;

/// Validates nodes and edges and fills per-commodity costs from `grid`.
///
/// In grid mode every edge must be horizontal or vertical; commodities with an
/// explicit cost on the edge keep that cost, all other grid commodities get
/// `horizontal * |dx| + vertical * |dy|`.
pub fn build_network(
    nodes: Vec<Node>,
    mut edges: Vec<Edge>,
    grid: Option<&BTreeMap<CommodityId, GridCost>>,
) -> Result<Network> {
    for (i, node) in nodes.iter().enumerate() {
        if node.id != i {
            return Err(Error::Invalid(format!(
                "node ids must be dense: position {i} holds id {}",
                node.id
            )));
        }
        if !node.x.is_finite() || !node.y.is_finite() {
            return Err(Error::Invalid(format!(
                "node {} has non-finite coordinates",
                node.label
            )));
        }
    }
    let label = |id: NodeId| nodes[id].label.clone();
    for edge in &mut edges {
        for end in [edge.from, edge.to] {
            if end >= nodes.len() {
                return Err(Error::UnknownNode(format!("#{end}")));
            }
        }
        if edge.from == edge.to {
            return Err(Error::SelfLoop(label(edge.from)));
        }
        if let Some(grid) = grid {
            let (a, b) = (&nodes[edge.from], &nodes[edge.to]);
            let horizontal = (a.y - b.y).abs() <= AXIS_TOLERANCE;
            let vertical = (a.x - b.x).abs() <= AXIS_TOLERANCE;
            if !horizontal && !vertical {
                return Err(Error::NotAxisAligned {
                    from: label(edge.from),
                    to: label(edge.to),
                });
            }
            for (&commodity, unit) in grid {
                edge.costs
                    .entry(commodity)
                    .or_insert_with(|| unit.edge_cost(a, b));
            }
        }
        for (&commodity, &cost) in &edge.costs {
            if cost.is_nan() || cost < 0.0 {
                return Err(Error::NegativeCost {
                    from: label(edge.from),
                    to: label(edge.to),
                    commodity: format!("#{commodity}"),
                    cost,
                });
            }
        }
        for (&commodity, &cap) in &edge.capacities {
            if cap.is_nan() || cap < 0.0 {
                return Err(Error::Invalid(format!(
                    "edge {} -> {}: negative capacity {cap} for commodity #{commodity}",
                    label(edge.from),
                    label(edge.to)
                )));
            }
        }
    }
    Ok(Network { nodes, edges })
}

impl Network {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Commodity ids carried by at least one edge.
    pub fn commodities(&self) -> Vec<CommodityId> {
        let mut ids: Vec<_> = self
            .edges
            .iter()
            .flat_map(|e| e.costs.keys().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Floyd's algorithm for one commodity.
    pub fn all_pairs_shortest_paths(&self, commodity: CommodityId) -> Result<DistanceMatrix> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n * n];
        let mut next = vec![NONE; n * n];
        let mut hop = vec![NONE; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
            next[i * n + i] = i;
        }
        for (idx, edge) in self.edges.iter().enumerate() {
            let Some(&cost) = edge.costs.get(&commodity) else {
                continue;
            };
            if !cost.is_finite() || cost < 0.0 {
                return Err(Error::NegativeCost {
                    from: self.nodes[edge.from].label.clone(),
                    to: self.nodes[edge.to].label.clone(),
                    commodity: format!("#{commodity}"),
                    cost,
                });
            }
            let cell = edge.from * n + edge.to;
            if hop[cell] == NONE || cost < self.edges[hop[cell]].costs[&commodity] {
                hop[cell] = idx;
            }
            if cost < dist[cell] {
                dist[cell] = cost;
                next[cell] = edge.to;
            }
        }
        for k in 0..n {
            for i in 0..n {
                let ik = dist[i * n + k];
                if ik == f64::INFINITY {
                    continue;
                }
                for j in 0..n {
                    let through = ik + dist[k * n + j];
                    if through < dist[i * n + j] {
                        dist[i * n + j] = through;
                        next[i * n + j] = next[i * n + k];
                    }
                }
            }
        }
        Ok(DistanceMatrix {
            commodity,
            n,
            dist,
            next,
            hop,
        })
    }

    /// Distance matrices for several commodities, computed concurrently.
    pub fn all_pairs_for(&self, commodities: &[CommodityId]) -> Result<Vec<DistanceMatrix>> {
        commodities
            .par_iter()
            .map(|&c| self.all_pairs_shortest_paths(c))
            .collect()
    }
}

/// All-pairs shortest-path costs for one commodity.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    commodity: CommodityId,
    n: usize,
    dist: Vec<f64>,
    next: Vec<usize>,
    hop: Vec<usize>,
}

impl DistanceMatrix {
    pub fn commodity(&self) -> CommodityId {
        self.commodity
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: NodeId, to: NodeId) -> f64 {
        self.dist[from * self.n + to]
    }

    pub fn row(&self, from: NodeId) -> &[f64] {
        &self.dist[from * self.n..(from + 1) * self.n]
    }

    /// Edge indices along one cheapest route, `None` when unreachable.
    ///
    /// Used for capacity accounting only; among equal-cost routes the one
    /// found first by the relaxation order is returned.
    pub fn route_edges(&self, from: NodeId, to: NodeId) -> Option<Vec<usize>> {
        if self.get(from, to) == f64::INFINITY {
            return None;
        }
        let mut edges = Vec::new();
        let mut at = from;
        while at != to {
            let step = self.next[at * self.n + to];
            if step == NONE || edges.len() > self.n {
                return None;
            }
            edges.push(self.hop[at * self.n + step]);
            at = step;
        }
        Some(edges)
    }
}

pub fn euclidean_distance(a: &Node, b: &Node) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}
