//! Balanced transportation problem: northwest-corner start, then the method
//! of potentials with stepping-stone cycles.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportInstance {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
    /// `costs[i][j]` per unit from source `i` to destination `j`.
    pub costs: Vec<Vec<f64>>,
}

impl TransportInstance {
    pub fn validate(&self) -> Result<()> {
        if self.supply.is_empty() && self.demand.is_empty() {
            return Err(Error::Invalid(
                "transport instance has no sources and no destinations".into(),
            ));
        }
        if self.costs.len() != self.supply.len() {
            return Err(Error::Invalid(format!(
                "{} cost rows for {} sources",
                self.costs.len(),
                self.supply.len()
            )));
        }
        for (i, row) in self.costs.iter().enumerate() {
            if row.len() != self.demand.len() {
                return Err(Error::Invalid(format!(
                    "cost row {} has {} entries for {} destinations",
                    i + 1,
                    row.len(),
                    self.demand.len()
                )));
            }
            if let Some(c) = row.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
                return Err(Error::Invalid(format!(
                    "cost {c} in row {} must be finite and non-negative",
                    i + 1
                )));
            }
        }
        for (what, v) in [("supply", &self.supply), ("demand", &self.demand)] {
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::Invalid(format!(
                    "{what} {x} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }

    fn imbalance(&self) -> f64 {
        self.supply.iter().sum::<f64>() - self.demand.iter().sum::<f64>()
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self
            .supply
            .iter()
            .chain(&self.demand)
            .fold(1.0, |a: f64, &b| a.max(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "index")]
pub enum Fictitious {
    Source(usize),
    Destination(usize),
}

/// Appends a zero-cost dummy destination or source so that total supply
/// equals total demand.
pub fn balance(inst: &TransportInstance) -> TransportInstance {
    let diff = inst.imbalance();
    let mut out = inst.clone();
    if diff.abs() <= inst.tolerance() {
        return out;
    }
    if diff > 0.0 {
        out.demand.push(diff);
        for row in &mut out.costs {
            row.push(0.0);
        }
    } else {
        out.supply.push(-diff);
        out.costs.push(vec![0.0; inst.demand.len()]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    /// Shipments on the original sources and destinations.
    pub flows: Vec<Vec<f64>>,
    pub objective: f64,
    /// Basic cells of the final plan, in balanced-instance coordinates.
    pub basis: Vec<(usize, usize)>,
    /// Whether the input was already balanced.
    pub balanced: bool,
    pub fictitious: Option<Fictitious>,
    /// Row and column potentials certifying optimality.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    m: usize,
    n: usize,
    cost: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    basic: Vec<Vec<bool>>,
    basis: Vec<(usize, usize)>,
}

impl Tableau {
    fn northwest(inst: &TransportInstance, tol: f64) -> Self {
        let (m, n) = (inst.supply.len(), inst.demand.len());
        let mut a = inst.supply.clone();
        let mut b = inst.demand.clone();
        let mut x = vec![vec![0.0; n]; m];
        let mut basic = vec![vec![false; n]; m];
        let mut basis = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            let q = a[i].min(b[j]);
            x[i][j] = q;
            basic[i][j] = true;
            basis.push((i, j));
            a[i] -= q;
            b[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if (a[i] <= tol && i < m - 1) || j == n - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self {
            m,
            n,
            cost: inst.costs.clone(),
            x,
            basic,
            basis,
        }
    }

    /// Potentials with `u[0] = 0`, propagated over the basis tree.
    fn potentials(&self) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            if node < m {
                for j in 0..n {
                    if self.basic[node][j] && v[j].is_nan() {
                        v[j] = self.cost[node][j] - u[node];
                        queue.push_back(m + j);
                    }
                }
            } else {
                let j = node - m;
                for i in 0..m {
                    if self.basic[i][j] && u[i].is_nan() {
                        u[i] = self.cost[i][j] - v[j];
                        queue.push_back(i);
                    }
                }
            }
        }
        (u, v)
    }

    /// Basis cells on the tree path from column `j` to row `i`.
    fn path(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let (m, n) = (self.m, self.n);
        let mut parent: Vec<Option<usize>> = vec![None; m + n];
        let start = m + j;
        let mut seen = vec![false; m + n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            let neighbours: Vec<usize> = if node < m {
                (0..n)
                    .filter(|&c| self.basic[node][c])
                    .map(|c| m + c)
                    .collect()
            } else {
                (0..m).filter(|&r| self.basic[r][node - m]).collect()
            };
            for next in neighbours {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some(node);
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = i;
        while let Some(p) = parent[node] {
            let cell = if node < m {
                (node, p - m)
            } else {
                (p, node - m)
            };
            cells.push(cell);
            node = p;
        }
        cells.reverse();
        cells
    }
}

/// Solves the instance to optimality, balancing it first if needed.
///
/// The entering cell is the one with the most negative reduced cost, the
/// first in row-major order among equals. After a long run of zero-step
/// pivots the rule falls back to the first negative cell, which together
/// with the row-major leaving rule rules out cycling in practice.
pub fn solve_transportation(inst: &TransportInstance) -> Result<TransportPlan> {
    inst.validate()?;
    let bal = balance(inst);
    let fictitious = if bal.supply.len() > inst.supply.len() {
        Some(Fictitious::Source(inst.supply.len()))
    } else if bal.demand.len() > inst.demand.len() {
        Some(Fictitious::Destination(inst.demand.len()))
    } else {
        None
    };
    let tol = bal.tolerance();
    let cost_tol = 1e-9 * bal.costs.iter().flatten().fold(1.0, |a: f64, &b| a.max(b));
    let mut t = Tableau::northwest(&bal, tol);
    let (m, n) = (t.m, t.n);

    let limit = 50 * (m * n + 10) * (m + n);
    let mut degenerate_run = 0;
    let mut iterations = 0;
    loop {
        let (u, v) = t.potentials();
        let bland = degenerate_run > m * n;
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if t.basic[i][j] {
                    continue;
                }
                let d = t.cost[i][j] - u[i] - v[j];
                if d < -cost_tol && entering.is_none_or(|(_, _, best)| d < best) {
                    entering = Some((i, j, d));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            let flows = t.x[..inst.supply.len()]
                .iter()
                .map(|row| row[..inst.demand.len()].to_vec())
                .collect::<Vec<_>>();
            let objective = flows
                .iter()
                .zip(&inst.costs)
                .flat_map(|(xr, cr)| xr.iter().zip(cr).map(|(x, c)| x * c))
                .sum();
            let mut basis = t.basis.clone();
            basis.sort_unstable();
            return Ok(TransportPlan {
                flows,
                objective,
                basis,
                balanced: fictitious.is_none(),
                fictitious,
                u,
                v,
                iterations,
            });
        };
        iterations += 1;
        if iterations > limit {
            return Err(Error::Invalid(format!(
                "transportation solver did not converge in {limit} pivots"
            )));
        }

        let path = t.path(ei, ej);
        // path cells alternate -, +, -, ... starting next to column ej
        let minus: Vec<(usize, usize)> = path.iter().copied().step_by(2).collect();
        let plus: Vec<(usize, usize)> = path.iter().copied().skip(1).step_by(2).collect();
        let theta = minus
            .iter()
            .map(|&(r, c)| t.x[r][c])
            .fold(f64::INFINITY, f64::min);
        let leaving = *minus
            .iter()
            .filter(|&&(r, c)| t.x[r][c] <= theta + tol)
            .min()
            .expect("cycle has a decreasing cell");

        t.x[ei][ej] += theta;
        for &(r, c) in &plus {
            t.x[r][c] += theta;
        }
        for &(r, c) in &minus {
            t.x[r][c] = (t.x[r][c] - theta).max(0.0);
        }
        t.x[leaving.0][leaving.1] = 0.0;
        t.basic[leaving.0][leaving.1] = false;
        t.basic[ei][ej] = true;
        let pos = t
            .basis
            .iter()
            .position(|&c| c == leaving)
            .expect("leaving cell is basic");
        t.basis[pos] = (ei, ej);

        degenerate_run = if theta <= tol { degenerate_run + 1 } else { 0 };
    }
}
