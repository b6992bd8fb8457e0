//! Production planning: maximize `c·x` with `b <= x <= beta` and resource
//! use `sum_i x_i a_ij <= gamma_j`, by a dense tableau simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest integer grid the exhaustive integer mode will scan.
pub const MAX_INTEGER_POINTS: f64 = 1e6;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanInstance {
    /// Obligatory output per product.
    pub lower: Vec<f64>,
    /// Output ceiling per product.
    pub upper: Vec<f64>,
    /// `resources[i][j]`: units of resource `j` per unit of product `i`.
    pub resources: Vec<Vec<f64>>,
    /// Available amount of each resource.
    pub limits: Vec<f64>,
    /// Profit per unit of each product.
    pub profits: Vec<f64>,
}

impl PlanInstance {
    pub fn products(&self) -> usize {
        self.profits.len()
    }

    pub fn resource_count(&self) -> usize {
        self.limits.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.products();
        let m = self.resource_count();
        if self.lower.len() != n || self.upper.len() != n || self.resources.len() != n {
            return Err(Error::Invalid(format!(
                "{n} profits but {} lower bounds, {} upper bounds, {} resource rows",
                self.lower.len(),
                self.upper.len(),
                self.resources.len()
            )));
        }
        if let Some(row) = self.resources.iter().position(|r| r.len() != m) {
            return Err(Error::Invalid(format!(
                "resource row {} has {} entries for {m} resources",
                row + 1,
                self.resources[row].len()
            )));
        }
        let all = self
            .lower
            .iter()
            .chain(&self.upper)
            .chain(&self.limits)
            .chain(&self.profits)
            .chain(self.resources.iter().flatten());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "plan instance contains a non-finite number".into(),
            ));
        }
        if self.resources.iter().flatten().any(|&a| a < 0.0) || self.limits.iter().any(|&g| g < 0.0)
        {
            return Err(Error::Invalid(
                "resource use and limits must be non-negative".into(),
            ));
        }
        if let Some(i) = (0..n).find(|&i| self.lower[i] > self.upper[i]) {
            return Err(Error::Invalid(format!(
                "product {}: lower bound {} exceeds upper bound {}",
                i + 1,
                self.lower[i],
                self.upper[i]
            )));
        }
        Ok(())
    }

    /// Resource use of `x`.
    pub fn usage(&self, x: &[f64]) -> Vec<f64> {
        (0..self.resource_count())
            .map(|j| {
                x.iter()
                    .zip(&self.resources)
                    .map(|(xi, row)| xi * row[j])
                    .sum()
            })
            .collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.profits).map(|(a, b)| a * b).sum()
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] - tol && v <= self.upper[i] + tol)
            && self
                .usage(x)
                .iter()
                .zip(&self.limits)
                .all(|(u, g)| *u <= g + tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Unused amount of each resource.
    pub slack: Vec<f64>,
    pub pivots: usize,
}

/// Continuous optimum. Shifting `y = x - b` turns the lower bounds into
/// `y >= 0`, so the all-slack basis is feasible whenever `b` itself fits
/// the resource limits.
pub fn solve_production_plan(inst: &PlanInstance) -> Result<PlanSolution> {
    inst.validate()?;
    let n = inst.products();
    let m = inst.resource_count();
    let base_use = inst.usage(&inst.lower);
    let mut rhs: Vec<f64> = Vec::with_capacity(m + n);
    for j in 0..m {
        let r = inst.limits[j] - base_use[j];
        if r < -EPS * inst.limits[j].max(1.0) {
            return Err(Error::Infeasible(format!(
                "lower bounds need {} of resource {}, only {} available",
                base_use[j],
                j + 1,
                inst.limits[j]
            )));
        }
        rhs.push(r.max(0.0));
    }
    for i in 0..n {
        rhs.push(inst.upper[i] - inst.lower[i]);
    }

    // columns: y_0..y_{n-1}, then one slack per row
    let rows = m + n;
    let cols = n + rows;
    let mut a = vec![vec![0.0; cols]; rows];
    for j in 0..m {
        for i in 0..n {
            a[j][i] = inst.resources[i][j];
        }
        a[j][n + j] = 1.0;
    }
    for i in 0..n {
        a[m + i][i] = 1.0;
        a[m + i][n + m + i] = 1.0;
    }
    let mut basis: Vec<usize> = (n..cols).collect();
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&inst.profits);

    let mut pivots = 0;
    loop {
        // reduced profit of column k: c_k - sum_r c_B[r] a[r][k]
        let reduced = |k: usize, a: &[Vec<f64>], basis: &[usize]| -> f64 {
            cost[k] - (0..rows).map(|r| cost[basis[r]] * a[r][k]).sum::<f64>()
        };
        let Some(enter) = (0..cols).find(|&k| !basis.contains(&k) && reduced(k, &a, &basis) > EPS)
        else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            if a[r][enter] > EPS {
                let ratio = rhs[r] / a[r][enter];
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - EPS || (ratio <= best + EPS && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let (pr, _) = leave.ok_or_else(|| Error::Invalid("plan is unbounded".into()))?;
        let piv = a[pr][enter];
        for v in a[pr].iter_mut() {
            *v /= piv;
        }
        rhs[pr] /= piv;
        for r in 0..rows {
            if r != pr {
                let f = a[r][enter];
                if f != 0.0 {
                    for k in 0..cols {
                        a[r][k] -= f * a[pr][k];
                    }
                    rhs[r] -= f * rhs[pr];
                }
            }
        }
        basis[pr] = enter;
        pivots += 1;
    }

    let mut x = inst.lower.clone();
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] += rhs[r].max(0.0);
        }
    }
    for i in 0..n {
        x[i] = x[i].min(inst.upper[i]);
    }
    Ok(finish(inst, x, pivots))
}

fn finish(inst: &PlanInstance, x: Vec<f64>, pivots: usize) -> PlanSolution {
    let slack = inst
        .usage(&x)
        .iter()
        .zip(&inst.limits)
        .map(|(u, g)| g - u)
        .collect();
    PlanSolution {
        objective: inst.objective(&x),
        x,
        slack,
        pivots,
    }
}

/// Integer optimum by scanning every integer point in the box. The first
/// best point in lexicographic order is returned.
pub fn solve_production_plan_integer(inst: &PlanInstance) -> Result<PlanSolution> {
    inst.validate()?;
    let lo: Vec<i64> = inst.lower.iter().map(|b| b.ceil() as i64).collect();
    let hi: Vec<i64> = inst.upper.iter().map(|b| b.floor() as i64).collect();
    let points: f64 = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l + 1).max(0) as f64)
        .product();
    if points > MAX_INTEGER_POINTS {
        return Err(Error::Invalid(format!(
            "integer mode would scan {points} points, limit {MAX_INTEGER_POINTS}"
        )));
    }
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Err(Error::Infeasible(
            "a product's bounds contain no integer".into(),
        ));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut cur = lo.clone();
    loop {
        let x: Vec<f64> = cur.iter().map(|&v| v as f64).collect();
        if inst.is_feasible(&x, 0.0) {
            let z = inst.objective(&x);
            if best.as_ref().is_none_or(|(b, _)| z > *b) {
                best = Some((z, x));
            }
        }
        // odometer with the last coordinate fastest
        let mut k = cur.len();
        loop {
            if k == 0 {
                return best.map(|(_, x)| finish(inst, x, 0)).ok_or_else(|| {
                    Error::Infeasible("no integer plan satisfies the resource limits".into())
                });
            }
            k -= 1;
            if cur[k] < hi[k] {
                cur[k] += 1;
                for (idx, c) in cur.iter_mut().enumerate().skip(k + 1) {
                    *c = lo[idx];
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(lower: [f64; 2]) -> PlanInstance {
        PlanInstance {
            lower: lower.to_vec(),
            upper: vec![10.0, 10.0],
            resources: vec![vec![1.0], vec![2.0]],
            limits: vec![8.0],
            profits: vec![3.0, 5.0],
        }
    }

    #[test]
    fn single_resource() {
        let s = solve_production_plan(&example([0.0, 0.0])).unwrap();
        assert_eq!(s.x, vec![8.0, 0.0]);
        assert_eq!(s.objective, 24.0);
    }

    #[test]
    fn obligatory_plan_reduces_room() {
        let s = solve_production_plan(&example([1.0, 1.0])).unwrap();
        assert_eq!(s.x, vec![6.0, 1.0]);
        assert_eq!(s.objective, 23.0);
    }

    #[test]
    fn zero_resources_force_zero() {
        let mut inst = example([0.0, 0.0]);
        inst.limits = vec![0.0];
        let s = solve_production_plan(&inst).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn infeasible_lower_bounds() {
        let err = solve_production_plan(&example([5.0, 3.0])).unwrap_err();
        assert!(err.is_infeasible());
    }

    #[test]
    fn integer_mode_matches_on_integral_vertex() {
        let s = solve_production_plan_integer(&example([1.0, 1.0])).unwrap();
        assert_eq!(s.x, vec![6.0, 1.0]);
        assert_eq!(s.objective, 23.0);
    }

    #[test]
    fn integer_mode_refuses_huge_grids() {
        let inst = PlanInstance {
            lower: vec![0.0; 3],
            upper: vec![200.0; 3],
            resources: vec![vec![1.0]; 3],
            limits: vec![10.0],
            profits: vec![1.0; 3],
        };
        assert!(matches!(
            solve_production_plan_integer(&inst),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut inst = example([0.0, 0.0]);
        inst.lower[0] = 11.0;
        assert!(matches!(
            solve_production_plan(&inst),
            Err(Error::Invalid(_))
        ));
    }
}
