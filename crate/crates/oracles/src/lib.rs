//! Slow but obviously correct reference answers for small instances.
//!
//! Everything here works on plain numbers so that the checks do not share
//! code or data structures with the solvers they check.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Single-source shortest paths over directed `(from, to, cost)` arcs.
pub fn dijkstra(n: usize, arcs: &[(usize, usize, u64)], source: usize) -> Vec<Option<u64>> {
    let mut best = vec![None; n];
    let mut heap = BinaryHeap::from([Reverse((0u64, source))]);
    while let Some(Reverse((d, u))) = heap.pop() {
        if best[u].is_some() {
            continue;
        }
        best[u] = Some(d);
        for &(a, b, c) in arcs {
            if a == u && best[b].is_none() {
                heap.push(Reverse((d + c, b)));
            }
        }
    }
    best
}

/// Minimum transportation cost by enumerating every integer plan.
///
/// Unbalanced instances are padded with a zero-cost dummy row or column.
pub fn transport_min_cost(supply: &[u64], demand: &[u64], costs: &[Vec<u64>]) -> u64 {
    let mut a = supply.to_vec();
    let mut b = demand.to_vec();
    let mut c: Vec<Vec<u64>> = costs.to_vec();
    let (sa, sb): (u64, u64) = (a.iter().sum(), b.iter().sum());
    if sa > sb {
        b.push(sa - sb);
        for row in &mut c {
            row.push(0);
        }
    } else if sb > sa {
        a.push(sb - sa);
        c.push(vec![0; b.len()]);
    }
    let (m, n) = (a.len(), b.len());

    fn walk(
        cell: usize,
        m: usize,
        n: usize,
        a: &mut [u64],
        b: &mut [u64],
        c: &[Vec<u64>],
        acc: u64,
        best: &mut u64,
    ) {
        if acc >= *best {
            return;
        }
        if cell == m * n {
            *best = acc;
            return;
        }
        let (i, j) = (cell / n, cell % n);
        let (lo, hi) = if j == n - 1 {
            // the row's remainder must go here
            if a[i] > b[j] {
                return;
            }
            (a[i], a[i])
        } else if i == m - 1 {
            if b[j] > a[i] {
                return;
            }
            (b[j], b[j])
        } else {
            (0, a[i].min(b[j]))
        };
        for x in lo..=hi {
            a[i] -= x;
            b[j] -= x;
            walk(cell + 1, m, n, a, b, c, acc + x * c[i][j], best);
            a[i] += x;
            b[j] += x;
        }
    }

    let mut best = u64::MAX;
    walk(0, m, n, &mut a, &mut b, &c, 0, &mut best);
    best
}

/// Best total profit of a bounded-integer load, by trying every count vector.
pub fn loading_max_profit(capacity: u64, items: &[(u64, f64)]) -> f64 {
    fn go(k: usize, room: u64, items: &[(u64, f64)]) -> f64 {
        if k == items.len() {
            return 0.0;
        }
        let (w, r) = items[k];
        let mut best = f64::NEG_INFINITY;
        let mut m = 0;
        while m * w <= room {
            best = best.max(r * m as f64 + go(k + 1, room - m * w, items));
            m += 1;
        }
        best
    }
    go(0, capacity, items)
}

/// Maximum of `profits · x` over `lower <= x <= upper`, `x · resources <= limits`
/// by evaluating every vertex of the polytope. `None` when it is empty.
pub fn plan_max_by_vertices(
    lower: &[f64],
    upper: &[f64],
    resources: &[Vec<f64>],
    limits: &[f64],
    profits: &[f64],
) -> Option<f64> {
    let n = profits.len();
    let m = limits.len();
    // every constraint as g · x <= h
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        let mut g = vec![0.0; n];
        g[i] = 1.0;
        rows.push((g.clone(), upper[i]));
        g[i] = -1.0;
        rows.push((g, -lower[i]));
    }
    for j in 0..m {
        rows.push(((0..n).map(|i| resources[i][j]).collect(), limits[j]));
    }
    let feasible = |x: &[f64]| {
        rows.iter()
            .all(|(g, h)| g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() <= h + 1e-7)
    };
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    fn combos(
        start: usize,
        total: usize,
        k: usize,
        pick: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == k {
            f(pick);
            return;
        }
        for s in start..total {
            pick.push(s);
            combos(s + 1, total, k, pick, f);
            pick.pop();
        }
    }
    combos(0, rows.len(), n, &mut pick, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&r| rows[r].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&r| rows[r].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let z: f64 = x.iter().zip(profits).map(|(a, b)| a * b).sum();
                best = Some(best.map_or(z, |v: f64| v.max(z)));
            }
        }
    });
    best
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[p][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}
