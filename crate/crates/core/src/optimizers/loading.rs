//! Bounded-integer loading problem by backward dynamic programming over the
//! remaining capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest capacity the DP table is allowed to index.
pub const MAX_CAPACITY: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingItem {
    pub name: String,
    pub weight: u64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingInstance {
    pub capacity: u64,
    pub items: Vec<LoadingItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingFileItem {
    pub name: String,
    pub weight: f64,
    pub profit: f64,
}

/// On-disk form with real-valued weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingFile {
    pub capacity: f64,
    pub items: Vec<LoadingFileItem>,
}

impl LoadingFile {
    /// Converts to integer weight units of size `quantum`.
    ///
    /// Capacity is rounded down and weights up, so any load that fits the
    /// integer instance also fits the real one. Without a quantum every
    /// weight and the capacity must already be whole numbers.
    pub fn to_instance(&self, quantum: Option<f64>) -> Result<LoadingInstance> {
        let to_units = |v: f64, what: &str, round_up: bool| -> Result<u64> {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invalid(format!(
                    "{what} {v} must be finite and non-negative"
                )));
            }
            let scaled = match quantum {
                Some(q) => {
                    let x = v / q;
                    // tolerate representation noise such as 0.3 / 0.1
                    let near = x.round();
                    if (x - near).abs() <= 1e-9 * near.max(1.0) {
                        near
                    } else if round_up {
                        x.ceil()
                    } else {
                        x.floor()
                    }
                }
                None if v.fract() == 0.0 => v,
                None => {
                    return Err(Error::Invalid(format!(
                        "{what} {v} is not a whole number; pass a quantum to scale it"
                    )))
                }
            };
            if scaled > MAX_CAPACITY as f64 {
                return Err(Error::Invalid(format!(
                    "{what} {v} is too large at this quantum"
                )));
            }
            Ok(scaled as u64)
        };
        if let Some(q) = quantum {
            if !(q.is_finite() && q > 0.0) {
                return Err(Error::Invalid(format!("quantum must be positive, got {q}")));
            }
        }
        let capacity = to_units(self.capacity, "capacity", false)?;
        let items = self
            .items
            .iter()
            .map(|it| {
                Ok(LoadingItem {
                    name: it.name.clone(),
                    weight: to_units(it.weight, &format!("weight of `{}`", it.name), true)?,
                    profit: it.profit,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoadingInstance { capacity, items })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadingSolution {
    pub counts: Vec<u64>,
    pub objective: f64,
    /// `table[i][x]` is the best profit from items `i..` with capacity `x`;
    /// the last row is all zeros.
    pub table: Vec<Vec<f64>>,
}

pub fn solve_loading(inst: &LoadingInstance) -> Result<LoadingSolution> {
    if inst.capacity > MAX_CAPACITY {
        return Err(Error::Invalid(format!(
            "capacity {} exceeds {MAX_CAPACITY}",
            inst.capacity
        )));
    }
    for it in &inst.items {
        if it.weight == 0 {
            return Err(Error::Invalid(format!(
                "item `{}` has non-positive weight",
                it.name
            )));
        }
        if !(it.profit.is_finite() && it.profit >= 0.0) {
            return Err(Error::Invalid(format!(
                "item `{}` has invalid profit {}",
                it.name, it.profit
            )));
        }
    }
    let n = inst.items.len();
    let w = inst.capacity as usize;
    let mut table = vec![vec![0.0; w + 1]; n + 1];
    let mut choice = vec![vec![0u64; w + 1]; n];
    for i in (0..n).rev() {
        let item = &inst.items[i];
        let wi = item.weight as usize;
        for x in 0..=w {
            let mut best = table[i + 1][x];
            let mut best_m = 0;
            let mut m = 1;
            while m * wi <= x {
                let value = item.profit * m as f64 + table[i + 1][x - m * wi];
                if value > best {
                    best = value;
                    best_m = m as u64;
                }
                m += 1;
            }
            table[i][x] = best;
            choice[i][x] = best_m;
        }
    }
    let mut counts = Vec::with_capacity(n);
    let mut x = w;
    for (i, item) in inst.items.iter().enumerate() {
        let m = choice[i][x];
        counts.push(m);
        x -= m as usize * item.weight as usize;
    }
    Ok(LoadingSolution {
        counts,
        objective: table[0][w],
        table,
    })
}
