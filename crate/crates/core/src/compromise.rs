//! Minmax compromise among agents with conflicting payoffs.
//!
//! Each agent's shortfall from its best attainable payoff is computed for
//! every situation. Within a situation the shortfalls are sorted; the
//! situation whose largest shortfall is smallest wins, and ties are broken
//! by the next-largest shortfall, and so on.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_QUANTUM: f64 = 1e-9;

/// Rows are agents, columns are situations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    values: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl PayoffMatrix {
    pub fn new(values: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        check_matrix(&values, labels.len())?;
        Ok(Self { values, labels })
    }

    /// Builds a matrix with labels `s1, s2, ...`.
    pub fn unlabeled(values: Vec<Vec<f64>>) -> Result<Self> {
        let m = values.first().map_or(0, Vec::len);
        Self::new(values, (1..=m).map(|i| format!("s{i}")).collect())
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn agents(&self) -> usize {
        self.values.len()
    }

    pub fn situations(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, agent: usize, situation: usize) -> f64 {
        self.values[agent][situation]
    }

    pub fn column(&self, situation: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[situation]).collect()
    }
}

fn check_matrix(values: &[Vec<f64>], m: usize) -> Result<()> {
    if values.is_empty() || m == 0 {
        return Err(Error::Invalid(
            "payoff matrix must have at least one row and one column".into(),
        ));
    }
    for (i, row) in values.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Invalid(format!(
                "row {} has {} entries, expected {m}",
                i + 1,
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "entry ({}, {}) is not finite",
                i + 1,
                j + 1
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    #[default]
    None,
    /// Divide each agent's shortfalls by the magnitude of its ideal payoff.
    ByIdeal,
}

impl FromStr for Normalize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "by_ideal" => Ok(Self::ByIdeal),
            other => Err(Error::Invalid(format!("unknown normalization `{other}`"))),
        }
    }
}

impl fmt::Display for Normalize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::ByIdeal => "by_ideal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompromiseOptions {
    pub normalize: Normalize,
    /// Values are rounded to a multiple of this before being compared.
    pub quantum: f64,
}

impl Default for CompromiseOptions {
    fn default() -> Self {
        Self {
            normalize: Normalize::None,
            quantum: DEFAULT_QUANTUM,
        }
    }
}

/// One step of the tie-breaking climb.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    /// Position in the sorted residual column, `0` being the largest.
    pub rank: usize,
    /// Minimum found at this rank among the surviving situations.
    pub value: f64,
    /// Situations still tied after this step.
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Each situation's residuals in ascending order.
    pub sorted_columns: Vec<Vec<f64>>,
    pub selected: Vec<usize>,
    pub trace: Vec<TraceStep>,
}

impl Selection {
    /// The largest residual of the selected situation(s).
    pub fn deciding_value(&self) -> f64 {
        self.trace[0].value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompromiseResult {
    pub ideal: Vec<f64>,
    pub residuals: Vec<Vec<f64>>,
    /// The residuals the selection ran on; differs from `residuals` only
    /// under normalization.
    pub scored: Vec<Vec<f64>>,
    pub selection: Selection,
}

impl CompromiseResult {
    pub fn selected(&self) -> &[usize] {
        &self.selection.selected
    }
}

pub fn ideal_vector(matrix: &PayoffMatrix) -> Vec<f64> {
    matrix
        .values
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

pub fn residual_matrix(matrix: &PayoffMatrix, ideal: &[f64]) -> Result<Vec<Vec<f64>>> {
    if ideal.len() != matrix.agents() {
        return Err(Error::Invalid(format!(
            "ideal vector has {} entries for {} agents",
            ideal.len(),
            matrix.agents()
        )));
    }
    Ok(matrix
        .values
        .iter()
        .zip(ideal)
        .map(|(row, &m)| row.iter().map(|&a| m - a).collect())
        .collect())
}

fn quantize(v: f64, quantum: f64) -> f64 {
    if quantum > 0.0 {
        (v / quantum).round()
    } else {
        v
    }
}

/// Runs the sorted-minmax rule on a residual table given directly.
pub fn select_from_residuals(residuals: &[Vec<f64>], quantum: f64) -> Result<Selection> {
    let m = residuals.first().map_or(0, Vec::len);
    check_matrix(residuals, m)?;
    if !(quantum >= 0.0 && quantum.is_finite()) {
        return Err(Error::Invalid(format!(
            "quantum must be a finite non-negative number, got {quantum}"
        )));
    }
    let l = residuals.len();
    let sorted_columns: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut col: Vec<f64> = residuals.iter().map(|row| row[j]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();

    let mut survivors: Vec<usize> = (0..m).collect();
    let mut trace = Vec::new();
    for rank in 0..l {
        let pos = l - 1 - rank;
        let key = |j: usize| quantize(sorted_columns[j][pos], quantum);
        let best = survivors
            .iter()
            .map(|&j| key(j))
            .min_by(f64::total_cmp)
            .expect("at least one survivor");
        survivors.retain(|&j| key(j).total_cmp(&best) == Ordering::Equal);
        let value = sorted_columns[survivors[0]][pos];
        trace.push(TraceStep {
            rank,
            value,
            survivors: survivors.clone(),
        });
        if survivors.len() == 1 {
            break;
        }
    }
    Ok(Selection {
        sorted_columns,
        selected: survivors,
        trace,
    })
}

pub fn compromise_select(
    matrix: &PayoffMatrix,
    options: &CompromiseOptions,
) -> Result<CompromiseResult> {
    let ideal = ideal_vector(matrix);
    let residuals = residual_matrix(matrix, &ideal)?;
    let scored = match options.normalize {
        Normalize::None => residuals.clone(),
        Normalize::ByIdeal => residuals
            .iter()
            .zip(&ideal)
            .map(|(row, &m)| {
                let scale = if m == 0.0 { 1.0 } else { m.abs() };
                row.iter().map(|r| r / scale).collect()
            })
            .collect(),
    };
    let selection = select_from_residuals(&scored, options.quantum)?;
    Ok(CompromiseResult {
        ideal,
        residuals,
        scored,
        selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(values: Vec<Vec<f64>>) -> PayoffMatrix {
        PayoffMatrix::unlabeled(values).unwrap()
    }

    #[test]
    fn ideal_examples() {
        assert_eq!(
            ideal_vector(&matrix(vec![vec![1.0, 3.0], vec![5.0, 2.0]])),
            vec![3.0, 5.0]
        );
        assert_eq!(ideal_vector(&matrix(vec![vec![4.0; 3]; 2])), vec![4.0, 4.0]);
    }

    #[test]
    fn ideal_column_has_zero_residual() {
        let g = matrix(vec![vec![1.0, 3.0], vec![5.0, 2.0]]);
        let r = residual_matrix(&g, &ideal_vector(&g)).unwrap();
        assert_eq!(r, vec![vec![2.0, 0.0], vec![0.0, 3.0]]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PayoffMatrix::unlabeled(vec![]).is_err());
        assert!(PayoffMatrix::unlabeled(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(PayoffMatrix::unlabeled(vec![vec![f64::NAN]]).is_err());
        assert!(PayoffMatrix::new(vec![vec![1.0]], vec!["a".into(), "b".into()]).is_err());
    }

    #[test]
    fn identical_best_columns_form_compromise_set() {
        let g = matrix(vec![vec![5.0, 5.0, 1.0], vec![3.0, 3.0, 4.0]]);
        let res = compromise_select(&g, &CompromiseOptions::default()).unwrap();
        assert_eq!(res.selected(), &[0, 1]);
        assert_eq!(res.selection.trace.len(), 2);
    }

    #[test]
    fn single_agent_maximizes() {
        let g = matrix(vec![vec![3.0, 9.0, 4.0]]);
        let res = compromise_select(&g, &CompromiseOptions::default()).unwrap();
        assert_eq!(res.selected(), &[1]);
    }

    #[test]
    fn tie_climbs_to_next_largest() {
        // both columns have max residual 5; second-largest decides
        let r = vec![vec![5.0, 5.0], vec![2.0, 1.0], vec![0.0, 0.0]];
        let sel = select_from_residuals(&r, DEFAULT_QUANTUM).unwrap();
        assert_eq!(sel.selected, vec![1]);
        assert_eq!(sel.trace[0].survivors, vec![0, 1]);
        assert_eq!(sel.trace[1].value, 1.0);
    }

    #[test]
    fn quantum_merges_near_ties() {
        let r = vec![vec![5.0, 5.0 + 1e-12], vec![3.0, 2.0]];
        assert_eq!(select_from_residuals(&r, 1e-9).unwrap().selected, vec![1]);
        assert_eq!(select_from_residuals(&r, 0.0).unwrap().selected, vec![0]);
    }

    #[test]
    fn normalization_changes_scale() {
        let g = matrix(vec![vec![1000.0, 900.0], vec![10.0, 5.0]]);
        let plain = compromise_select(&g, &CompromiseOptions::default()).unwrap();
        assert_eq!(plain.selected(), &[0]);
        let opts = CompromiseOptions {
            normalize: Normalize::ByIdeal,
            ..Default::default()
        };
        let scaled = compromise_select(&g, &opts).unwrap();
        assert!((scaled.scored[1][1] - 0.5).abs() < 1e-12);
        assert!((scaled.scored[0][1] - 0.1).abs() < 1e-12);
        assert_eq!(scaled.selected(), &[0]);
    }

    fn grid_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..4, 1usize..6).prop_flat_map(|(l, m)| {
            proptest::collection::vec(proptest::collection::vec(-20i32..20, m), l).prop_map(
                |rows| {
                    rows.into_iter()
                        .map(|r| r.into_iter().map(|v| v as f64 * 0.5).collect())
                        .collect()
                },
            )
        })
    }

    /// Lexicographic comparison of sorted columns, largest entry first.
    fn from_bottom(a: &[f64], b: &[f64]) -> Ordering {
        a.iter()
            .rev()
            .zip(b.iter().rev())
            .fold(Ordering::Equal, |acc, (x, y)| acc.then(x.total_cmp(y)))
    }

    proptest! {
        #[test]
        fn residuals_nonnegative_with_row_zero(values in grid_matrix()) {
            let g = matrix(values);
            let r = residual_matrix(&g, &ideal_vector(&g)).unwrap();
            for row in &r {
                prop_assert!(row.iter().all(|&v| v >= 0.0));
                prop_assert!(row.contains(&0.0));
            }
        }

        #[test]
        fn row_shift_does_not_change_selection(values in grid_matrix(), shift in -50i32..50) {
            let g = matrix(values.clone());
            let shifted: Vec<Vec<f64>> = values
                .iter()
                .enumerate()
                .map(|(i, row)| row.iter().map(|v| v + (shift * (i as i32 + 1)) as f64).collect())
                .collect();
            let a = compromise_select(&g, &CompromiseOptions::default()).unwrap();
            let b = compromise_select(&matrix(shifted), &CompromiseOptions::default()).unwrap();
            prop_assert_eq!(a.residuals, b.residuals);
            prop_assert_eq!(a.selection.selected, b.selection.selected);
        }

        #[test]
        fn column_permutation_relabels_selection(values in grid_matrix(), seed in any::<u64>()) {
            let m = values[0].len();
            let mut perm: Vec<usize> = (0..m).collect();
            // deterministic shuffle from the seed
            let mut x = seed | 1;
            for i in (1..m).rev() {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                perm.swap(i, (x % (i as u64 + 1)) as usize);
            }
            let permuted: Vec<Vec<f64>> = values
                .iter()
                .map(|row| perm.iter().map(|&j| row[j]).collect())
                .collect();
            let a = compromise_select(&matrix(values), &CompromiseOptions::default()).unwrap();
            let b = compromise_select(&matrix(permuted), &CompromiseOptions::default()).unwrap();
            let mut mapped: Vec<usize> = b.selection.selected.iter().map(|&j| perm[j]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(a.selection.selected, mapped);
        }

        #[test]
        fn selected_columns_are_minimal_from_bottom(values in grid_matrix()) {
            let res = compromise_select(&matrix(values), &CompromiseOptions::default()).unwrap();
            let cols = &res.selection.sorted_columns;
            let best = res.selection.selected[0];
            for j in 0..cols.len() {
                let ord = from_bottom(&cols[best], &cols[j]);
                prop_assert!(ord != Ordering::Greater);
                prop_assert_eq!(ord == Ordering::Equal, res.selection.selected.contains(&j));
            }
        }
    }
}
