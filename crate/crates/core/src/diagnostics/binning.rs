use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ScoredDataset;
use crate::error::{domain, Error, Result};

/// Maximum number of joint cells when binning score vectors.
pub const MAX_CELLS: usize = 10_000;
/// Joint cells with fewer rows are merged into their successor.
pub const MIN_CELL_ROWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binning {
    /// `k` quantile bins. Identical scores are never split: a tie group goes
    /// to the bin of its first (lowest-ranked) row.
    EqualCount(usize),
    /// `k` bins of width `1/k` on `[0, 1]`.
    EqualWidth(usize),
    /// One bin per distinct score value.
    Distinct,
}

impl Default for Binning {
    fn default() -> Self {
        Self::EqualCount(10)
    }
}

impl Binning {
    fn check(self) -> Result<()> {
        match self {
            Self::EqualCount(k) | Self::EqualWidth(k) if k < 2 => {
                Err(domain(format!("bin count must be >= 2, got {k}")))
            }
            _ => Ok(()),
        }
    }
}

/// Row partition produced by a binning.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bins {
    /// Row indices per nonempty bin, bins in increasing score order.
    pub groups: Vec<Vec<usize>>,
    /// Requested bins that received no rows.
    pub dropped_empty: usize,
    /// Joint cells folded into a neighbour for having too few rows.
    pub merged: usize,
}

/// Row indices ordered by `(value, row)`.
fn stable_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.par_sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Bin index per row; `None` where a bin count does not apply (distinct).
fn assign(values: &[f64], binning: Binning) -> (Vec<usize>, usize) {
    let n = values.len();
    match binning {
        Binning::EqualCount(k) => {
            let order = stable_order(values);
            let mut out = vec![0; n];
            let mut start = 0;
            while start < n {
                let v = values[order[start]];
                let mut end = start + 1;
                while end < n && values[order[end]] == v {
                    end += 1;
                }
                let bin = (start as u128 * k as u128 / n as u128) as usize;
                for &row in &order[start..end] {
                    out[row] = bin;
                }
                start = end;
            }
            (out, k)
        }
        Binning::EqualWidth(k) => {
            let out = values
                .iter()
                .map(|&v| ((v * k as f64).floor().max(0.0) as usize).min(k - 1))
                .collect();
            (out, k)
        }
        Binning::Distinct => {
            let order = stable_order(values);
            let mut out = vec![0; n];
            let mut bin = 0;
            for (i, &row) in order.iter().enumerate() {
                if i > 0 && values[row] != values[order[i - 1]] {
                    bin += 1;
                }
                out[row] = bin;
            }
            (out, if n == 0 { 0 } else { bin + 1 })
        }
    }
}

/// Partitions rows by a scalar score.
pub fn bin_scalar(values: &[f64], binning: Binning) -> Result<Bins> {
    binning.check()?;
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (assignment, k) = assign(values, binning);
    let mut groups = vec![Vec::new(); k];
    for (row, &bin) in assignment.iter().enumerate() {
        groups[bin].push(row);
    }
    let before = groups.len();
    groups.retain(|g| !g.is_empty());
    Ok(Bins {
        dropped_empty: before - groups.len(),
        groups,
        merged: 0,
    })
}

/// Per-coordinate bins for score vectors so that the joint grid stays within
/// [`MAX_CELLS`].
pub fn per_coordinate_bins(k: usize, n_coords: usize) -> usize {
    let mut per = k.max(1);
    while per > 1 && (per as f64).powi(n_coords as i32) > MAX_CELLS as f64 {
        per -= 1;
    }
    per
}

/// Partitions multi-class rows into joint cells of per-coordinate bins.
pub fn bin_vectors(data: &ScoredDataset, binning: Binning) -> Result<Bins> {
    binning.check()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.n_classes();
    if let Binning::Distinct = binning {
        let mut cells: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
        for row in 0..data.len() {
            let key = (0..n).map(|c| data.class_score(row, c).to_bits()).collect();
            cells.entry(key).or_default().push(row);
        }
        return Ok(Bins {
            groups: cells.into_values().collect(),
            dropped_empty: 0,
            merged: 0,
        });
    }

    let per = match binning {
        Binning::EqualCount(k) | Binning::EqualWidth(k) => per_coordinate_bins(k, n),
        Binning::Distinct => unreachable!(),
    };
    let coord_bins: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|c| {
            let column: Vec<f64> = (0..data.len()).map(|r| data.class_score(r, c)).collect();
            if per < 2 {
                vec![0; column.len()]
            } else {
                let b = match binning {
                    Binning::EqualCount(_) => Binning::EqualCount(per),
                    _ => Binning::EqualWidth(per),
                };
                assign(&column, b).0
            }
        })
        .collect();

    let mut cells: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for row in 0..data.len() {
        let key = coord_bins.iter().map(|b| b[row]).collect();
        cells.entry(key).or_default().push(row);
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut pending: Vec<usize> = Vec::new();
    let mut merged = 0;
    for (_, rows) in cells {
        if !pending.is_empty() {
            merged += 1;
        }
        pending.extend(rows);
        if pending.len() >= MIN_CELL_ROWS {
            groups.push(std::mem::take(&mut pending));
        }
    }
    if !pending.is_empty() {
        match groups.last_mut() {
            Some(last) => {
                merged += 1;
                last.extend(pending);
            }
            None => groups.push(pending),
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(Bins {
        groups,
        dropped_empty: 0,
        merged,
    })
}

/// Bins a dataset on its positive-class score (binary) or score vector.
pub fn bin_dataset(data: &ScoredDataset, binning: Binning) -> Result<Bins> {
    match data.binary_scores() {
        Some(scores) => bin_scalar(scores, binning),
        None => bin_vectors(data, binning),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_count_deciles() {
        let values: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let bins = bin_scalar(&values, Binning::EqualCount(10)).unwrap();
        assert_eq!(bins.groups.len(), 10);
        assert!(bins.groups.iter().all(|g| g.len() == 10));
    }

    #[test]
    fn ties_never_split_and_join_lower_bin() {
        // 0.5 occupies ranks 3..7 and straddles the boundary at rank 5
        let values = [0.1, 0.2, 0.3, 0.5, 0.5, 0.5, 0.5, 0.8, 0.9, 0.95];
        let bins = bin_scalar(&values, Binning::EqualCount(2)).unwrap();
        assert_eq!(bins.groups, vec![vec![0, 1, 2, 3, 4, 5, 6], vec![7, 8, 9]]);
    }

    #[test]
    fn constant_scores_give_single_bin() {
        let bins = bin_scalar(&[0.5; 10], Binning::EqualCount(10)).unwrap();
        assert_eq!(bins.groups.len(), 1);
        assert_eq!(bins.dropped_empty, 9);
    }

    #[test]
    fn equal_width_edges() {
        let bins = bin_scalar(&[0.0, 0.05, 0.5, 1.0], Binning::EqualWidth(10)).unwrap();
        assert_eq!(bins.groups, vec![vec![0, 1], vec![2], vec![3]]);
        assert_eq!(bins.dropped_empty, 7);
    }

    #[test]
    fn distinct_bins() {
        let bins = bin_scalar(&[0.3, 0.1, 0.3, 0.2], Binning::Distinct).unwrap();
        assert_eq!(bins.groups, vec![vec![1], vec![3], vec![0, 2]]);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(bin_scalar(&[0.1], Binning::EqualCount(1)).is_err());
        assert_eq!(
            bin_scalar(&[], Binning::EqualCount(10)).unwrap_err(),
            Error::EmptyDataset
        );
    }

    #[test]
    fn per_coordinate_cap() {
        assert_eq!(per_coordinate_bins(10, 2), 10);
        assert_eq!(per_coordinate_bins(10, 4), 10);
        assert_eq!(per_coordinate_bins(10, 5), 6);
        assert_eq!(per_coordinate_bins(10, 20), 1);
    }

    #[test]
    fn small_cells_are_merged() {
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let a = (i % 50) as f64 / 50.0;
                vec![a, 1.0 - a, 0.5]
            })
            .collect();
        let labels = vec![0; 200];
        let data = ScoredDataset::multi(rows, labels).unwrap();
        let bins = bin_vectors(&data, Binning::EqualCount(10)).unwrap();
        assert!(bins.groups.iter().all(|g| g.len() >= MIN_CELL_ROWS));
        assert_eq!(bins.groups.iter().map(Vec::len).sum::<usize>(), 200);
    }
}
