//! Pair-counting agreement between two partitions.

use crate::data::Partition;
use crate::error::{Error, Result};

/// Cross-tabulation of two partitions of the same observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(a: &Partition, b: &Partition) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let mut counts = vec![vec![0u64; b.n_groups()]; a.n_groups()];
        for (&x, &y) in a.labels().iter().zip(b.labels()) {
            counts[x - 1][y - 1] += 1;
        }
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..b.n_groups())
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        Ok(ContingencyTable {
            counts,
            row_sums,
            col_sums,
            total: a.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn pair_sums(&self) -> (f64, f64, f64, f64) {
        let cells: f64 = self.counts.iter().flatten().map(|&c| choose2(c)).sum();
        let rows: f64 = self.row_sums.iter().map(|&c| choose2(c)).sum();
        let cols: f64 = self.col_sums.iter().map(|&c| choose2(c)).sum();
        (cells, rows, cols, choose2(self.total))
    }
}

fn choose2(k: u64) -> f64 {
    (k as f64) * (k.saturating_sub(1) as f64) / 2.0
}

fn check(a: &Partition, b: &Partition) -> Result<ContingencyTable> {
    let table = ContingencyTable::new(a, b)?;
    if table.total < 2 {
        return Err(Error::InvalidPartition(
            "at least 2 observations are needed to count pairs".into(),
        ));
    }
    Ok(table)
}

/// Fraction of observation pairs on which the two partitions agree
/// (together in both, or apart in both).
pub fn rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let (cells, rows, cols, pairs) = check(a, b)?.pair_sums();
    // agreements = pairs - (rows - cells) - (cols - cells)
    Ok((pairs + 2.0 * cells - rows - cols) / pairs)
}

/// Hubert-Arabie adjusted Rand index. When the adjustment is 0/0 (both
/// partitions put everything in one group, or both use singletons) the
/// value is 1 for identical partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let table = check(a, b)?;
    let (cells, rows, cols, pairs) = table.pair_sums();
    let expected = rows * cols / pairs;
    let max = 0.5 * (rows + cols);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(if same_up_to_relabeling(&table) { 1.0 } else { 0.0 });
    }
    Ok((cells - expected) / denom)
}

fn same_up_to_relabeling(t: &ContingencyTable) -> bool {
    let nonzero_rows = t.row_sums.iter().filter(|&&c| c > 0).count();
    let nonzero_cols = t.col_sums.iter().filter(|&&c| c > 0).count();
    let nonzero_cells = t.counts.iter().flatten().filter(|&&c| c > 0).count();
    nonzero_cells == nonzero_rows && nonzero_cells == nonzero_cols
}

/// ARI on raw 1-based label slices of equal length.
pub fn ari_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    adjusted_rand_index(
        &Partition::from_labels(a.to_vec())?,
        &Partition::from_labels(b.to_vec())?,
    )
}
