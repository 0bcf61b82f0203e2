//! Numeric and label containers shared by every stage of the pipeline.
//!
//! Column indices are 0-based throughout the library. Group labels are
//! 1-based (`1..=G`) wherever they cross an API boundary.

use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::selection::Relationship;

/// Row-sum tolerance accepted by [`SoftAssignment::new`].
pub const ROW_SUM_TOL: f64 = 1e-9;

/// An `n x p` matrix of finite measurements with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: DMatrix<f64>,
    names: Vec<String>,
}

/// Checks every dataset invariant and reports all violations at once.
pub fn validate_dataset(values: DMatrix<f64>, names: Vec<String>) -> Result<Dataset> {
    let mut violations = Vec::new();
    let (n, p) = values.shape();
    if n == 0 || p == 0 {
        violations.push(Violation::EmptyMatrix);
    } else if n < 2 {
        violations.push(Violation::TooFewRows { found: n });
    }
    if names.len() != p {
        violations.push(Violation::NameCountMismatch {
            expected: p,
            found: names.len(),
        });
    }
    let mut seen = HashSet::new();
    let mut reported = HashSet::new();
    for name in &names {
        if !seen.insert(name.as_str()) && reported.insert(name.as_str()) {
            violations.push(Violation::DuplicateName(name.clone()));
        }
    }
    for i in 0..n {
        for j in 0..p {
            if !values[(i, j)].is_finite() {
                violations.push(Violation::NonFiniteEntry {
                    row: i + 1,
                    col: j + 1,
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(Dataset { values, names })
    } else {
        Err(Error::InvalidDataset(violations))
    }
}

impl Dataset {
    pub fn new(values: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        validate_dataset(values, names)
    }

    /// Builds a dataset from row vectors, naming columns `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidConfig("rows have unequal lengths".into()));
        }
        let values = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        validate_dataset(values, names)
    }

    pub(crate) fn from_parts_unchecked(values: DMatrix<f64>, names: Vec<String>) -> Self {
        Dataset { values, names }
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.column(j).into_iter().copied()
    }

    /// Dataset restricted to `cols`, in the order given.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let values = self.values.select_columns(cols.iter());
        let names = cols.iter().map(|&j| self.names[j].clone()).collect();
        Dataset { values, names }
    }

    /// Dataset restricted to `rows`, in the order given. Callers must pass
    /// at least two rows.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        debug_assert!(rows.len() >= 2);
        Dataset {
            values: self.values.select_rows(rows.iter()),
            names: self.names.clone(),
        }
    }
}

/// Hard group labels in `1..=G`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    groups: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(Error::InvalidPartition("group count must be at least 1".into()));
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l == 0 || l > groups)
        {
            return Err(Error::InvalidPartition(format!(
                "label {l} at position {} is outside 1..={groups}",
                i + 1
            )));
        }
        Ok(Partition { labels, groups })
    }

    /// Uses the largest label as the group count.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let groups = labels.iter().copied().max().unwrap_or(0);
        Partition::new(labels, groups)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.groups
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }

    /// Drops empty groups and renumbers the rest in order of their old ids.
    pub fn compact(&self) -> Partition {
        let sizes = self.group_sizes();
        let mut remap = vec![0; self.groups];
        let mut next = 0;
        for (g, &s) in sizes.iter().enumerate() {
            if s > 0 {
                next += 1;
                remap[g] = next;
            }
        }
        Partition {
            labels: self.labels.iter().map(|&l| remap[l - 1]).collect(),
            groups: next.max(1),
        }
    }

    pub fn subset(&self, rows: &[usize]) -> Partition {
        Partition {
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            groups: self.groups,
        }
    }

    /// The 0/1 soft assignment with a single 1 per row.
    pub fn to_soft(&self) -> SoftAssignment {
        let mut probs = DMatrix::zeros(self.labels.len(), self.groups);
        for (i, &l) in self.labels.iter().enumerate() {
            probs[(i, l - 1)] = 1.0;
        }
        SoftAssignment { probs }
    }
}

/// Labels known for some observations only (`None` = unknown).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownLabels {
    labels: Vec<Option<usize>>,
    groups: usize,
}

impl KnownLabels {
    pub fn new(labels: Vec<Option<usize>>, groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(Error::InvalidPartition("group count must be at least 1".into()));
        }
        if let Some(l) = labels.iter().flatten().find(|&&l| l == 0 || l > groups) {
            return Err(Error::InvalidPartition(format!(
                "known label {l} is outside 1..={groups}"
            )));
        }
        Ok(KnownLabels { labels, groups })
    }

    pub fn fully_known(partition: &Partition) -> Self {
        KnownLabels {
            labels: partition.labels().iter().map(|&l| Some(l)).collect(),
            groups: partition.n_groups(),
        }
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.groups
    }

    pub fn known_rows(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_some())
            .collect()
    }

    pub fn unknown_rows(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_none())
            .collect()
    }

    pub fn known_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.groups];
        for &l in self.labels.iter().flatten() {
            counts[l - 1] += 1;
        }
        counts
    }

    /// Labels of the known rows, in row order.
    pub fn known_partition(&self) -> Partition {
        Partition {
            labels: self.labels.iter().flatten().copied().collect(),
            groups: self.groups,
        }
    }
}

/// An `n x G` matrix of membership probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    probs: DMatrix<f64>,
}

impl SoftAssignment {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        if probs.ncols() == 0 {
            return Err(Error::InvalidAssignment("at least one group is required".into()));
        }
        for (i, row) in probs.row_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidAssignment(format!(
                    "row {} has an entry outside [0, 1]",
                    i + 1
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidAssignment(format!(
                    "row {} sums to {s}",
                    i + 1
                )));
            }
        }
        Ok(SoftAssignment { probs })
    }

    pub(crate) fn from_unchecked(probs: DMatrix<f64>) -> Self {
        SoftAssignment { probs }
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn n_rows(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_groups(&self) -> usize {
        self.probs.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> SoftAssignment {
        SoftAssignment {
            probs: self.probs.select_rows(rows.iter()),
        }
    }
}

/// Hard classification by row-wise argmax. Ties go to the lowest group.
pub fn harden(soft: &SoftAssignment) -> Partition {
    let labels = soft
        .probs
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for g in 1..row.len() {
                if row[g] > row[best] {
                    best = g;
                }
            }
            best + 1
        })
        .collect();
    Partition {
        labels,
        groups: soft.n_groups(),
    }
}

/// Where a candidate variable subset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubsetOrigin {
    Vscc(Relationship),
    FullSet,
}

impl SubsetOrigin {
    /// Position used for tie-breaking: relationship order, full set last.
    pub fn rank(self) -> usize {
        match self {
            SubsetOrigin::Vscc(r) => r.order() as usize,
            SubsetOrigin::FullSet => 6,
        }
    }
}

impl fmt::Display for SubsetOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetOrigin::Vscc(r) => write!(f, "{r}"),
            SubsetOrigin::FullSet => f.write_str("FullSet"),
        }
    }
}

impl std::str::FromStr for SubsetOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("fullset") {
            return Ok(SubsetOrigin::FullSet);
        }
        s.parse().map(SubsetOrigin::Vscc)
    }
}

/// Selected column indices in the order the selection algorithm inserted
/// them, plus the rule that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSubset {
    pub indices: Vec<usize>,
    pub origin: SubsetOrigin,
}

impl VariableSubset {
    pub fn full(p: usize) -> Self {
        VariableSubset {
            indices: (0..p).collect(),
            origin: SubsetOrigin::FullSet,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }
}
