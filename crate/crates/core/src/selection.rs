//! Within-group variances and stepwise variable selection under the
//! variance-correlation rules `|rho| < 1 - W^m`, `m = 1..=5`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Partition, SoftAssignment, SubsetOrigin, VariableSubset};
use crate::error::{Error, Result};
use crate::preprocess::CorrelationMatrix;

/// Order of the polynomial in the acceptance threshold `1 - W^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relationship {
    Linear,
    Quadratic,
    Cubic,
    Quartic,
    Quintic,
}

impl Relationship {
    pub const ALL: [Relationship; 5] = [
        Relationship::Linear,
        Relationship::Quadratic,
        Relationship::Cubic,
        Relationship::Quartic,
        Relationship::Quintic,
    ];

    pub fn order(self) -> i32 {
        self as i32 + 1
    }

    pub fn from_order(m: i32) -> Option<Self> {
        Self::ALL.get(usize::try_from(m - 1).ok()?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Relationship::Linear => "Linear",
            Relationship::Quadratic => "Quadratic",
            Relationship::Cubic => "Cubic",
            Relationship::Quartic => "Quartic",
            Relationship::Quintic => "Quintic",
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Relationship {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown relationship {s:?}")))
    }
}

/// Group membership used to compute within-group variances.
#[derive(Debug, Clone, Copy)]
pub enum Membership<'a> {
    Hard(&'a Partition),
    Soft(&'a SoftAssignment),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipKind {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinGroupVariances {
    pub w: Vec<f64>,
    pub source: MembershipKind,
}

impl WithinGroupVariances {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Column indices by ascending W; equal values keep column order.
    pub fn ascending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.w.len()).collect();
        order.sort_by(|&a, &b| self.w[a].total_cmp(&self.w[b]));
        order
    }
}

/// `W_j = sum_g sum_i z_ig (x_ij - mu_gj)^2 / n`, with `mu_gj` the
/// (weighted) group mean. The denominator is `n`, not `n - 1`.
pub fn within_group_variances(ds: &Dataset, z: Membership<'_>) -> Result<WithinGroupVariances> {
    let n = ds.n_rows();
    let (groups, rows, source) = match z {
        Membership::Hard(p) => (p.n_groups(), p.len(), MembershipKind::Hard),
        Membership::Soft(s) => (s.n_groups(), s.n_rows(), MembershipKind::Soft),
    };
    if rows != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rows,
        });
    }
    let weight = |i: usize, g: usize| -> f64 {
        match z {
            Membership::Hard(p) => {
                if p.labels()[i] == g + 1 {
                    1.0
                } else {
                    0.0
                }
            }
            Membership::Soft(s) => s.probs()[(i, g)],
        }
    };

    let mut totals = vec![0.0; groups];
    for (g, total) in totals.iter_mut().enumerate() {
        *total = (0..n).map(|i| weight(i, g)).sum();
        if *total <= 0.0 {
            return Err(Error::EmptyGroup { group: g + 1 });
        }
    }

    let x = ds.values();
    let w = (0..ds.n_cols())
        .map(|j| {
            let mut scatter = 0.0;
            for (g, &total) in totals.iter().enumerate() {
                let mean = (0..n).map(|i| weight(i, g) * x[(i, j)]).sum::<f64>() / total;
                scatter += (0..n)
                    .map(|i| {
                        let d = x[(i, j)] - mean;
                        weight(i, g) * d * d
                    })
                    .sum::<f64>();
            }
            scatter / n as f64
        })
        .collect();
    Ok(WithinGroupVariances { w, source })
}

/// Correlation bound a candidate with within-group variance `w` must stay
/// under. Negative when `w > 1`, in which case nothing passes.
pub fn threshold(rel: Relationship, w: f64) -> f64 {
    1.0 - w.powi(rel.order())
}

/// Greedy pass over the variables in ascending-W order. The first variable
/// always enters; each later one enters only if its absolute correlation
/// with every variable already selected is strictly below the threshold.
pub fn select_variables(
    w: &WithinGroupVariances,
    rho: &CorrelationMatrix,
    rel: Relationship,
) -> VariableSubset {
    select_in_order(&w.ascending_order(), &w.w, rho, rel)
}

fn select_in_order(
    order: &[usize],
    w: &[f64],
    rho: &CorrelationMatrix,
    rel: Relationship,
) -> VariableSubset {
    let mut selected: Vec<usize> = Vec::with_capacity(order.len());
    for &k in order {
        let bound = threshold(rel, w[k]);
        if selected.is_empty() || selected.iter().all(|&r| rho.get(k, r).abs() < bound) {
            selected.push(k);
        }
    }
    VariableSubset {
        indices: selected,
        origin: SubsetOrigin::Vscc(rel),
    }
}

/// Outcome of running all five relationships.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Distinct subsets, each tagged with the lowest-order relationship
    /// that produced it.
    pub subsets: Vec<VariableSubset>,
    /// For each relationship (in order), the position of its subset in
    /// `subsets`.
    pub by_relationship: [usize; 5],
    pub w: WithinGroupVariances,
    pub sorted_order: Vec<usize>,
}

impl SelectionResult {
    pub fn subset_for(&self, rel: Relationship) -> &VariableSubset {
        &self.subsets[self.by_relationship[rel.order() as usize - 1]]
    }
}

pub fn select_all(w: &WithinGroupVariances, rho: &CorrelationMatrix) -> SelectionResult {
    let order = w.ascending_order();
    let mut subsets: Vec<VariableSubset> = Vec::new();
    let mut by_relationship = [0; 5];
    for (slot, rel) in by_relationship.iter_mut().zip(Relationship::ALL) {
        let s = select_in_order(&order, &w.w, rho, rel);
        let key = s.sorted_indices();
        *slot = match subsets.iter().position(|t| t.sorted_indices() == key) {
            Some(pos) => pos,
            None => {
                subsets.push(s);
                subsets.len() - 1
            }
        };
    }
    SelectionResult {
        subsets,
        by_relationship,
        w: w.clone(),
        sorted_order: order,
    }
}
