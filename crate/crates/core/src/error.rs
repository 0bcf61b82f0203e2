use std::fmt;

use thiserror::Error;

/// A single problem found while validating a raw matrix. Rows and columns
/// are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonFiniteEntry { row: usize, col: usize },
    DuplicateName(String),
    NameCountMismatch { expected: usize, found: usize },
    TooFewRows { found: usize },
    EmptyMatrix,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteEntry { row, col } => {
                write!(f, "non-finite entry at row {row}, column {col}")
            }
            Violation::DuplicateName(name) => write!(f, "duplicate variable name {name:?}"),
            Violation::NameCountMismatch { expected, found } => {
                write!(f, "expected {expected} variable names, found {found}")
            }
            Violation::TooFewRows { found } => {
                write!(f, "at least 2 observations are required, found {found}")
            }
            Violation::EmptyMatrix => write!(f, "matrix has no entries"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {}", join_violations(.0))]
    InvalidDataset(Vec<Violation>),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid soft assignment: {0}")]
    InvalidAssignment(String),

    #[error("column {col} is constant and cannot be standardized")]
    ConstantColumn { col: usize },

    #[error("group {group} has no members")]
    EmptyGroup { group: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("partitions have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{n} observations are too few for {groups} components")]
    TooFewObservations { n: usize, groups: usize },

    #[error("every model in the search grid failed to fit")]
    AllFitsFailed,

    #[error("known labels contain no observation of group {group}")]
    EmptyKnownGroup { group: usize },

    #[error("known labels contain only {count} observation(s) of group {group}; at least 2 are needed")]
    SparseKnownGroup { group: usize, count: usize },

    #[error(
        "the initial clustering found a single group, so within-group variances are undefined; \
         rerun with a minimum of 2 groups"
    )]
    InitialSolutionHasOneGroup,

    #[error("every candidate subset was excluded from comparison")]
    AllCandidatesExcluded,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
