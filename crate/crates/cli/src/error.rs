use thiserror::Error;

use crate::ingest::IngestError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error(transparent)]
    Core(#[from] vscc_core::Error),

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

/// Broad failure class, reported on stderr and through the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Data,
    Pipeline,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Data => "data",
            Category::Pipeline => "pipeline",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 1,
            Category::Data => 2,
            Category::Pipeline => 3,
        }
    }
}

impl CliError {
    pub fn category(&self) -> Category {
        use vscc_core::Error as E;
        match self {
            CliError::Usage(_) => Category::Usage,
            CliError::Ingest(_) => Category::Data,
            CliError::Output { .. } => Category::Pipeline,
            CliError::Core(e) => match e {
                E::InvalidConfig(_) | E::InvalidSpec(_) => Category::Usage,
                E::InvalidDataset(_)
                | E::InvalidPartition(_)
                | E::ConstantColumn { .. }
                | E::DimensionMismatch { .. }
                | E::LengthMismatch { .. }
                | E::EmptyKnownGroup { .. }
                | E::SparseKnownGroup { .. }
                | E::TooFewObservations { .. } => Category::Data,
                _ => Category::Pipeline,
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.category().exit_code()
    }

    /// Short machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        use vscc_core::Error as E;
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Output { .. } => "OutputError",
            CliError::Ingest(e) => match e {
                IngestError::Io { .. } => "IoError",
                IngestError::ParseError { .. } => "ParseError",
                IngestError::NonNumericColumn(_) => "NonNumericColumn",
                IngestError::UnknownColumn(_) => "UnknownColumn",
                IngestError::Data(_) => "InvalidDataset",
            },
            CliError::Core(e) => match e {
                E::InvalidDataset(_) => "InvalidDataset",
                E::InvalidPartition(_) => "InvalidPartition",
                E::InvalidAssignment(_) => "InvalidAssignment",
                E::ConstantColumn { .. } => "ConstantColumn",
                E::EmptyGroup { .. } => "EmptyGroup",
                E::DimensionMismatch { .. } => "DimensionMismatch",
                E::LengthMismatch { .. } => "LengthMismatch",
                E::DegenerateFit(_) => "DegenerateFit",
                E::TooFewObservations { .. } => "TooFewObservations",
                E::AllFitsFailed => "AllFitsFailed",
                E::EmptyKnownGroup { .. } => "EmptyKnownGroup",
                E::SparseKnownGroup { .. } => "SparseKnownGroup",
                E::InitialSolutionHasOneGroup => "InitialSolutionHasOneGroup",
                E::AllCandidatesExcluded => "AllCandidatesExcluded",
                E::InvalidConfig(_) => "InvalidConfig",
                E::InvalidSpec(_) => "InvalidSpec",
            },
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(vscc_core::Error::InitialSolutionHasOneGroup) => {
                Some("pass --g-min 2 to force at least two groups in the initial fit")
            }
            CliError::Core(vscc_core::Error::AllCandidatesExcluded) => {
                Some("every refit chose a single group; try --g-min 2")
            }
            _ => None,
        }
    }
}
