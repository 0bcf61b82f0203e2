//! Variable selection for model-based clustering and classification.
//!
//! Variables are ranked by their within-group variance under an initial
//! grouping and admitted greedily subject to a correlation bound that
//! loosens as the within-group variance shrinks. Each candidate subset is
//! refitted with a Gaussian mixture and the one with the lowest total
//! classification uncertainty wins.

pub mod data;
pub mod error;
pub mod gmm;
pub mod metrics;
pub mod preprocess;
mod seeds;
pub mod selection;
pub mod simgen;
pub mod workflows;

pub use data::{
    harden, validate_dataset, Dataset, KnownLabels, Partition, SoftAssignment, SubsetOrigin,
    VariableSubset,
};
pub use error::{Error, Result, Violation};
pub use gmm::{
    bic_grid, fit_classification, fit_em, select_bic, CovarianceModel, FitConfig, FittedMixture,
};
pub use metrics::{adjusted_rand_index, ari_labels, rand_index, ContingencyTable};
pub use preprocess::{correlation_matrix, standardize, CorrelationMatrix};
pub use seeds::derive_seed;
pub use selection::{
    select_all, select_variables, threshold, within_group_variances, Membership, Relationship,
    SelectionResult, WithinGroupVariances,
};
pub use simgen::{generate, replicate_study, Pipeline, RepRow, SimInstance, SimSpec, StudySummary};
pub use workflows::{
    run_clustering, run_semisupervised, run_supervised, uncertainty, Exclusion, StageTimings,
    SubsetCandidate, VsccOptions, VsccReport, WorkflowMode,
};
