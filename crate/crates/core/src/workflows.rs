//! End-to-end pipelines: clustering, supervised classification and
//! semi-supervised classification, each followed by uncertainty-based
//! choice among the candidate variable subsets.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{harden, Dataset, KnownLabels, Partition, SoftAssignment, VariableSubset};
use crate::error::{Error, Result};
use crate::gmm::{check_known, fit_classification, select_bic, FitConfig, FittedMixture};
use crate::preprocess::{correlation_matrix, standardize};
use crate::selection::{select_all, within_group_variances, Membership, SelectionResult};

/// Total classification uncertainty, `n - sum_i max_g z_ig`.
pub fn uncertainty(soft: &SoftAssignment) -> f64 {
    uncertainty_over(soft, 0..soft.n_rows())
}

/// Uncertainty restricted to the given rows. Each row contributes the sum
/// of its non-maximal entries, which equals `1 - max` without the
/// cancellation error when the maximum is close to 1.
pub fn uncertainty_over(soft: &SoftAssignment, rows: impl IntoIterator<Item = usize>) -> f64 {
    let probs = soft.probs();
    rows.into_iter()
        .map(|i| {
            let row = probs.row(i);
            let top = row.iter().enumerate().fold(0, |b, (g, &v)| if v > row[b] { g } else { b });
            row.iter().enumerate().filter(|&(g, _)| g != top).map(|(_, &v)| v).sum::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VsccOptions {
    /// Let the fit on all variables compete with the selected subsets.
    pub include_full_set: bool,
}

impl Default for VsccOptions {
    fn default() -> Self {
        VsccOptions {
            include_full_set: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorkflowMode {
    Clustering,
    Supervised,
    SemiSupervised,
}

impl fmt::Display for WorkflowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkflowMode::Clustering => "cluster",
            WorkflowMode::Supervised => "supervised",
            WorkflowMode::SemiSupervised => "semisupervised",
        })
    }
}

/// Why a candidate took no part in the final comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exclusion {
    /// The refit settled on a single component, whose uncertainty is
    /// trivially zero.
    SingleGroup,
    FitFailed(String),
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exclusion::SingleGroup => f.write_str("excluded: refit chose one group"),
            Exclusion::FitFailed(msg) => write!(f, "excluded: fit failed ({msg})"),
        }
    }
}

/// One variable subset together with its refit.
#[derive(Debug, Clone)]
pub struct SubsetCandidate {
    pub subset: VariableSubset,
    pub fit: Option<FittedMixture>,
    /// Uncertainty over the scored rows. `None` when the fit failed.
    pub uncertainty: Option<f64>,
    pub exclusion: Option<Exclusion>,
    /// Wall-clock seconds spent refitting this subset.
    pub runtime_s: f64,
}

impl SubsetCandidate {
    pub fn is_eligible(&self) -> bool {
        self.exclusion.is_none() && self.uncertainty.is_some()
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub standardize: f64,
    pub initial_fit: f64,
    pub selection: f64,
    pub refits: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct VsccReport {
    pub mode: WorkflowMode,
    /// Index of the winner in `candidates`.
    pub chosen: usize,
    /// VSCC subsets in relationship order, then the full set if enabled.
    pub candidates: Vec<SubsetCandidate>,
    /// The fit on all variables that seeded the selection.
    pub init_fit: FittedMixture,
    pub selection: SelectionResult,
    /// Rows over which uncertainty was summed.
    pub scored_rows: Vec<usize>,
    pub timings: StageTimings,
    pub config: FitConfig,
    pub options: VsccOptions,
}

impl VsccReport {
    pub fn chosen(&self) -> &SubsetCandidate {
        &self.candidates[self.chosen]
    }

    pub fn chosen_fit(&self) -> &FittedMixture {
        self.chosen()
            .fit
            .as_ref()
            .expect("the chosen candidate always has a fit")
    }

    /// Hard labels of every row under the chosen fit.
    pub fn chosen_partition(&self) -> Partition {
        harden(&self.chosen_fit().assignment)
    }

    /// Chosen-fit membership probabilities of the scored rows only.
    pub fn scored_assignment(&self) -> SoftAssignment {
        self.chosen_fit().assignment.select_rows(&self.scored_rows)
    }

    pub fn full_set(&self) -> Option<&SubsetCandidate> {
        self.candidates
            .iter()
            .find(|c| c.subset.origin == crate::data::SubsetOrigin::FullSet)
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn score(fit: Result<FittedMixture>, rows: &[usize], exclude_single: bool) -> (Option<FittedMixture>, Option<f64>, Option<Exclusion>) {
    match fit {
        Ok(fit) => {
            let u = uncertainty_over(&fit.assignment, rows.iter().copied());
            let exclusion = (exclude_single && fit.groups == 1).then_some(Exclusion::SingleGroup);
            (Some(fit), Some(u), exclusion)
        }
        Err(e) => (None, None, Some(Exclusion::FitFailed(e.to_string()))),
    }
}

/// Refits each subset with `refit` (in parallel) and appends the full-set
/// candidate built from `full_fit` when enabled.
fn build_candidates<F>(
    ds: &Dataset,
    selection: &SelectionResult,
    full_fit: &FittedMixture,
    rows: &[usize],
    exclude_single: bool,
    options: VsccOptions,
    refit: F,
) -> Vec<SubsetCandidate>
where
    F: Fn(&Dataset) -> Result<FittedMixture> + Sync,
{
    let p = ds.n_cols();
    let mut candidates: Vec<SubsetCandidate> = selection
        .subsets
        .par_iter()
        .map(|subset| {
            let start = Instant::now();
            let cols = subset.sorted_indices();
            let fit = if cols.len() == p {
                Ok(full_fit.clone())
            } else {
                refit(&ds.select_columns(&cols))
            };
            let (fit, uncertainty, exclusion) = score(fit, rows, exclude_single);
            SubsetCandidate {
                subset: subset.clone(),
                fit,
                uncertainty,
                exclusion,
                runtime_s: secs(start),
            }
        })
        .collect();
    if options.include_full_set {
        let (fit, uncertainty, exclusion) = score(Ok(full_fit.clone()), rows, exclude_single);
        candidates.push(SubsetCandidate {
            subset: VariableSubset::full(p),
            fit,
            uncertainty,
            exclusion,
            runtime_s: 0.0,
        });
    }
    candidates
}

/// Lowest uncertainty wins; ties go to fewer variables, then to the lower
/// relationship order (full set last).
fn choose(candidates: &[SubsetCandidate]) -> Result<usize> {
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_eligible())
        .min_by(|(_, a), (_, b)| {
            let ua = a.uncertainty.unwrap_or(f64::INFINITY);
            let ub = b.uncertainty.unwrap_or(f64::INFINITY);
            ua.total_cmp(&ub)
                .then(a.subset.len().cmp(&b.subset.len()))
                .then(a.subset.origin.rank().cmp(&b.subset.origin.rank()))
        })
        .map(|(i, _)| i)
        .ok_or(Error::AllCandidatesExcluded)
}

/// Unsupervised pipeline. The data are standardized, clustered on all
/// variables with (G, model) chosen by BIC, and the hardened clustering
/// drives variable selection. Each selected subset is then reclustered
/// from scratch.
pub fn run_clustering(ds: &Dataset, cfg: &FitConfig, options: VsccOptions) -> Result<VsccReport> {
    cfg.validate()?;
    let total = Instant::now();
    let t = Instant::now();
    let x = standardize(ds)?;
    let t_std = secs(t);

    let t = Instant::now();
    let init_fit = select_bic(&x, cfg)?;
    let t_init = secs(t);
    if init_fit.groups == 1 {
        return Err(Error::InitialSolutionHasOneGroup);
    }

    let t = Instant::now();
    let z = harden(&init_fit.assignment).compact();
    let w = within_group_variances(&x, Membership::Hard(&z))?;
    let rho = correlation_matrix(&x)?;
    let selection = select_all(&w, &rho);
    let t_sel = secs(t);

    let t = Instant::now();
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let candidates = build_candidates(&x, &selection, &init_fit, &rows, true, options, |sub| {
        select_bic(sub, cfg)
    });
    let t_refit = secs(t);

    let chosen = choose(&candidates)?;
    Ok(VsccReport {
        mode: WorkflowMode::Clustering,
        chosen,
        candidates,
        init_fit,
        selection,
        scored_rows: rows,
        timings: StageTimings {
            standardize: t_std,
            initial_fit: t_init,
            selection: t_sel,
            refits: t_refit,
            total: secs(total),
        },
        config: cfg.clone(),
        options,
    })
}

fn check_classes(ds: &Dataset, known: &KnownLabels) -> Result<()> {
    if known.len() != ds.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_rows(),
            found: known.len(),
        });
    }
    if known.n_groups() < 2 {
        return Err(Error::InvalidConfig(
            "classification needs at least 2 declared classes".into(),
        ));
    }
    check_known(known)?;
    for (g, &c) in known.known_counts().iter().enumerate() {
        if c < 2 {
            return Err(Error::SparseKnownGroup {
                group: g + 1,
                count: c,
            });
        }
    }
    Ok(())
}

/// Supervised pipeline. Within-group variances come from the labeled rows
/// alone; every subset is refitted by model-based classification and
/// scored on the unlabeled rows.
pub fn run_supervised(ds: &Dataset, known: &KnownLabels, cfg: &FitConfig, options: VsccOptions) -> Result<VsccReport> {
    run_classification(ds, known, cfg, options, WorkflowMode::Supervised)
}

/// Semi-supervised pipeline. A first classification on all variables
/// estimates the unlabeled rows; known and estimated labels together then
/// drive the within-group variances.
pub fn run_semisupervised(ds: &Dataset, known: &KnownLabels, cfg: &FitConfig, options: VsccOptions) -> Result<VsccReport> {
    run_classification(ds, known, cfg, options, WorkflowMode::SemiSupervised)
}

fn run_classification(
    ds: &Dataset,
    known: &KnownLabels,
    cfg: &FitConfig,
    options: VsccOptions,
    mode: WorkflowMode,
) -> Result<VsccReport> {
    cfg.validate()?;
    check_classes(ds, known)?;
    let total = Instant::now();
    let t = Instant::now();
    let x = standardize(ds)?;
    let t_std = secs(t);

    let t = Instant::now();
    let init_fit = fit_classification(&x, known, cfg)?;
    let t_init = secs(t);

    let t = Instant::now();
    let w = match mode {
        WorkflowMode::SemiSupervised => {
            let estimated = harden(&init_fit.assignment);
            let labels: Vec<usize> = known
                .labels()
                .iter()
                .zip(estimated.labels())
                .map(|(k, &e)| k.unwrap_or(e))
                .collect();
            let z = Partition::new(labels, known.n_groups())?;
            within_group_variances(&x, Membership::Hard(&z))?
        }
        _ => {
            let rows = known.known_rows();
            // the labeled rows are rescaled on their own so W is a share of
            // their variance
            let labeled = standardize(&x.select_rows(&rows))?;
            within_group_variances(&labeled, Membership::Hard(&known.known_partition()))?
        }
    };
    let rho = correlation_matrix(&x)?;
    let selection = select_all(&w, &rho);
    let t_sel = secs(t);

    let t = Instant::now();
    let rows = known.unknown_rows();
    let candidates = build_candidates(&x, &selection, &init_fit, &rows, false, options, |sub| {
        fit_classification(sub, known, cfg)
    });
    let t_refit = secs(t);

    let chosen = choose(&candidates)?;
    Ok(VsccReport {
        mode,
        chosen,
        candidates,
        init_fit,
        selection,
        scored_rows: rows,
        timings: StageTimings {
            standardize: t_std,
            initial_fit: t_init,
            selection: t_sel,
            refits: t_refit,
            total: secs(total),
        },
        config: cfg.clone(),
        options,
    })
}
