//! Gaussian mixture models fitted by EM, with BIC selection over the number
//! of components and six covariance parameterizations.
//!
//! | model              | code | covariance            |
//! |--------------------|------|-----------------------|
//! | `SphericalEqual`   | EII  | `s^2 I`               |
//! | `SphericalVarying` | VII  | `s_g^2 I`             |
//! | `DiagonalEqual`    | EEI  | `diag(d)`             |
//! | `DiagonalVarying`  | VVI  | `diag(d_g)`           |
//! | `FullEqual`        | EEE  | `S`                   |
//! | `FullVarying`      | VVV  | `S_g`                 |
//!
//! BIC is `2 log L - k log n`; larger is better.

mod em;
pub(crate) mod kmeans;

use std::collections::HashSet;
use std::fmt;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, KnownLabels, SoftAssignment};
use crate::error::{Error, Result};
use crate::seeds::derive_seed;
use em::{EmSettings, Params, Prepared};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CovarianceModel {
    SphericalEqual,
    SphericalVarying,
    DiagonalEqual,
    DiagonalVarying,
    FullEqual,
    FullVarying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CovShape {
    Spherical,
    Diagonal,
    Full,
}

impl CovarianceModel {
    pub const ALL: [CovarianceModel; 6] = [
        CovarianceModel::SphericalEqual,
        CovarianceModel::SphericalVarying,
        CovarianceModel::DiagonalEqual,
        CovarianceModel::DiagonalVarying,
        CovarianceModel::FullEqual,
        CovarianceModel::FullVarying,
    ];

    /// Three-letter volume/shape/orientation code.
    pub fn code(self) -> &'static str {
        match self {
            CovarianceModel::SphericalEqual => "EII",
            CovarianceModel::SphericalVarying => "VII",
            CovarianceModel::DiagonalEqual => "EEI",
            CovarianceModel::DiagonalVarying => "VVI",
            CovarianceModel::FullEqual => "EEE",
            CovarianceModel::FullVarying => "VVV",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }

    pub(crate) fn shape(self) -> CovShape {
        match self {
            CovarianceModel::SphericalEqual | CovarianceModel::SphericalVarying => CovShape::Spherical,
            CovarianceModel::DiagonalEqual | CovarianceModel::DiagonalVarying => CovShape::Diagonal,
            CovarianceModel::FullEqual | CovarianceModel::FullVarying => CovShape::Full,
        }
    }

    /// True when all components share one covariance.
    pub fn is_shared(self) -> bool {
        matches!(
            self,
            CovarianceModel::SphericalEqual | CovarianceModel::DiagonalEqual | CovarianceModel::FullEqual
        )
    }

    pub fn covariance_params(self, groups: usize, p: usize) -> usize {
        let per = match self.shape() {
            CovShape::Spherical => 1,
            CovShape::Diagonal => p,
            CovShape::Full => p * (p + 1) / 2,
        };
        if self.is_shared() {
            per
        } else {
            groups * per
        }
    }

    /// Mixing weights, means and covariance parameters.
    pub fn free_params(self, groups: usize, p: usize) -> usize {
        (groups - 1) + groups * p + self.covariance_params(groups, p)
    }
}

impl fmt::Display for CovarianceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for CovarianceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.code().eq_ignore_ascii_case(s) || format!("{m:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown covariance model {s:?}")))
    }
}

/// One component's covariance in the model's own parameterization.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Spherical(f64),
    Diagonal(DVector<f64>),
    Full(DMatrix<f64>),
}

impl Covariance {
    pub fn to_matrix(&self, p: usize) -> DMatrix<f64> {
        match self {
            Covariance::Spherical(v) => DMatrix::identity(p, p) * *v,
            Covariance::Diagonal(d) => DMatrix::from_diagonal(d),
            Covariance::Full(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub g_min: usize,
    pub g_max: usize,
    pub models: Vec<CovarianceModel>,
    pub max_iter: usize,
    /// Convergence threshold on `|dL| / |L|`.
    pub rel_tol: f64,
    pub n_restarts: usize,
    pub seed: u64,
    /// Added (times each column's variance) to covariance diagonals that
    /// fail to factor; also the collapse floor.
    pub ridge: f64,
    /// Lloyd iterations after k-means++ seeding.
    pub kmeans_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            g_min: 1,
            g_max: 9,
            models: CovarianceModel::ALL.to_vec(),
            max_iter: 500,
            rel_tol: 1e-8,
            n_restarts: 10,
            seed: 0,
            ridge: 1e-6,
            kmeans_iter: 10,
        }
    }
}

impl FitConfig {
    pub fn with_groups(mut self, range: RangeInclusive<usize>) -> Self {
        self.g_min = *range.start();
        self.g_max = *range.end();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_models(mut self, models: &[CovarianceModel]) -> Self {
        self.models = models.to_vec();
        self
    }

    pub fn group_range(&self) -> RangeInclusive<usize> {
        self.g_min..=self.g_max
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.g_min < 1 {
            return bad("g_min must be at least 1");
        }
        if self.g_max < self.g_min {
            return bad("g_max must not be below g_min");
        }
        if self.models.is_empty() {
            return bad("at least one covariance model is required");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1");
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive");
        }
        if self.n_restarts < 1 {
            return bad("n_restarts must be at least 1");
        }
        if !(self.ridge >= 0.0) {
            return bad("ridge must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedMixture {
    pub model: CovarianceModel,
    pub groups: usize,
    pub weights: Vec<f64>,
    /// G x p
    pub means: DMatrix<f64>,
    pub covariances: Vec<Covariance>,
    pub loglik: f64,
    pub bic: f64,
    pub n_params: usize,
    pub assignment: SoftAssignment,
    /// Log likelihood after each EM iteration.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
}

impl FittedMixture {
    fn from_run(run: em::EmRun, model: CovarianceModel, n: usize, p: usize) -> Self {
        let groups = run.params.weights.len();
        let n_params = model.free_params(groups, p);
        FittedMixture {
            model,
            groups,
            weights: run.params.weights,
            means: run.params.means,
            covariances: run.params.covariances,
            loglik: run.loglik,
            bic: 2.0 * run.loglik - n_params as f64 * (n as f64).ln(),
            n_params,
            assignment: SoftAssignment::from_unchecked(run.resp),
            loglik_trace: run.trace,
            converged: run.converged,
        }
    }

    fn params(&self) -> Result<Params> {
        Params::from_parts(self.weights.clone(), self.means.clone(), self.covariances.clone())
            .ok_or_else(|| Error::DegenerateFit("stored covariance is not positive definite".into()))
    }

    /// Posterior membership probabilities of `ds` under the fitted
    /// parameters.
    pub fn posterior(&self, ds: &Dataset) -> Result<SoftAssignment> {
        self.check_dims(ds)?;
        let (resp, _) = em::e_step(&Prepared::new(ds.values()), &self.params()?, None);
        Ok(SoftAssignment::from_unchecked(resp))
    }

    /// Observed-data log likelihood of `ds` under the fitted parameters.
    pub fn log_likelihood(&self, ds: &Dataset) -> Result<f64> {
        self.check_dims(ds)?;
        Ok(em::e_step(&Prepared::new(ds.values()), &self.params()?, None).1)
    }

    fn check_dims(&self, ds: &Dataset) -> Result<()> {
        if ds.n_cols() != self.means.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.means.ncols(),
                found: ds.n_cols(),
            });
        }
        Ok(())
    }
}

fn one_hot(labels: &[usize], groups: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(labels.len(), groups);
    for (i, &l) in labels.iter().enumerate() {
        m[(i, l)] = 1.0;
    }
    m
}

/// Fits a `groups`-component mixture under `model`, keeping the best of
/// `cfg.n_restarts` k-means++ starts by final log likelihood. Starts that
/// produce an identical partition are run once.
pub fn fit_em(
    ds: &Dataset,
    groups: usize,
    model: CovarianceModel,
    cfg: &FitConfig,
) -> Result<FittedMixture> {
    cfg.validate()?;
    let n = ds.n_rows();
    if groups < 1 || n <= groups {
        return Err(Error::TooFewObservations { n, groups });
    }
    let data = Prepared::new(ds.values());
    let settings = EmSettings {
        model,
        max_iter: cfg.max_iter,
        rel_tol: cfg.rel_tol,
        ridge: cfg.ridge,
        clamp: None,
    };
    let cell_seed = derive_seed(cfg.seed, &[groups as u64, model.index()]);
    let restarts = if groups == 1 { 1 } else { cfg.n_restarts };
    let mut seen = HashSet::new();
    let mut best: Option<em::EmRun> = None;
    let mut first_err = None;
    for r in 0..restarts {
        let labels = kmeans::canonical(&kmeans::kmeans_labels(
            ds.values(),
            groups,
            cfg.kmeans_iter,
            derive_seed(cell_seed, &[r as u64]),
        ));
        if !seen.insert(labels.clone()) {
            continue;
        }
        if labels.iter().max().map_or(0, |&m| m + 1) < groups {
            first_err.get_or_insert(Error::DegenerateFit(
                "initial partition has an empty group".into(),
            ));
            continue;
        }
        match em::run_em(&data, one_hot(&labels, groups), &settings) {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.loglik > b.loglik) {
                    best = Some(run);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(run) => Ok(FittedMixture::from_run(run, model, n, ds.n_cols())),
        None => Err(first_err.unwrap_or(Error::AllFitsFailed)),
    }
}

/// One cell of the (G, model) search.
#[derive(Debug)]
pub struct GridCell {
    pub groups: usize,
    pub model: CovarianceModel,
    pub outcome: Result<FittedMixture>,
}

/// Fits every (G, model) pair in the configured grid. Cells are independent
/// and evaluated in parallel; the result is in grid order.
pub fn bic_grid(ds: &Dataset, cfg: &FitConfig) -> Result<Vec<GridCell>> {
    cfg.validate()?;
    let cells: Vec<(usize, CovarianceModel)> = cfg
        .group_range()
        .flat_map(|g| cfg.models.iter().map(move |&m| (g, m)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(groups, model)| GridCell {
            groups,
            model,
            outcome: fit_em(ds, groups, model, cfg),
        })
        .collect())
}

/// The fit with the largest BIC across the grid. Failed cells are skipped;
/// ties go to the earlier cell (fewer components, then model order).
pub fn select_bic(ds: &Dataset, cfg: &FitConfig) -> Result<FittedMixture> {
    best_of(bic_grid(ds, cfg)?)
}

fn best_of(cells: Vec<GridCell>) -> Result<FittedMixture> {
    let mut best: Option<FittedMixture> = None;
    for cell in cells {
        if let Ok(fit) = cell.outcome {
            if best.as_ref().is_none_or(|b| fit.bic > b.bic) {
                best = Some(fit);
            }
        }
    }
    best.ok_or(Error::AllFitsFailed)
}

/// Checks that every declared class has enough labeled rows.
pub fn check_known(known: &KnownLabels) -> Result<()> {
    for (g, &c) in known.known_counts().iter().enumerate() {
        if c == 0 {
            return Err(Error::EmptyKnownGroup { group: g + 1 });
        }
    }
    Ok(())
}

/// Model-based classification: EM with labeled rows clamped to their known
/// class, G fixed to the number of declared classes, and the covariance
/// model chosen by BIC.
pub fn fit_classification(ds: &Dataset, known: &KnownLabels, cfg: &FitConfig) -> Result<FittedMixture> {
    cfg.validate()?;
    if known.len() != ds.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_rows(),
            found: known.len(),
        });
    }
    check_known(known)?;
    let groups = known.n_groups();
    let clamp: Vec<Option<usize>> = known.labels().iter().map(|l| l.map(|g| g - 1)).collect();
    let mut init = DMatrix::zeros(ds.n_rows(), groups);
    for (i, l) in clamp.iter().enumerate() {
        if let Some(g) = l {
            init[(i, *g)] = 1.0;
        }
    }
    let data = Prepared::new(ds.values());
    let n = ds.n_rows();
    let cells: Vec<GridCell> = cfg
        .models
        .par_iter()
        .map(|&model| {
            let settings = EmSettings {
                model,
                max_iter: cfg.max_iter,
                rel_tol: cfg.rel_tol,
                ridge: cfg.ridge,
                clamp: Some(&clamp),
            };
            GridCell {
                groups,
                model,
                outcome: em::run_em(&data, init.clone(), &settings)
                    .map(|run| FittedMixture::from_run(run, model, n, ds.n_cols())),
            }
        })
        .collect();
    best_of(cells)
}
