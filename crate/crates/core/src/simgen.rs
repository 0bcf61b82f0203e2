//! Synthetic Gaussian mixtures with planted signal and noise variables, and
//! a replicate harness that scores pipelines against the planted truth.
//!
//! Group means live on the signal columns only. Their spread is controlled
//! by `separation`: the closest pair of means is exactly
//! [`MEAN_GAP_PER_UNIT`]` * separation` apart, so `separation = 0.7` puts
//! every pair of groups more than 4 pooled standard deviations apart while
//! values near 0 give heavily overlapping groups. This is a simple
//! surrogate for a separation index, not an implementation of one.

use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{harden, Dataset, KnownLabels, Partition};
use crate::error::{Error, Result};
use crate::gmm::{fit_classification, select_bic, FitConfig};
use crate::metrics::adjusted_rand_index;
use crate::preprocess::standardize;
use crate::seeds::derive_seed;
use crate::workflows::{run_clustering, run_semisupervised, run_supervised, VsccOptions};

/// Minimum distance between two group means per unit of separation.
pub const MEAN_GAP_PER_UNIT: f64 = 7.5;

/// Range of the per-group, per-variable variances on signal columns.
pub const SIGNAL_VARIANCE_RANGE: (f64, f64) = (0.5, 1.5);

const MEAN_CONFIG_TRIES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub groups: usize,
    /// Inclusive bounds on the size of each group.
    pub n_per_group: (usize, usize),
    pub p_signal: usize,
    pub p_noise: usize,
    /// In `(0, 1]`.
    pub separation: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.groups < 2 {
            return bad("at least 2 groups are required");
        }
        let (lo, hi) = self.n_per_group;
        if lo < 1 || hi < lo {
            return bad("group size range must satisfy 1 <= min <= max");
        }
        if self.p_signal < 1 {
            return bad("at least one signal variable is required");
        }
        if !(self.separation > 0.0 && self.separation <= 1.0) {
            return bad("separation must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        self.p_signal + self.p_noise
    }

    pub fn with_seed(&self, seed: u64) -> SimSpec {
        SimSpec { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimInstance {
    pub dataset: Dataset,
    pub truth: Partition,
    /// Sorted 0-based indices of the signal columns.
    pub signal_indices: Vec<usize>,
    /// Group means on the signal columns, `G x p_signal`, in the order the
    /// signal columns appear in `signal_indices`.
    pub means: DMatrix<f64>,
    /// Per-group variances on the signal columns, same layout as `means`.
    pub variances: DMatrix<f64>,
}

impl SimInstance {
    pub fn noise_indices(&self) -> Vec<usize> {
        (0..self.dataset.n_cols())
            .filter(|j| self.signal_indices.binary_search(j).is_err())
            .collect()
    }
}

fn min_pairwise(m: &DMatrix<f64>) -> f64 {
    let g = m.nrows();
    let mut best = f64::INFINITY;
    for a in 0..g {
        for b in (a + 1)..g {
            best = best.min((m.row(a) - m.row(b)).norm());
        }
    }
    best
}

fn max_pairwise(m: &DMatrix<f64>) -> f64 {
    let g = m.nrows();
    let mut best: f64 = 0.0;
    for a in 0..g {
        for b in (a + 1)..g {
            best = best.max((m.row(a) - m.row(b)).norm());
        }
    }
    best
}

/// Draws several random mean layouts, keeps the most evenly spread one
/// (largest min/max distance ratio) and rescales it to the target gap.
fn group_means(spec: &SimSpec, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (g, p) = (spec.groups, spec.p_signal);
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for _ in 0..MEAN_CONFIG_TRIES {
        let m = DMatrix::from_fn(g, p, |_, _| StandardNormal.sample(rng));
        let ratio = min_pairwise(&m) / max_pairwise(&m);
        if ratio.is_finite() && best.as_ref().is_none_or(|(r, _)| ratio > *r) {
            best = Some((ratio, m));
        }
    }
    let m = best.map(|(_, m)| m).unwrap_or_else(|| {
        DMatrix::from_fn(g, p, |i, j| if j == 0 { i as f64 } else { 0.0 })
    });
    let scale = MEAN_GAP_PER_UNIT * spec.separation / min_pairwise(&m);
    m * scale
}

/// Draws one instance. Rows are ordered by group; columns are shuffled so
/// signal and noise variables are interleaved.
pub fn generate(spec: &SimSpec) -> Result<SimInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = spec.n_per_group;
    let sizes: Vec<usize> = (0..spec.groups).map(|_| rng.random_range(lo..=hi)).collect();
    let means = group_means(spec, &mut rng);
    let (vlo, vhi) = SIGNAL_VARIANCE_RANGE;
    let variances = DMatrix::from_fn(spec.groups, spec.p_signal, |_, _| rng.random_range(vlo..=vhi));

    let n: usize = sizes.iter().sum();
    let p = spec.n_vars();
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);
    // order[k] is the output column of generated variable k
    let mut values = DMatrix::zeros(n, p);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (g, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            for (k, &col) in order.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[(row, col)] = if k < spec.p_signal {
                    means[(g, k)] + variances[(g, k)].sqrt() * z
                } else {
                    z
                };
            }
            labels.push(g + 1);
            row += 1;
        }
    }

    let mut signal: Vec<(usize, usize)> = order[..spec.p_signal].iter().copied().zip(0..).collect();
    signal.sort_unstable();
    let signal_indices: Vec<usize> = signal.iter().map(|&(c, _)| c).collect();
    let reorder = |m: &DMatrix<f64>| {
        DMatrix::from_fn(spec.groups, spec.p_signal, |g, j| m[(g, signal[j].1)])
    };
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Ok(SimInstance {
        dataset: Dataset::new(values, names)?,
        truth: Partition::new(labels, spec.groups)?,
        signal_indices,
        means: reorder(&means),
        variances: reorder(&variances),
    })
}

/// Randomly labels `fraction` of each group (at least 2 rows per group).
pub fn stratified_labels(truth: &Partition, fraction: f64, seed: u64) -> Result<KnownLabels> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig("label fraction must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![None; truth.len()];
    for g in 1..=truth.n_groups() {
        let mut rows: Vec<usize> = (0..truth.len()).filter(|&i| truth.labels()[i] == g).collect();
        rows.shuffle(&mut rng);
        let take = ((fraction * rows.len() as f64).round() as usize).max(2).min(rows.len());
        for &i in &rows[..take] {
            labels[i] = Some(g);
        }
    }
    KnownLabels::new(labels, truth.n_groups())
}

/// What to run on each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pipeline {
    /// Variable selection for clustering.
    Vscc { include_full_set: bool },
    /// Clustering on all variables with BIC selection.
    FullSet,
    Supervised { label_fraction: f64, include_full_set: bool },
    SemiSupervised { label_fraction: f64, include_full_set: bool },
    /// Model-based classification on all variables.
    FullSetClassification { label_fraction: f64 },
}

impl Pipeline {
    fn label_fraction(self) -> Option<f64> {
        match self {
            Pipeline::Supervised { label_fraction, .. }
            | Pipeline::SemiSupervised { label_fraction, .. }
            | Pipeline::FullSetClassification { label_fraction } => Some(label_fraction),
            _ => None,
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pipeline::Vscc { .. } => f.write_str("vscc-cluster"),
            Pipeline::FullSet => f.write_str("fullset-cluster"),
            Pipeline::Supervised { .. } => f.write_str("vscc-supervised"),
            Pipeline::SemiSupervised { .. } => f.write_str("vscc-semisupervised"),
            Pipeline::FullSetClassification { .. } => f.write_str("fullset-classification"),
        }
    }
}

/// One replicate's outcome. Failed replicates score an ARI of 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRow {
    pub rep_index: usize,
    pub ari: f64,
    pub runtime_s: f64,
    pub n_vars_chosen: usize,
    pub relationship: String,
    pub status: String,
    /// ARI of the all-variable fit from the same run, when the pipeline
    /// produced one.
    pub full_set_ari: Option<f64>,
    /// Chosen columns are exactly the signal columns.
    pub exact_signal: bool,
    /// Chosen columns include no noise column.
    pub noise_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub pipeline: Pipeline,
    pub spec: SimSpec,
    pub mean_ari: f64,
    /// Sample standard deviation; 0 for a single replicate.
    pub sd_ari: f64,
    pub mean_runtime_s: f64,
    /// Mean of `full_set_ari` over replicates (failures count as 0).
    pub mean_full_set_ari: Option<f64>,
    pub failures: usize,
    pub rows: Vec<RepRow>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

struct Outcome {
    cols: Vec<usize>,
    relationship: String,
    estimate: Partition,
    full_set: Option<Partition>,
}

fn run_pipeline(inst: &SimInstance, pipeline: Pipeline, known: Option<&KnownLabels>, cfg: &FitConfig) -> Result<Outcome> {
    let p = inst.dataset.n_cols();
    let options = |include_full_set| VsccOptions { include_full_set };
    let from_report = |r: crate::workflows::VsccReport| {
        let c = r.chosen();
        Outcome {
            cols: c.subset.sorted_indices(),
            relationship: c.subset.origin.to_string(),
            estimate: harden(&c.fit.as_ref().expect("chosen has a fit").assignment),
            full_set: Some(harden(&r.init_fit.assignment)),
        }
    };
    let known = || known.expect("classification pipelines carry labels");
    match pipeline {
        Pipeline::Vscc { include_full_set } => {
            run_clustering(&inst.dataset, cfg, options(include_full_set)).map(from_report)
        }
        Pipeline::Supervised { include_full_set, .. } => {
            run_supervised(&inst.dataset, known(), cfg, options(include_full_set)).map(from_report)
        }
        Pipeline::SemiSupervised { include_full_set, .. } => {
            run_semisupervised(&inst.dataset, known(), cfg, options(include_full_set)).map(from_report)
        }
        Pipeline::FullSet => {
            let fit = select_bic(&standardize(&inst.dataset)?, cfg)?;
            Ok(Outcome {
                cols: (0..p).collect(),
                relationship: "FullSet".into(),
                estimate: harden(&fit.assignment),
                full_set: None,
            })
        }
        Pipeline::FullSetClassification { .. } => {
            let fit = fit_classification(&standardize(&inst.dataset)?, known(), cfg)?;
            Ok(Outcome {
                cols: (0..p).collect(),
                relationship: "FullSet".into(),
                estimate: harden(&fit.assignment),
                full_set: None,
            })
        }
    }
}

fn run_rep(spec: &SimSpec, rep: usize, pipeline: Pipeline, cfg: &FitConfig) -> RepRow {
    let start = Instant::now();
    let failed = |status: String, start: Instant| RepRow {
        rep_index: rep,
        ari: 0.0,
        runtime_s: start.elapsed().as_secs_f64(),
        n_vars_chosen: 0,
        relationship: String::new(),
        status,
        full_set_ari: Some(0.0),
        exact_signal: false,
        noise_free: false,
    };
    let inst = match generate(&spec.with_seed(derive_seed(spec.seed, &[rep as u64]))) {
        Ok(i) => i,
        Err(e) => return failed(e.to_string(), start),
    };
    let known = match pipeline.label_fraction() {
        Some(f) => match stratified_labels(&inst.truth, f, derive_seed(spec.seed, &[rep as u64, 1])) {
            Ok(k) => Some(k),
            Err(e) => return failed(e.to_string(), start),
        },
        None => None,
    };
    let rep_cfg = cfg.clone().with_seed(derive_seed(cfg.seed, &[rep as u64]));
    let start = Instant::now();
    let outcome = run_pipeline(&inst, pipeline, known.as_ref(), &rep_cfg);
    let runtime_s = start.elapsed().as_secs_f64();
    // classification is scored on the unlabeled rows only
    let rows: Vec<usize> = match &known {
        Some(k) => k.unknown_rows(),
        None => (0..inst.truth.len()).collect(),
    };
    let score = |est: &Partition| {
        if rows.len() < 2 {
            return 1.0;
        }
        adjusted_rand_index(&inst.truth.subset(&rows), &est.subset(&rows)).unwrap_or(0.0)
    };
    match outcome {
        Ok(o) => {
            let noise_free = o.cols.iter().all(|c| inst.signal_indices.binary_search(c).is_ok());
            RepRow {
                rep_index: rep,
                ari: score(&o.estimate),
                runtime_s,
                n_vars_chosen: o.cols.len(),
                relationship: o.relationship,
                status: "ok".into(),
                full_set_ari: o.full_set.as_ref().map(score),
                exact_signal: o.cols == inst.signal_indices,
                noise_free,
            }
        }
        Err(e) => RepRow {
            runtime_s,
            ..failed(e.to_string(), start)
        },
    }
}

/// Runs `pipeline` on `n_reps` independent instances of `spec`. Replicate
/// `r` draws its data from `derive_seed(spec.seed, [r])` and fits with
/// `derive_seed(cfg.seed, [r])`, so the summary does not depend on the
/// order in which replicates finish.
pub fn replicate_study(spec: &SimSpec, n_reps: usize, pipeline: Pipeline, cfg: &FitConfig) -> Result<StudySummary> {
    spec.validate()?;
    cfg.validate()?;
    if n_reps < 1 {
        return Err(Error::InvalidConfig("at least one replicate is required".into()));
    }
    if let Some(f) = pipeline.label_fraction() {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidConfig("label fraction must lie in [0, 1]".into()));
        }
    }
    let rows: Vec<RepRow> = (0..n_reps)
        .into_par_iter()
        .map(|r| run_rep(spec, r, pipeline, cfg))
        .collect();
    let aris: Vec<f64> = rows.iter().map(|r| r.ari).collect();
    let (mean_ari, sd_ari) = mean_sd(&aris);
    let mean_runtime_s = mean_sd(&rows.iter().map(|r| r.runtime_s).collect::<Vec<_>>()).0;
    let mean_full_set_ari = match pipeline {
        Pipeline::FullSet | Pipeline::FullSetClassification { .. } => None,
        _ => Some(mean_sd(&rows.iter().map(|r| r.full_set_ari.unwrap_or(0.0)).collect::<Vec<_>>()).0),
    };
    Ok(StudySummary {
        pipeline,
        spec: spec.clone(),
        mean_ari,
        sd_ari,
        mean_runtime_s,
        mean_full_set_ari,
        failures: rows.iter().filter(|r| r.status != "ok").count(),
        rows,
    })
}
