//! Artifact layouts: the per-candidate table, the chosen-candidate summary,
//! the projection file and the simulation table.

use serde::{Deserialize, Serialize};
use vscc_core::{
    ari_labels, harden, RepRow, StageTimings, StudySummary, SubsetCandidate, SubsetOrigin,
    VariableSubset, VsccReport,
};

use crate::error::CliError;

/// Ground truth restricted to the rows it is known for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    pub rows: Vec<usize>,
    pub labels: Vec<usize>,
}

impl Truth {
    pub fn from_codes(codes: &[Option<usize>]) -> Self {
        let (rows, labels) = codes
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (i, c)))
            .unzip();
        Truth { rows, labels }
    }

    /// Keeps only rows listed in `scored` (which must be ascending).
    pub fn restrict(&self, scored: &[usize]) -> Truth {
        let (rows, labels) = self
            .rows
            .iter()
            .zip(&self.labels)
            .filter(|(r, _)| scored.binary_search(r).is_ok())
            .map(|(&r, &l)| (r, l))
            .unzip();
        Truth { rows, labels }
    }

    /// ARI of the candidate's hard assignment on the truth rows.
    pub fn ari(&self, candidate: &SubsetCandidate) -> Option<f64> {
        let fit = candidate.fit.as_ref()?;
        if self.rows.len() < 2 {
            return None;
        }
        let hard = harden(&fit.assignment);
        let predicted: Vec<usize> = self.rows.iter().map(|&r| hard.labels()[r]).collect();
        ari_labels(&predicted, &self.labels).ok()
    }
}

/// One row of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub relationship: String,
    pub n_vars: usize,
    /// Variable names in selection order, joined by `;`.
    pub vars: String,
    #[serde(rename = "G")]
    pub groups: Option<usize>,
    pub model: Option<String>,
    pub bic: Option<f64>,
    pub uncertainty: Option<f64>,
    pub ari: Option<f64>,
    pub runtime_s: f64,
    pub status: String,
}

impl ReportRow {
    pub fn origin(&self) -> Result<SubsetOrigin, vscc_core::Error> {
        self.relationship.parse()
    }

    /// Maps the variable names back to column indices of `names`.
    pub fn subset(&self, names: &[String]) -> Option<VariableSubset> {
        let indices = if self.vars.is_empty() {
            Vec::new()
        } else {
            self.vars
                .split(';')
                .map(|v| names.iter().position(|n| n == v))
                .collect::<Option<Vec<_>>>()?
        };
        Some(VariableSubset {
            indices,
            origin: self.origin().ok()?,
        })
    }
}

pub fn status_of(report: &VsccReport, index: usize) -> String {
    match &report.candidates[index].exclusion {
        Some(ex) => ex.to_string(),
        None if index == report.chosen => "chosen".to_string(),
        None => "ok".to_string(),
    }
}

pub fn report_rows(report: &VsccReport, names: &[String], truth: Option<&Truth>, timings: bool) -> Vec<ReportRow> {
    report
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let fit = c.fit.as_ref();
            ReportRow {
                relationship: c.subset.origin.to_string(),
                n_vars: c.subset.len(),
                vars: var_names(&c.subset, names).join(";"),
                groups: fit.map(|f| f.groups),
                model: fit.map(|f| f.model.code().to_string()),
                bic: fit.map(|f| f.bic),
                uncertainty: c.uncertainty,
                ari: truth.and_then(|t| t.ari(c)),
                runtime_s: if timings { c.runtime_s } else { 0.0 },
                status: status_of(report, i),
            }
        })
        .collect()
}

pub fn var_names(subset: &VariableSubset, names: &[String]) -> Vec<String> {
    subset.indices.iter().map(|&j| names[j].clone()).collect()
}

pub fn write_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| output_error("csv", e))?;
    }
    w.into_inner().map_err(|e| output_error("csv", e))
}

pub fn read_report(bytes: &[u8]) -> Result<Vec<ReportRow>, csv::Error> {
    csv::Reader::from_reader(bytes).deserialize().collect()
}

fn output_error(path: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub relationship: String,
    pub variables: Vec<String>,
    pub groups: usize,
    pub model: String,
    pub bic: f64,
    pub uncertainty: f64,
    pub ari: Option<f64>,
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinGroup {
    pub variable: String,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialFit {
    pub groups: usize,
    pub model: String,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub g_min: usize,
    pub g_max: usize,
    pub restarts: usize,
    pub include_full_set: bool,
}

/// Contents of `chosen.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenSummary {
    pub mode: String,
    pub n_rows: usize,
    pub n_vars: usize,
    pub scored_rows: usize,
    pub chosen: FitSummary,
    pub full_set: Option<FitSummary>,
    pub initial_fit: InitialFit,
    pub within_group_variance: Vec<WithinGroup>,
    pub settings: RunSettings,
    pub timings: Option<StageTimings>,
}

fn fit_summary(c: &SubsetCandidate, names: &[String], truth: Option<&Truth>) -> Option<FitSummary> {
    let fit = c.fit.as_ref()?;
    Some(FitSummary {
        relationship: c.subset.origin.to_string(),
        variables: var_names(&c.subset, names),
        groups: fit.groups,
        model: fit.model.code().to_string(),
        bic: fit.bic,
        uncertainty: c.uncertainty?,
        ari: truth.and_then(|t| t.ari(c)),
        cluster_sizes: harden(&fit.assignment).group_sizes(),
    })
}

pub fn chosen_summary(report: &VsccReport, names: &[String], truth: Option<&Truth>, timings: bool) -> ChosenSummary {
    let chosen = fit_summary(report.chosen(), names, truth).expect("the chosen candidate has a fit");
    ChosenSummary {
        mode: report.mode.to_string(),
        n_rows: report.init_fit.assignment.n_rows(),
        n_vars: names.len(),
        scored_rows: report.scored_rows.len(),
        chosen,
        full_set: report.full_set().and_then(|c| fit_summary(c, names, truth)),
        initial_fit: InitialFit {
            groups: report.init_fit.groups,
            model: report.init_fit.model.code().to_string(),
            bic: report.init_fit.bic,
        },
        within_group_variance: report
            .selection
            .w
            .w
            .iter()
            .zip(names)
            .map(|(&w, n)| WithinGroup {
                variable: n.clone(),
                w,
            })
            .collect(),
        settings: RunSettings {
            seed: report.config.seed,
            g_min: report.config.g_min,
            g_max: report.config.g_max,
            restarts: report.config.n_restarts,
            include_full_set: report.options.include_full_set,
        },
        timings: timings.then_some(report.timings),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    pub x: f64,
    pub y: f64,
    pub label: usize,
}

/// Raw values of the two chosen variables with 1-based cluster labels, or
/// `None` unless exactly two variables were chosen.
pub fn projection(report: &VsccReport, values: &nalgebra::DMatrix<f64>) -> Option<Vec<ProjectionRow>> {
    let idx = &report.chosen().subset.indices;
    let [a, b] = idx.as_slice() else {
        return None;
    };
    let hard = report.chosen_partition();
    Some(
        hard.labels()
            .iter()
            .enumerate()
            .map(|(i, &g)| ProjectionRow {
                x: values[(i, *a)],
                y: values[(i, *b)],
                label: g,
            })
            .collect(),
    )
}

/// One row of `simulation.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub rep_index: usize,
    pub ari: f64,
    pub runtime_s: f64,
    pub n_vars_chosen: usize,
    pub relationship: String,
    pub status: String,
}

pub fn sim_rows(rows: &[RepRow], timings: bool) -> Vec<SimRow> {
    rows.iter()
        .map(|r| SimRow {
            rep_index: r.rep_index,
            ari: r.ari,
            runtime_s: if timings { r.runtime_s } else { 0.0 },
            n_vars_chosen: r.n_vars_chosen,
            relationship: r.relationship.clone(),
            status: r.status.clone(),
        })
        .collect()
}

/// Contents of `summary.json` in simulate mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub pipeline: String,
    /// The separation value is a mean-gap surrogate, not a separation index.
    pub separation_surrogate: f64,
    pub groups: usize,
    pub n_per_group: (usize, usize),
    pub p_signal: usize,
    pub p_noise: usize,
    pub reps: usize,
    pub seed: u64,
    pub mean_ari: f64,
    pub sd_ari: f64,
    pub mean_full_set_ari: Option<f64>,
    pub mean_runtime_s: Option<f64>,
    pub failures: usize,
    pub exact_signal: usize,
    pub noise_free: usize,
}

pub fn simulation_summary(s: &StudySummary, timings: bool) -> SimulationSummary {
    SimulationSummary {
        pipeline: s.pipeline.to_string(),
        separation_surrogate: s.spec.separation,
        groups: s.spec.groups,
        n_per_group: s.spec.n_per_group,
        p_signal: s.spec.p_signal,
        p_noise: s.spec.p_noise,
        reps: s.rows.len(),
        seed: s.spec.seed,
        mean_ari: s.mean_ari,
        sd_ari: s.sd_ari,
        mean_full_set_ari: s.mean_full_set_ari,
        mean_runtime_s: timings.then_some(s.mean_runtime_s),
        failures: s.failures,
        exact_signal: s.rows.iter().filter(|r| r.exact_signal).count(),
        noise_free: s.rows.iter().filter(|r| r.noise_free).count(),
    }
}
