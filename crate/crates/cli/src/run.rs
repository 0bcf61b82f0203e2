use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vscc_core::{replicate_study, run_clustering, run_semisupervised, run_supervised, VsccReport};

use crate::config::{RunConfig, Task};
use crate::error::CliError;
use crate::ingest::{ingest_csv, Ingested};
use crate::report::{
    chosen_summary, projection, report_rows, sim_rows, simulation_summary, write_csv, Truth,
};

pub const REPORT_FILE: &str = "report.csv";
pub const CHOSEN_FILE: &str = "chosen.json";
pub const PROJECTION_FILE: &str = "chosen_projection.csv";
pub const SIMULATION_FILE: &str = "simulation.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Everything a run produces, held in memory until the run has succeeded.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    /// One-line key=value digest for stdout.
    pub digest: String,
}

impl Artifacts {
    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }
}

/// Output of a dataset workflow, kept for callers that want the in-memory
/// report alongside the serialized artifacts.
pub struct DatasetRun {
    pub ingested: Ingested,
    pub report: VsccReport,
    pub truth: Option<Truth>,
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output {
        path: "json".into(),
        message: e.to_string(),
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn run_dataset(cfg: &RunConfig) -> Result<DatasetRun, CliError> {
    match &cfg.task {
        Task::Cluster { input, truth } => {
            let cols: Vec<&str> = truth.iter().map(String::as_str).collect();
            let ingested = ingest_csv(input, &cols)?;
            let report = run_clustering(&ingested.dataset, &cfg.fit, cfg.options)?;
            let truth = ingested.labels.first().map(|l| Truth::from_codes(&l.codes));
            Ok(DatasetRun {
                ingested,
                report,
                truth,
            })
        }
        Task::Classify {
            semisupervised,
            input,
            labels,
            truth,
        } => {
            let mut cols = vec![labels.as_str()];
            cols.extend(truth.iter().map(String::as_str));
            let ingested = ingest_csv(input, &cols)?;
            let known = ingested.labels[0].known_labels()?;
            let report = if *semisupervised {
                run_semisupervised(&ingested.dataset, &known, &cfg.fit, cfg.options)?
            } else {
                run_supervised(&ingested.dataset, &known, &cfg.fit, cfg.options)?
            };
            let truth = ingested
                .labels
                .get(1)
                .map(|t| Truth::from_codes(&t.codes).restrict(&report.scored_rows));
            Ok(DatasetRun {
                ingested,
                report,
                truth,
            })
        }
        Task::Simulate { .. } => Err(CliError::Usage("simulate mode has no input dataset".into())),
    }
}

/// Runs the configured task and serializes its artifacts without touching
/// the file system.
pub fn execute(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    if let Task::Simulate {
        spec,
        reps,
        pipeline,
    } = &cfg.task
    {
        let study = replicate_study(spec, *reps, *pipeline, &cfg.fit)?;
        let summary = simulation_summary(&study, cfg.timings);
        let digest = format!(
            "pipeline={} reps={} mean_ari={:.4} sd_ari={:.4} failures={} exact_signal={} noise_free={}",
            summary.pipeline,
            summary.reps,
            summary.mean_ari,
            summary.sd_ari,
            summary.failures,
            summary.exact_signal,
            summary.noise_free
        );
        return Ok(Artifacts {
            files: vec![
                (SIMULATION_FILE.into(), write_csv(&sim_rows(&study.rows, cfg.timings))?),
                (SUMMARY_FILE.into(), json(&summary)?),
            ],
            digest,
        });
    }

    let run = run_dataset(cfg)?;
    let names = run.ingested.dataset.names();
    let truth = run.truth.as_ref();
    let rows = report_rows(&run.report, names, truth, cfg.timings);
    let summary = chosen_summary(&run.report, names, truth, cfg.timings);
    let mut files = vec![
        (REPORT_FILE.to_string(), write_csv(&rows)?),
        (CHOSEN_FILE.to_string(), json(&summary)?),
    ];
    if cfg.plot_data {
        if let Some(points) = projection(&run.report, run.ingested.dataset.values()) {
            files.push((PROJECTION_FILE.to_string(), write_csv(&points)?));
        }
    }
    let c = &summary.chosen;
    let digest = format!(
        "relationship={} n_vars={} vars={} G={} model={} uncertainty={:.4}{}",
        c.relationship,
        c.variables.len(),
        c.variables.join(";"),
        c.groups,
        c.model,
        c.uncertainty,
        c.ari.map(|a| format!(" ari={a:.4}")).unwrap_or_default()
    );
    Ok(Artifacts { files, digest })
}

/// Writes every artifact under `out`. Files are staged under temporary
/// names and renamed once all of them have been written.
pub fn write_artifacts(out: &Path, artifacts: &Artifacts) -> Result<Vec<PathBuf>, CliError> {
    let fail = |path: &Path, e: std::io::Error| CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(out).map_err(|e| fail(out, e))?;
    let mut staged = Vec::new();
    for (name, bytes) in &artifacts.files {
        let tmp = out.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(fail(&tmp, e));
        }
        staged.push((tmp, out.join(name)));
    }
    let mut written = Vec::new();
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).map_err(|e| fail(&dest, e))?;
        written.push(dest);
    }
    Ok(written)
}

pub fn run(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let artifacts = execute(cfg)?;
    write_artifacts(&cfg.out, &artifacts)?;
    Ok(artifacts)
}
