use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use vscc_core::{FitConfig, Pipeline, SimSpec, VsccOptions};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cluster,
    Supervised,
    Semisupervised,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimPipeline {
    Vscc,
    FullSet,
    Supervised,
    Semisupervised,
    FullSetClassification,
}

/// Variable selection for model-based clustering and classification.
#[derive(Debug, Clone, Parser)]
#[command(name = "vscc", version)]
pub struct Args {
    #[arg(long, value_enum)]
    pub mode: Mode,

    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Label column. Scored against in cluster mode; the known labels in
    /// the classification modes, where blank cells are unknown.
    #[arg(long)]
    pub labels: Option<String>,

    /// Ground-truth column used only for scoring in the classification modes.
    #[arg(long)]
    pub truth: Option<String>,

    #[arg(long, default_value_t = 1)]
    pub g_min: usize,

    #[arg(long, default_value_t = 9)]
    pub g_max: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Leave the all-variable subset out of the comparison.
    #[arg(long)]
    pub no_full_set: bool,

    #[arg(long, default_value = "vscc-out")]
    pub out: PathBuf,

    /// Write the chosen two-variable projection as x,y,label rows.
    #[arg(long)]
    pub plot_data: bool,

    /// Write runtimes as 0 so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timings: bool,

    /// EM restarts per model and group count.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,

    #[arg(long, default_value_t = 25)]
    pub reps: usize,

    #[arg(long, value_enum, default_value_t = SimPipeline::Vscc)]
    pub pipeline: SimPipeline,

    #[arg(long, default_value_t = 0.7)]
    pub separation: f64,

    #[arg(long, default_value_t = 10)]
    pub signal: usize,

    #[arg(long, default_value_t = 10)]
    pub noise: usize,

    #[arg(long, default_value_t = 4)]
    pub groups: usize,

    #[arg(long, default_value_t = 100)]
    pub n_min: usize,

    #[arg(long, default_value_t = 150)]
    pub n_max: usize,

    #[arg(long, default_value_t = 0.5)]
    pub label_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Cluster {
        input: PathBuf,
        truth: Option<String>,
    },
    Classify {
        semisupervised: bool,
        input: PathBuf,
        labels: String,
        truth: Option<String>,
    },
    Simulate {
        spec: SimSpec,
        reps: usize,
        pipeline: Pipeline,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub fit: FitConfig,
    pub options: VsccOptions,
    pub out: PathBuf,
    pub plot_data: bool,
    pub timings: bool,
}

impl RunConfig {
    pub fn from_args(a: Args) -> Result<Self, CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        let fit = FitConfig {
            g_min: a.g_min,
            g_max: a.g_max,
            n_restarts: a.restarts,
            seed: a.seed,
            ..FitConfig::default()
        };
        fit.validate()?;
        let include_full_set = !a.no_full_set;
        let task = match a.mode {
            Mode::Cluster => {
                let Some(input) = a.input else {
                    return usage("--mode cluster requires --input");
                };
                Task::Cluster {
                    input,
                    truth: a.labels,
                }
            }
            Mode::Supervised | Mode::Semisupervised => {
                let Some(input) = a.input else {
                    return usage("classification modes require --input");
                };
                let Some(labels) = a.labels else {
                    return usage("classification modes require --labels");
                };
                if a.truth.as_deref() == Some(labels.as_str()) {
                    return usage("--truth must name a different column from --labels");
                }
                Task::Classify {
                    semisupervised: a.mode == Mode::Semisupervised,
                    input,
                    labels,
                    truth: a.truth,
                }
            }
            Mode::Simulate => {
                if a.reps == 0 {
                    return usage("--reps must be at least 1");
                }
                let spec = SimSpec {
                    groups: a.groups,
                    n_per_group: (a.n_min, a.n_max),
                    p_signal: a.signal,
                    p_noise: a.noise,
                    separation: a.separation,
                    seed: a.seed,
                };
                spec.validate()?;
                let f = a.label_fraction;
                if a.pipeline_needs_labels() && !(f > 0.0 && f < 1.0) {
                    return usage("--label-fraction must lie strictly between 0 and 1");
                }
                let pipeline = match a.pipeline {
                    SimPipeline::Vscc => Pipeline::Vscc { include_full_set },
                    SimPipeline::FullSet => Pipeline::FullSet,
                    SimPipeline::Supervised => Pipeline::Supervised {
                        label_fraction: f,
                        include_full_set,
                    },
                    SimPipeline::Semisupervised => Pipeline::SemiSupervised {
                        label_fraction: f,
                        include_full_set,
                    },
                    SimPipeline::FullSetClassification => {
                        Pipeline::FullSetClassification { label_fraction: f }
                    }
                };
                Task::Simulate {
                    spec,
                    reps: a.reps,
                    pipeline,
                }
            }
        };
        Ok(RunConfig {
            task,
            fit,
            options: VsccOptions { include_full_set },
            out: a.out,
            plot_data: a.plot_data,
            timings: !a.no_timings,
        })
    }
}

impl Args {
    fn pipeline_needs_labels(&self) -> bool {
        matches!(
            self.pipeline,
            SimPipeline::Supervised | SimPipeline::Semisupervised | SimPipeline::FullSetClassification
        )
    }
}
