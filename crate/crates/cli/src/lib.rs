//! Command-line front end: CSV ingestion, run configuration and report
//! emission.

pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod run;

pub use config::{Args, Mode, RunConfig, SimPipeline, Task};
pub use error::{Category, CliError};
pub use ingest::{ingest_csv, ingest_reader, IngestError, Ingested, LabelColumn};
pub use report::{read_report, ReportRow, Truth};
pub use run::{execute, run, run_dataset, write_artifacts, Artifacts, DatasetRun};
