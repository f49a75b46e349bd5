//! Datasets: in-memory form, synthetic generation and file formats.

mod dataset;
pub mod io;
mod report;
mod sbm;

pub use dataset::{Dataset, Split};
pub use io::{load_dataset, write_dataset, DatasetFiles};
pub use report::{
    curves_csv, curves_path, read_report, write_report, EpochRecord, ExperimentReport, SeedSummary,
    CURVE_HEADER,
};
pub use sbm::{generate_sbm, SbmParams};
