//! Field-normalized productivity scoring and longitudinal analysis of
//! top and unproductive research cohorts.

pub mod cohort;
pub mod config;
pub mod display;
pub mod error;
pub mod ingest;
pub mod longitudinal;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
pub use model::{Authorship, Dataset, PeriodWindow, Publication, StaffRecord};
pub use pipeline::{analyze, Analysis, CohortKind};
