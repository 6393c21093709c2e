//! Scoring of CWE weakness categories from CVE vulnerability data.
//!
//! The pipeline: ingest NVD-style feeds into a normalized dataset, load a
//! CWE taxonomy, propagate CVE mappings up the hierarchy, aggregate per-CWE
//! frequency and severity, and score each CWE with either the min-max
//! product equation (MDSE) or the double-log weighted equation (MSSW).
//! The analysis layer produces ranked top lists, set-difference curves,
//! correlation tables, risk maps, and frequency-transform series, all with
//! deterministic output.

pub mod analysis;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod plot;
pub mod synth;
pub mod taxonomy;
pub mod testkit;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
