//! Analytics for how software test cases age.
//!
//! The crate ingests two CSV tables of testing meta-data — test-case creation
//! times plus execution times with PASS/FAIL outcomes — and derives how the
//! test suite behaves as its test cases grow older:
//!
//! * [`ingest`] parses, validates and pre-filters the raw log into a
//!   [`Dataset`].
//! * [`lifespan`] determines per-test-case death under a grace period and
//!   summarises ages, alive counts and suite growth.
//! * [`curves`] builds age-relative activation and failure-rate (hazard)
//!   series with minimum-support filtering and yearly aggregates.
//! * [`smoothing`] runs locally weighted regression over a rate series and
//!   attaches pointwise confidence bands.
//! * [`regression`] fits polynomial and exponential decay models to a hazard
//!   series and estimates the half-life of the failure rate.
//! * [`synth`] generates synthetic logs from a parameterised ground-truth
//!   profile, which is how every estimator in this crate is validated.
//! * [`report`] orchestrates the full pipeline into a machine-readable
//!   report, and [`plot`] renders series as standalone SVG documents.

pub mod curves;
pub mod error;
pub mod ingest;
pub mod lifespan;
pub mod numeric;
pub mod plot;
pub mod regression;
pub mod report;
pub mod rng;
pub mod smoothing;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use curves::{RateKind, RatePoint, RateSeries, YearlyMode, YearlyRate};
pub use error::{Error, Result};
pub use ingest::{
    CreationRecord, Dataset, ExecutionRecord, InferMode, Outcome, OutcomeMapPolicy,
    RawExecutionRow, TestCaseId,
};
pub use lifespan::{AlivenessSummary, GracePeriod, LifeSpan};
pub use regression::{FitModel, HalfLife, HalfLifeOutcome, ModelFamily};
pub use report::{AnalyzeBundle, AnalyzeReport, RunConfig};
pub use smoothing::{SmoothConfig, SmoothedCurve, SmoothedPoint};
pub use synth::{GroundTruth, SynthProfile};
