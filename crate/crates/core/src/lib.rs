//! Conformance-checking monitor for control-flow anomaly detection.
//!
//! Traces are aligned against a labeled accepting Petri net; the resulting
//! misalignment counters and fitness form a diagnoses matrix that one-class
//! detectors learn from. The crate also generates traces by playing out a
//! net, injects synthetic control-flow anomalies, and scores detectors.

pub mod alignment;
pub mod detect;
pub mod diagnoses;
pub mod eventlog;
pub mod experiment;
pub mod inject;
pub mod metrics;
pub mod petri;
