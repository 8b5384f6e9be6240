//! Core library for a trace-driven edge-cache simulator with generative hits.
//!
//! A request that misses on its exact `(key, params)` identity but whose
//! content can be produced from cached donors is a *pseudo-miss*: instead of
//! fetching from origin, the edge node generates the response locally (block
//! split/merge, image transforms modeled by cost) and optionally fetches the
//! exact object asynchronously when a reuse predictor says it will pay off.
//!
//! The crate is `no_std` + `alloc`: everything here is deterministic,
//! allocation-backed simulation state with no IO. File formats and the CLI
//! live in the companion `cogent-sim` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cache;
pub mod controller;
pub mod engine;
pub mod genhit;
pub mod judgment;
pub mod policy;
pub mod record;
pub mod synth;

pub use cache::{AdmitError, CacheEntry, CacheState};
pub use controller::{DecisionTree, HistoryIndex, ReuseFeatures, TrainingSample, TreeConfig};
pub use engine::{
    Architecture, CpuModel, LatencyMode, LatencyModel, RunSettings, SimReport, WindowRow,
};
pub use genhit::{CostModel, GenerationOutcome, Scenario};
pub use judgment::{Classification, ShieldConfig, ShieldReason};
pub use policy::PolicyKind;
pub use record::{Modality, ParamSet, RequestRecord, TraceStats};
pub use synth::SyntheticSpec;
