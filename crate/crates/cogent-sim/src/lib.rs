//! Std-side companion to `cogent-core`: trace and tree file formats, run
//! configuration, report writers, and parameter sweeps. The `cogent` binary
//! is a thin CLI over these modules.

#![deny(unsafe_code)]

pub mod config;
pub mod io;
pub mod report;
pub mod sweep;

pub use config::RunConfig;
pub use io::{parse_trace, read_trace_file, write_trace, write_trace_file, TraceIoError};
pub use sweep::{run_sweep, SweepJob, SweepRow};
