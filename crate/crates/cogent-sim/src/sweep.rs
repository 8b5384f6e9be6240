//! Parameter sweeps: run the same trace over a matrix of architecture,
//! policy, and capacity values. Jobs fan out over threads but the output is
//! always in matrix order, so sweep CSVs are reproducible.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cogent_core::controller::DecisionTree;
use cogent_core::engine::{run, Architecture, RunError, SimReport};
use cogent_core::policy::PolicyKind;
use cogent_core::record::RequestRecord;

use crate::config::{architecture_name, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepJob {
    pub architecture: Architecture,
    pub policy: PolicyKind,
    pub capacity_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub job: SweepJob,
    pub report: SimReport,
}

/// Cartesian product in (architecture, policy, capacity) order.
pub fn job_matrix(
    architectures: &[Architecture],
    policies: &[PolicyKind],
    capacities: &[u64],
) -> Vec<SweepJob> {
    let mut jobs = Vec::new();
    for &architecture in architectures {
        for &policy in policies {
            for &capacity_bytes in capacities {
                jobs.push(SweepJob { architecture, policy, capacity_bytes });
            }
        }
    }
    jobs
}

pub fn run_sweep(
    trace: &[RequestRecord],
    base: &RunConfig,
    tree: Option<&DecisionTree>,
    jobs: &[SweepJob],
    threads: usize,
) -> Result<Vec<SweepRow>, RunError> {
    let threads = threads.clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<SimReport, RunError>>>> =
        Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let mut cfg = base.clone();
                cfg.architecture = job.architecture;
                cfg.policy = job.policy;
                cfg.capacity_bytes = job.capacity_bytes;
                let settings = cfg.to_settings(tree.cloned());
                let result = run(trace, &settings);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    let mut rows = Vec::with_capacity(jobs.len());
    for (job, slot) in jobs.iter().zip(slots.into_inner().unwrap()) {
        rows.push(SweepRow { job: *job, report: slot.expect("every job ran")? });
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "architecture,policy,capacity_bytes,requests,hits,misses,\
pseudo_hits,shielded,mean_latency_us,p99_us,origin_bytes,redundancy";

pub fn write_sweep_csv(mut w: impl std::io::Write, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for row in rows {
        let r = &row.report;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{:.3},{},{},{:.6}",
            architecture_name(row.job.architecture),
            row.job.policy.as_str(),
            row.job.capacity_bytes,
            r.requests,
            r.hits,
            r.misses,
            r.pseudo_hits,
            r.shielded,
            r.mean_latency_us,
            r.p99_us,
            r.origin_bytes,
            r.final_redundancy,
        )?;
    }
    Ok(())
}
