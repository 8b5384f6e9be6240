//! Report output: one-line human summary, full JSON, and a per-window CSV
//! time series.

use std::io::Write;

use cogent_core::engine::SimReport;

/// Fixed-format one-liner; values in ms / Gbit/s for readability.
pub fn summary_line(r: &SimReport) -> String {
    format!(
        "requests={} hits={} misses={} pseudo={} shielded={} \
         mean_ms={:.3} p99_ms={:.3} p999_ms={:.3} origin_gb={:.3} origin_gbps={:.4} \
         redundancy={:.4}",
        r.requests,
        r.hits,
        r.misses,
        r.pseudo_hits,
        r.shielded,
        r.mean_latency_us / 1e3,
        r.p99_us as f64 / 1e3,
        r.p999_us as f64 / 1e3,
        r.origin_bytes as f64 / 1e9,
        r.origin_bytes_per_sec * 8.0 / 1e9,
        r.final_redundancy,
    )
}

pub fn write_json(mut w: impl Write, r: &SimReport) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut w, r)?;
    writeln!(w)?;
    Ok(())
}

pub const SERIES_HEADER: &str =
    "window_start_us,requests,mean_latency_us,p99_us,origin_bytes,origin_bytes_per_sec,redundancy_rate";

pub fn write_series_csv(mut w: impl Write, r: &SimReport) -> std::io::Result<()> {
    writeln!(w, "{SERIES_HEADER}")?;
    for row in &r.windows {
        writeln!(
            w,
            "{},{},{:.3},{},{},{:.3},{:.6}",
            row.window_start_us,
            row.requests,
            row.mean_latency_us,
            row.p99_us,
            row.origin_bytes,
            row.origin_bytes_per_sec,
            row.redundancy_rate,
        )?;
    }
    Ok(())
}
