//! Trace files: CSV with a fixed column set plus a JSON metadata sidecar.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::experiment::Experiment;

pub const TRACE_COLUMNS: [&str; 12] = [
    "iteration",
    "objective",
    "relative_error",
    "best_relative_error",
    "guarantee",
    "lipschitz",
    "weight",
    "occupancy",
    "gradient_calls",
    "prox_calls",
    "objective_calls",
    "restart",
];

/// 17 significant digits.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(e: &Experiment) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    let mut best = f64::INFINITY;
    for (row, rel) in e.trace.rows.iter().zip(e.relative_errors()) {
        best = best.min(rel);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.iteration,
            float(row.objective),
            float(rel),
            float(best),
            float(row.guarantee),
            float(row.lipschitz),
            float(row.weight),
            row.occupancy,
            row.gradient_calls,
            row.prox_calls,
            row.objective_calls,
            u8::from(row.restart),
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// `trace.csv` → `trace.meta.json`.
pub fn meta_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("meta.json")
}

/// Writes the trace and its metadata; returns the metadata path.
pub fn write_trace(e: &Experiment, path: &Path) -> io::Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, trace_csv(e))?;
    let meta = meta_path(path);
    let json = serde_json::to_string_pretty(&e.meta).map_err(io::Error::other)?;
    fs::write(&meta, json + "\n")?;
    Ok(meta)
}

/// File name used for one run of a batch.
pub fn batch_file_name(e: &Experiment) -> String {
    format!("{}_{}_m{}_seed{}.csv", e.meta.problem, e.meta.method, e.meta.m, e.meta.seed)
}
