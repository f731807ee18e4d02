//! Trace CSV and summary JSON emission. Every file is written to a temporary
//! sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use sreda_core::RunTrace;

use crate::error::HarnessError;

pub const CSV_HEADER: [&str; 9] =
    ["k", "eta_k", "v_norm", "u_norm", "evals_physical", "evals_paper", "phi_grad_norm", "delta_k", "Delta_k"];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trace_csv(trace: &RunTrace) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &trace.rows {
        w.write_record([
            r.k.to_string(),
            cell(r.eta),
            cell(r.v_norm),
            cell(r.u_norm),
            r.evals_physical.to_string(),
            r.evals_paper.to_string(),
            cell(r.phi_grad_norm),
            cell(r.delta_k),
            cell(r.big_delta_k),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(std::io::Error::other(e.to_string())))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| HarnessError::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| HarnessError::Io(std::io::Error::other(e)))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
