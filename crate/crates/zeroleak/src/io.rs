//! Trace files on disk.
//!
//! A bundle directory holds one `trace_<input_id>.zltr` file per input.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;
use zeroleak_core::trace::{read_trace, write_trace, ExecutionTrace, TraceBundle, TraceError};

#[derive(Debug, Error)]
pub enum BundleIoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
    #[error("{0}: no trace files found")]
    Empty(PathBuf),
}

pub fn trace_file_name(input_id: u32) -> String {
    format!("trace_{input_id}.zltr")
}

pub fn read_trace_file(path: &Path) -> Result<ExecutionTrace, BundleIoError> {
    let bytes = fs::read(path).map_err(|source| BundleIoError::Io { path: path.into(), source })?;
    read_trace(&bytes).map_err(|source| BundleIoError::Trace { path: path.into(), source })
}

/// Loads every `*.zltr` file in `dir` (non-recursive).
pub fn read_bundle_dir(dir: &Path) -> Result<TraceBundle, BundleIoError> {
    let io = |source| BundleIoError::Io { path: dir.into(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "zltr"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(BundleIoError::Empty(dir.into()));
    }
    let traces = paths.iter().map(|p| read_trace_file(p)).collect::<Result<Vec<_>, _>>()?;
    TraceBundle::new(traces).map_err(|source| BundleIoError::Trace { path: dir.into(), source })
}

pub fn write_bundle_dir(dir: &Path, bundle: &TraceBundle) -> Result<(), BundleIoError> {
    let io = |path: PathBuf| move |source| BundleIoError::Io { path, source };
    fs::create_dir_all(dir).map_err(io(dir.into()))?;
    for t in bundle.traces() {
        let path = dir.join(trace_file_name(t.input_id));
        fs::write(&path, write_trace(t)).map_err(io(path.clone()))?;
    }
    Ok(())
}
