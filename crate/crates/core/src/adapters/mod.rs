//! Parsers turning external detector output into [`DetectorVerdict`]s.
//!
//! None of the supported tools document a stable output format, so each
//! grammar is pinned by committed fixture reports; see the module docs of
//! each adapter for the accepted shape.

use alloc::string::{String, ToString};

use thiserror::Error;

use crate::srcmap::{AddressMap, SourceLocation};

mod kleespectre;
mod microwalk;
mod pitchfork;
mod scanner;
mod spectector;

pub use kleespectre::parse_kleespectre_output;
pub use microwalk::parse_microwalk_report;
pub use pitchfork::parse_pitchfork_output;
pub use scanner::{builtin_spectre_scan, SCAN_WINDOW};
pub use spectector::parse_spectector_output;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("malformed report at {line}:{column}: {message}")]
    MalformedReport { line: usize, column: usize, message: String },
    #[error("unparsable disassembly: {0}")]
    UnparsableDisassembly(String),
}

pub(crate) fn malformed(line: usize, column: usize, message: impl ToString) -> AdapterError {
    AdapterError::MalformedReport { line, column, message: message.to_string() }
}

/// Column (1-based) of `needle` inside `line`, falling back to 1.
pub(crate) fn column_of(line: &str, needle: &str) -> usize {
    line.find(needle).map_or(1, |i| i + 1)
}

pub(crate) fn parse_hex(s: &str) -> Option<u64> {
    let s = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    if s.is_empty() {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

/// `file.c:12` (line ≥ 1); `-` means absent.
pub(crate) fn parse_location(s: &str) -> Result<Option<SourceLocation>, &'static str> {
    if s == "-" {
        return Ok(None);
    }
    let (file, line) = s.rsplit_once(':').ok_or("expected <file>:<line>")?;
    let line: u32 = line.parse().map_err(|_| "line number is not an integer")?;
    if line == 0 || file.is_empty() {
        return Err("source line must be >= 1 with a file name");
    }
    Ok(Some(SourceLocation::new(file, line)))
}

/// Explicit location if given, else the map's answer for `ip`.
pub(crate) fn resolve(
    explicit: Option<SourceLocation>,
    ip: Option<u64>,
    function: Option<&str>,
    map: Option<&AddressMap>,
) -> Option<SourceLocation> {
    let mut loc = explicit.or_else(|| Some(map?.lookup(ip?)?.clone()))?;
    if loc.function.is_none() {
        loc.function = function
            .map(ToString::to_string)
            .or_else(|| Some(map?.function_at(ip?)?.to_string()));
    }
    Some(loc)
}
