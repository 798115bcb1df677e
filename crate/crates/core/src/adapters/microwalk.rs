//! Microwalk analysis reports.
//!
//! Accepted shape (fixture `microwalk_aes.txt`, exported from a Microwalk
//! 3.1.1-pin instruction-leakage run):
//!
//! ```text
//! Microwalk leakage report
//! tool-version: 3.1.1-pin
//! testcases: 16
//!
//! [memory-access]
//! libaes.so:0x16a4  SubBytes  aes.c:57  4.000 bits
//! libaes.so:0x16b2  SubBytes  -         3.000 bits
//! [control-flow]
//! ...
//! [loop-bound]
//! ...
//! ```
//!
//! `#` starts a comment line. An entry is `<image>:<hex offset> <function>
//! <file:line | -> <bits> bits`; when the location is `-` the address map
//! resolves the offset.

use alloc::vec::Vec;

use super::{column_of, malformed, parse_hex, parse_location, resolve, AdapterError};
use crate::leakage::{Detector, DetectorVerdict, LeakageKind, LeakagePoint};
use crate::srcmap::AddressMap;

const TITLE: &str = "Microwalk leakage report";

pub fn parse_microwalk_report(text: &str, map: &AddressMap) -> Result<DetectorVerdict, AdapterError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    match lines.next() {
        Some((_, l)) if l.trim() == TITLE => {}
        Some((n, l)) => return Err(malformed(n, 1, alloc::format!("expected `{TITLE}`, found `{l}`"))),
        None => return Err(malformed(1, 1, "empty report")),
    }

    let mut section: Option<LeakageKind> = None;
    let mut points = Vec::new();
    for (n, line) in lines {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = Some(match name {
                "memory-access" => LeakageKind::MemoryAccess,
                "control-flow" => LeakageKind::ConditionalBranch,
                "loop-bound" => LeakageKind::LoopBound,
                other => {
                    return Err(malformed(n, 2, alloc::format!("unknown section `{other}`")))
                }
            });
            continue;
        }
        let Some(kind) = section else {
            // header key/value block
            if t.split_once(": ").is_some_and(|(k, _)| !k.is_empty() && !k.contains(char::is_whitespace)) {
                continue;
            }
            return Err(malformed(n, 1, "entry outside of a section"));
        };

        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 5 || fields[4] != "bits" {
            return Err(malformed(n, 1, "expected `<image>:<offset> <function> <file:line|-> <bits> bits`"));
        }
        let ip = fields[0]
            .rsplit_once(':')
            .and_then(|(_, off)| parse_hex(off))
            .ok_or_else(|| malformed(n, 1, "bad instruction address"))?;
        let loc = parse_location(fields[2]).map_err(|m| malformed(n, column_of(line, fields[2]), m))?;
        let bits: f64 = fields[3]
            .parse()
            .ok()
            .filter(|b: &f64| b.is_finite() && *b >= 0.0)
            .ok_or_else(|| malformed(n, column_of(line, fields[3]), "leakage must be a non-negative number"))?;

        points.push(
            LeakagePoint::new(kind, Detector::Microwalk)
                .at(resolve(loc, Some(ip), Some(fields[1]), Some(map)))
                .with_ip(ip)
                .with_severity(bits)
                .with_detail(alloc::format!("{} in {}", fields[0], fields[1])),
        );
    }
    Ok(DetectorVerdict::new(Detector::Microwalk, points))
}
