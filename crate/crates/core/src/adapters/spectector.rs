//! Spectector console output (modeled on the 2022 release).
//!
//! ```text
//! [program] case_1.s
//! [entry] victim_function_v01
//! [mode] sni
//! [violation] 0x1156 case_1.c:12 speculative load of publicarray2
//! [SNI] program is unsafe
//! ```
//!
//! The first non-blank line must be a `[program]` tag. Each `[violation]`
//! line is `<hex ip | -> <file:line | -> <free text>`. A closing
//! `[SNI] program is safe|unsafe` line marks a completed run; without it the
//! verdict is marked as not terminated. Other tagged or untagged lines are
//! progress chatter and are skipped.

use alloc::vec::Vec;

use super::{column_of, malformed, parse_hex, parse_location, resolve, AdapterError};
use crate::leakage::{Detector, DetectorVerdict, LeakageKind, LeakagePoint};
use crate::srcmap::AddressMap;

pub fn parse_spectector_output(text: &str, map: Option<&AddressMap>) -> Result<DetectorVerdict, AdapterError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty());

    match lines.next() {
        Some((_, l)) if l.trim_start().starts_with("[program]") => {}
        Some((n, _)) => return Err(malformed(n, 1, "expected `[program]` header")),
        None => return Err(malformed(1, 1, "empty output")),
    }

    let mut points = Vec::new();
    let mut outcome: Option<(usize, bool)> = None;
    for (n, line) in lines {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("[violation]") {
            if outcome.is_some() {
                return Err(malformed(n, 1, "violation after final verdict"));
            }
            let rest = rest.trim_start();
            let mut parts = rest.splitn(3, char::is_whitespace);
            let ip_tok = parts.next().unwrap_or("");
            let loc_tok = parts.next().ok_or_else(|| malformed(n, line.len() + 1, "missing source location"))?;
            let detail = parts.next().unwrap_or("").trim();
            let ip = match ip_tok {
                "-" => None,
                tok => Some(parse_hex(tok).ok_or_else(|| malformed(n, column_of(line, tok), "bad instruction address"))?),
            };
            let loc = parse_location(loc_tok).map_err(|m| malformed(n, column_of(line, loc_tok), m))?;
            let mut p = LeakagePoint::new(LeakageKind::SpectreV1, Detector::Spectector)
                .at(resolve(loc, ip, None, map))
                .with_detail(detail);
            p.ip = ip;
            points.push(p);
        } else if let Some(rest) = t.strip_prefix("[SNI]") {
            let safe = match rest.trim() {
                "program is safe" => true,
                "program is unsafe" => false,
                other => return Err(malformed(n, 7, alloc::format!("unknown SNI verdict `{other}`"))),
            };
            if outcome.is_some() {
                return Err(malformed(n, 1, "duplicate SNI verdict"));
            }
            outcome = Some((n, safe));
        }
    }

    match outcome {
        Some((n, true)) if !points.is_empty() => Err(malformed(n, 1, "program reported safe but violations were listed")),
        Some((n, false)) if points.is_empty() => Err(malformed(n, 1, "program reported unsafe without any violation")),
        Some(_) => Ok(DetectorVerdict::new(Detector::Spectector, points)),
        None => {
            let mut v = DetectorVerdict::new(Detector::Spectector, points);
            v.terminated = false;
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn safe_run() {
        let v = parse_spectector_output("[program] a.s\n[entry] f\n[SNI] program is safe\n", None).unwrap();
        assert!(v.points.is_empty() && v.terminated);
    }

    #[test]
    fn truncated_run_is_not_terminated() {
        let v = parse_spectector_output("[program] a.s\n[violation] 0x10 a.c:3 leak\n", None).unwrap();
        assert!(!v.terminated);
        assert_eq!(v.points[0].line(), Some(3));
        assert_eq!(v.points[0].ip, Some(0x10));
        assert_eq!(v.points[0].detail, "leak");
    }

    #[test]
    fn inconsistent_verdicts_are_rejected() {
        assert!(parse_spectector_output("[program] a\n[violation] - a.c:1 x\n[SNI] program is safe\n", None).is_err());
        assert!(parse_spectector_output("[program] a\n[SNI] program is unsafe\n", None).is_err());
        assert!(parse_spectector_output("[progrm] a\n", None).is_err());
        assert!(matches!(
            parse_spectector_output("[program] a\n[violation] zz a.c:1\n", None),
            Err(AdapterError::MalformedReport { line: 2, column: 13, .. })
        ));
    }
}
