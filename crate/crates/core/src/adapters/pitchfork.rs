//! Pitchfork (haybale-pitchfork 0.4 style) result summaries.
//!
//! ```text
//! pitchfork: analyzing function `case_1`
//! == results ==
//! paths explored: 4
//! violations: 2
//! - kind=address speculative=false ip=0x1156 loc=case_1.c:12 :: load from secret-dependent address
//! - kind=branch speculative=true ip=- loc=case_1.c:9 :: branch on secret
//! == end ==
//! ```
//!
//! Lines before `== results ==` are ignored. `address` violations map to
//! memory-access leaks, `branch` to conditional branches, and anything with
//! `speculative=true` to a Spectre v1 point. The `violations:` count must
//! match the listed entries. Output cut off before `== end ==` yields a
//! non-terminated verdict.

use alloc::vec::Vec;

use super::{column_of, malformed, parse_hex, parse_location, resolve, AdapterError};
use crate::leakage::{Detector, DetectorVerdict, LeakageKind, LeakagePoint};
use crate::srcmap::AddressMap;

pub fn parse_pitchfork_output(text: &str, map: Option<&AddressMap>) -> Result<DetectorVerdict, AdapterError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();

    let start = lines
        .iter()
        .position(|(_, l)| l.trim() == "== results ==")
        .ok_or_else(|| malformed(lines.last().map_or(1, |(n, _)| n + 1), 1, "missing `== results ==` section"))?;

    let mut declared: Option<(usize, usize)> = None;
    let mut ended = false;
    let mut points = Vec::new();
    for &(n, line) in &lines[start + 1..] {
        let t = line.trim();
        if ended {
            return Err(malformed(n, 1, "content after `== end ==`"));
        }
        if t == "== end ==" {
            ended = true;
        } else if let Some(v) = t.strip_prefix("paths explored:") {
            v.trim().parse::<u64>().map_err(|_| malformed(n, column_of(line, v.trim()), "bad path count"))?;
        } else if let Some(v) = t.strip_prefix("violations:") {
            let c = v.trim().parse::<usize>().map_err(|_| malformed(n, column_of(line, v.trim()), "bad violation count"))?;
            declared = Some((n, c));
        } else if let Some(entry) = t.strip_prefix("- ") {
            points.push(parse_entry(n, line, entry, map)?);
        } else {
            return Err(malformed(n, 1, alloc::format!("unexpected line `{t}`")));
        }
    }

    if !ended {
        let mut v = DetectorVerdict::new(Detector::Pitchfork, points);
        v.terminated = false;
        return Ok(v);
    }
    match declared {
        None => Err(malformed(lines[start].0, 1, "results lack a `violations:` count")),
        Some((n, c)) if c != points.len() => Err(malformed(
            n,
            1,
            alloc::format!("declared {c} violations, listed {}", points.len()),
        )),
        Some(_) => Ok(DetectorVerdict::new(Detector::Pitchfork, points)),
    }
}

fn parse_entry(n: usize, line: &str, entry: &str, map: Option<&AddressMap>) -> Result<LeakagePoint, AdapterError> {
    let (fields, detail) = match entry.split_once(" :: ") {
        Some((f, d)) => (f, d.trim()),
        None => (entry, ""),
    };
    let (mut kind, mut spec, mut ip, mut loc) = (None, None, None, None);
    for field in fields.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| malformed(n, column_of(line, field), "expected key=value"))?;
        let col = column_of(line, field);
        match k {
            "kind" => {
                kind = Some(match v {
                    "address" => LeakageKind::MemoryAccess,
                    "branch" => LeakageKind::ConditionalBranch,
                    _ => return Err(malformed(n, col, alloc::format!("unknown violation kind `{v}`"))),
                })
            }
            "speculative" => {
                spec = Some(match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(malformed(n, col, "speculative must be true or false")),
                })
            }
            "ip" => {
                ip = Some(match v {
                    "-" => None,
                    _ => Some(parse_hex(v).ok_or_else(|| malformed(n, col, "bad instruction address"))?),
                })
            }
            "loc" => loc = Some(parse_location(v).map_err(|m| malformed(n, col, m))?),
            _ => return Err(malformed(n, col, alloc::format!("unknown field `{k}`"))),
        }
    }
    let kind = kind.ok_or_else(|| malformed(n, 1, "missing kind"))?;
    let spec = spec.ok_or_else(|| malformed(n, 1, "missing speculative flag"))?;
    let ip = ip.ok_or_else(|| malformed(n, 1, "missing ip"))?;
    let loc = loc.ok_or_else(|| malformed(n, 1, "missing loc"))?;
    let kind = if spec { LeakageKind::SpectreV1 } else { kind };
    let mut p = LeakagePoint::new(kind, Detector::Pitchfork)
        .at(resolve(loc, ip, None, map))
        .with_detail(detail);
    p.ip = ip;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = "pitchfork: analyzing `f`\n== results ==\npaths explored: 2\nviolations: 2\n\
- kind=address speculative=false ip=0x10 loc=a.c:4 :: lookup\n\
- kind=branch speculative=true ip=- loc=a.c:2\n== end ==\n";

    #[test]
    fn kinds_map_and_speculation_wins() {
        let v = parse_pitchfork_output(OK, None).unwrap();
        assert!(v.terminated);
        assert_eq!(v.points[0].kind, LeakageKind::MemoryAccess);
        assert_eq!(v.points[0].detail, "lookup");
        assert_eq!(v.points[1].kind, LeakageKind::SpectreV1);
        assert_eq!(v.points[1].ip, None);
    }

    #[test]
    fn truncation_and_miscounts() {
        let cut = &OK[..OK.find("== end").unwrap()];
        assert!(!parse_pitchfork_output(cut, None).unwrap().terminated);
        let bad = OK.replace("violations: 2", "violations: 3");
        assert!(matches!(
            parse_pitchfork_output(&bad, None),
            Err(AdapterError::MalformedReport { line: 4, .. })
        ));
        assert!(parse_pitchfork_output("nothing here\n", None).is_err());
        assert!(parse_pitchfork_output(&OK.replace("kind=address", "kind=timing"), None).is_err());
    }
}
