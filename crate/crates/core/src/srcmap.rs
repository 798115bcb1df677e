//! Instruction-address to source-line mapping built from line-annotated
//! disassembly (`objdump -dl` style output).
//!
//! Recognized lines:
//! - function headers `0000000000001139 <symbol>:`
//! - source markers `path/to/file.c:42`, optionally followed by
//!   ` (discriminator N)`
//! - instructions `    1139:\t55   \tpush   %rbp`
//!
//! Everything else is ignored.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLocation {
    pub file: String,
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
}

impl SourceLocation {
    pub fn new(file: impl Into<String>, line: u32) -> Self {
        Self { file: file.into(), line, function: None }
    }

    pub fn with_function(mut self, function: impl Into<String>) -> Self {
        self.function = Some(function.into());
        self
    }
}

impl core::fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// Half-open address range `[start, end)` and what it maps to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressRange {
    pub start: u64,
    pub end: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// `None` for instructions that precede every source marker of their
    /// function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<SourceLocation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressMap {
    ranges: Vec<AddressRange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SrcmapError {
    #[error("no instruction lines found in disassembly")]
    NoInstructionsFound,
}

/// One classified disassembly line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisasmLine<'a> {
    FunctionHeader { addr: u64, symbol: &'a str },
    SourceMarker { file: &'a str, line: u32 },
    Instruction { addr: u64, len: Option<u64>, text: &'a str },
    Other,
}

fn is_hex(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_hexdigit())
}

fn is_byte_token(s: &str) -> bool {
    s.len() == 2 && is_hex(s)
}

pub fn classify_line(raw: &str) -> DisasmLine<'_> {
    let line = raw.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() {
        return DisasmLine::Other;
    }
    if let Some(insn) = classify_instruction(line) {
        return insn;
    }
    if line.starts_with([' ', '\t']) {
        return DisasmLine::Other;
    }

    // `<addr> <symbol>:`
    if let Some(rest) = line.strip_suffix(">:") {
        if let Some((addr, sym)) = rest.split_once(" <") {
            if is_hex(addr) {
                if let Ok(a) = u64::from_str_radix(addr, 16) {
                    return DisasmLine::FunctionHeader { addr: a, symbol: sym };
                }
            }
        }
    }
    let body = match line.find(" (discriminator ") {
        Some(i) if line.ends_with(')') => &line[..i],
        _ => line,
    };
    if let Some((file, num)) = body.rsplit_once(':') {
        if !file.is_empty() && !num.is_empty() && num.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(n) = num.parse::<u32>() {
                if n >= 1 {
                    return DisasmLine::SourceMarker { file, line: n };
                }
            }
        }
    }
    DisasmLine::Other
}

fn classify_instruction(line: &str) -> Option<DisasmLine<'_>> {
    let (addr, rest) = line.trim_start().split_once(':')?;
    if !is_hex(addr) || !rest.starts_with('\t') {
        return None;
    }
    let addr = u64::from_str_radix(addr, 16).ok()?;
    let rest = &rest[1..];
    // With raw bytes: "55 48 89\tmnemonic ops"; without: "mnemonic ops".
    let (len, text) = match rest.split_once('\t') {
        Some((bytes, text)) if bytes.split_whitespace().all(is_byte_token) => {
            (Some(bytes.split_whitespace().count() as u64), text.trim())
        }
        _ if rest.split_whitespace().all(is_byte_token) => {
            // continuation of a long instruction's byte dump
            (Some(rest.split_whitespace().count() as u64), "")
        }
        _ => (None, rest.trim()),
    };
    Some(DisasmLine::Instruction { addr, len, text })
}

struct Insn {
    addr: u64,
    len: Option<u64>,
    function: Option<String>,
    location: Option<SourceLocation>,
}

/// Builds an [`AddressMap`]. Each instruction takes the most recent
/// preceding source marker within its function and the enclosing symbol.
pub fn parse_annotated_disassembly(text: &str) -> Result<AddressMap, SrcmapError> {
    let mut insns: Vec<Insn> = Vec::new();
    let mut function: Option<String> = None;
    let mut location: Option<SourceLocation> = None;

    for raw in text.lines() {
        match classify_line(raw) {
            DisasmLine::FunctionHeader { symbol, .. } => {
                function = Some(symbol.to_string());
                location = None;
            }
            DisasmLine::SourceMarker { file, line } => {
                location = Some(SourceLocation {
                    file: file.to_string(),
                    line,
                    function: function.clone(),
                });
            }
            DisasmLine::Instruction { addr, len, .. } => insns.push(Insn {
                addr,
                len,
                function: function.clone(),
                location: location.clone(),
            }),
            DisasmLine::Other => {}
        }
    }
    if insns.is_empty() {
        return Err(SrcmapError::NoInstructionsFound);
    }

    insns.sort_by_key(|i| i.addr);
    insns.dedup_by_key(|i| i.addr);

    let mut ranges: Vec<AddressRange> = Vec::with_capacity(insns.len());
    for (idx, insn) in insns.iter().enumerate() {
        let next = insns.get(idx + 1).map(|n| n.addr);
        let end = match (insn.len, next) {
            (Some(len), Some(n)) => (insn.addr + len.max(1)).min(n),
            (Some(len), None) => insn.addr + len.max(1),
            (None, Some(n)) => n,
            (None, None) => insn.addr + 1,
        };
        match ranges.last_mut() {
            Some(prev)
                if prev.end == insn.addr
                    && prev.function == insn.function
                    && prev.location == insn.location =>
            {
                prev.end = end;
            }
            _ => ranges.push(AddressRange {
                start: insn.addr,
                end,
                function: insn.function.clone(),
                location: insn.location.clone(),
            }),
        }
    }
    Ok(AddressMap { ranges })
}

impl AddressMap {
    /// Builds a map from explicit ranges; they are sorted and overlapping
    /// tails are clipped so the result is non-overlapping.
    pub fn from_ranges(mut ranges: Vec<AddressRange>) -> Self {
        ranges.retain(|r| r.end > r.start);
        ranges.sort_by_key(|r| r.start);
        let mut out: Vec<AddressRange> = Vec::with_capacity(ranges.len());
        for r in ranges {
            if let Some(prev) = out.last_mut() {
                if prev.end > r.start {
                    prev.end = r.start;
                }
                if prev.end == prev.start {
                    out.pop();
                }
            }
            out.push(r);
        }
        Self { ranges: out }
    }

    pub fn ranges(&self) -> &[AddressRange] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn range_at(&self, ip: u64) -> Option<&AddressRange> {
        let idx = self.ranges.partition_point(|r| r.start <= ip);
        let r = self.ranges.get(idx.checked_sub(1)?)?;
        (ip < r.end).then_some(r)
    }

    /// Source line for `ip`; `None` outside every range or for
    /// function-only ranges.
    pub fn lookup(&self, ip: u64) -> Option<&SourceLocation> {
        self.range_at(ip)?.location.as_ref()
    }

    pub fn function_at(&self, ip: u64) -> Option<&str> {
        self.range_at(ip)?.function.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING: &str = "\
t:     file format elf64-x86-64


Disassembly of section .text:

0000000000001130 <helper>:
helper():
1130:\t55                   \tpush   %rbp
/src/a.c:3
    1131:\t48 89 e5             \tmov    %rsp,%rbp
    1134:\t8b 07                \tmov    (%rdi),%eax
/src/a.c:4 (discriminator 2)
    1136:\t5d                   \tpop    %rbp
    1137:\tc3                   \tret

0000000000001140 <main>:
main():
/src/b.c:10
    1140:\t48 83 ec 08          \tsub    $0x8,%rsp
    1144:\te8 00 00 00 00       \tcall   1149 <main+0x9>
";

    #[test]
    fn marker_and_header_classification() {
        assert_eq!(
            classify_line("0000000000001140 <main>:"),
            DisasmLine::FunctionHeader { addr: 0x1140, symbol: "main" }
        );
        assert_eq!(
            classify_line("/src/a.c:4 (discriminator 2)"),
            DisasmLine::SourceMarker { file: "/src/a.c", line: 4 }
        );
        assert_eq!(classify_line("main():"), DisasmLine::Other);
        assert_eq!(classify_line("t:     file format elf64-x86-64"), DisasmLine::Other);
        assert_eq!(
            classify_line("  1144:\te8 00 00 00 00       \tcall   1149 <main+0x9>"),
            DisasmLine::Instruction { addr: 0x1144, len: Some(5), text: "call   1149 <main+0x9>" }
        );
        assert_eq!(
            classify_line("  1144:\tcall   1149"),
            DisasmLine::Instruction { addr: 0x1144, len: None, text: "call   1149" }
        );
    }

    #[test]
    fn lookups_follow_preceding_marker() {
        let map = parse_annotated_disassembly(LISTING).unwrap();
        // 1130 has no preceding marker in its function
        assert_eq!(map.lookup(0x1130), None);
        assert_eq!(map.function_at(0x1130), Some("helper"));
        assert_eq!(map.lookup(0x1131).unwrap().line, 3);
        assert_eq!(map.lookup(0x1135).unwrap().line, 3);
        assert_eq!(map.lookup(0x1137).unwrap(), &SourceLocation::new("/src/a.c", 4).with_function("helper"));
        // gap between functions
        assert_eq!(map.range_at(0x1138), None);
        assert_eq!(map.lookup(0x1140).unwrap().file, "/src/b.c");
        assert_eq!(map.lookup(0x1148).unwrap().line, 10);
        // one past the last range end
        assert_eq!(map.lookup(0x1149), None);
    }

    #[test]
    fn empty_text_is_an_error() {
        assert_eq!(parse_annotated_disassembly(""), Err(SrcmapError::NoInstructionsFound));
        assert_eq!(
            parse_annotated_disassembly("0000 <f>:\n/a.c:1\n"),
            Err(SrcmapError::NoInstructionsFound)
        );
    }

    #[test]
    fn from_ranges_clips_overlap() {
        let r = |s, e, l| AddressRange {
            start: s,
            end: e,
            function: None,
            location: Some(SourceLocation::new("x.c", l)),
        };
        let map = AddressMap::from_ranges(alloc::vec![r(10, 20, 2), r(0, 15, 1)]);
        assert_eq!(map.lookup(9).unwrap().line, 1);
        assert_eq!(map.lookup(12).unwrap().line, 2);
        assert_eq!(map.lookup(19).unwrap().line, 2);
        assert_eq!(map.lookup(20), None);
        assert!(map.ranges().windows(2).all(|w| w[0].end <= w[1].start));
    }
}
