use std::collections::BTreeSet;
use std::path::PathBuf;

use zeroleak_core::srcmap::{classify_line, parse_annotated_disassembly, DisasmLine};

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/fixtures/srcmap").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// (address, file, line) for every instruction line, taking the marker that
/// precedes it in the listing.
fn preceding_annotations(text: &str) -> Vec<(u64, String, u32)> {
    let mut current: Option<(String, u32)> = None;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.ends_with(">:") {
            current = None;
            continue;
        }
        if let Some((file, no)) = line.rsplit_once(':') {
            if file.ends_with(".c") && !file.contains(char::is_whitespace) {
                current = Some((file.to_string(), no.parse().unwrap()));
                continue;
            }
        }
        let t = line.trim_start();
        if line.starts_with(' ') {
            if let Some((addr, rest)) = t.split_once(':') {
                if rest.starts_with('\t') {
                    let (f, l) = current.clone().expect("every instruction follows a marker");
                    out.push((u64::from_str_radix(addr, 16).unwrap(), f, l));
                }
            }
        }
    }
    out
}

#[test]
fn fixture_shape() {
    let text = fixture("ct_memory_leakage_case_2.objdump.txt");
    let mut functions = 0;
    let mut markers = 0;
    for l in text.lines() {
        match classify_line(l) {
            DisasmLine::FunctionHeader { .. } => functions += 1,
            DisasmLine::SourceMarker { .. } => markers += 1,
            _ => {}
        }
    }
    assert!(functions >= 2 && markers >= 5, "{functions} functions, {markers} markers");
}

#[test]
fn every_instruction_resolves_to_its_preceding_annotation() {
    let text = fixture("ct_memory_leakage_case_2.objdump.txt");
    let map = parse_annotated_disassembly(&text).unwrap();
    let expected = preceding_annotations(&text);
    assert_eq!(expected.len(), 49);
    for (addr, file, line) in expected {
        let loc = map.lookup(addr).unwrap_or_else(|| panic!("0x{addr:x} unresolved"));
        assert_eq!((loc.file.as_str(), loc.line), (file.as_str(), line), "at 0x{addr:x}");
    }
}

#[test]
fn agrees_with_addr2line() {
    let map = parse_annotated_disassembly(&fixture("ct_memory_leakage_case_2.objdump.txt")).unwrap();
    let golden = fixture("ct_memory_leakage_case_2.addr2line.txt");
    let mut n = 0;
    for l in golden.lines().filter(|l| !l.starts_with('#')) {
        let (addr, loc) = l.split_once(' ').unwrap();
        let addr = u64::from_str_radix(addr.trim_start_matches("0x"), 16).unwrap();
        let got = map.lookup(addr).unwrap();
        assert_eq!(format!("{}:{}", got.file, got.line), loc, "at 0x{addr:x}");
        n += 1;
    }
    assert_eq!(n, 49);
}

#[test]
fn functions_and_ranges() {
    let map = parse_annotated_disassembly(&fixture("ct_memory_leakage_case_2.objdump.txt")).unwrap();
    assert_eq!(map.function_at(0x50), Some("memory_leakage_case_2_transform"));
    assert_eq!(map.function_at(0x88), Some("memory_leakage_case_2"));
    assert_eq!(map.lookup(0x9c), None);
    let r = map.ranges();
    assert!(r.windows(2).all(|w| w[0].end <= w[1].start));
    // every ip inside a range resolves like the range start
    for range in r {
        for ip in range.start..range.end {
            assert_eq!(map.lookup(ip), range.location.as_ref());
        }
    }
    let lines: BTreeSet<u32> = r.iter().filter_map(|x| x.location.as_ref().map(|l| l.line)).collect();
    assert_eq!(lines.into_iter().collect::<Vec<_>>(), [5, 6, 7, 8, 9, 11, 12, 14, 16, 17, 18, 19]);
}
