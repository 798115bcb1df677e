//! Heuristic Spectre v1 gadget scanner over x86-64 disassembly.
//!
//! For every conditional jump, the fall-through path (up to [`SCAN_WINDOW`]
//! instructions, stopping at calls, returns and unconditional jumps) is
//! scanned for a load from an indexed non-stack address whose result then
//! flows, through register arithmetic or stack spills, into the address of
//! a second load. Both AT&T and Intel operand syntax are accepted.
//!
//! Results are advisory and tagged [`Detector::BuiltinScanner`].

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::AdapterError;
use crate::leakage::{Detector, DetectorVerdict, LeakageKind, LeakagePoint};
use crate::srcmap::{classify_line, parse_annotated_disassembly, AddressMap, DisasmLine};

pub const SCAN_WINDOW: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Operand {
    Reg(&'static str),
    Mem { regs: Vec<&'static str>, stack_slot: Option<String> },
    Imm,
    Other,
}

#[derive(Debug)]
struct Insn<'a> {
    addr: u64,
    mnemonic: &'a str,
    /// Sources first, destination last, whatever the input syntax.
    operands: Vec<Operand>,
}

const FAMILIES: &[(&str, &[&str])] = &[
    ("a", &["rax", "eax", "ax", "al", "ah"]),
    ("b", &["rbx", "ebx", "bx", "bl", "bh"]),
    ("c", &["rcx", "ecx", "cx", "cl", "ch"]),
    ("d", &["rdx", "edx", "dx", "dl", "dh"]),
    ("si", &["rsi", "esi", "si", "sil"]),
    ("di", &["rdi", "edi", "di", "dil"]),
    ("bp", &["rbp", "ebp", "bp", "bpl"]),
    ("sp", &["rsp", "esp", "sp", "spl"]),
    ("ip", &["rip", "eip"]),
];

fn reg_family(name: &str) -> Option<&'static str> {
    let name = name.trim_start_matches('%').to_ascii_lowercase();
    for (fam, names) in FAMILIES {
        if names.contains(&name.as_str()) {
            return Some(fam);
        }
    }
    // r8..r15 with optional d/w/b suffix
    const HIGH: [&str; 8] = ["r8", "r9", "r10", "r11", "r12", "r13", "r14", "r15"];
    let base = name.trim_end_matches(['d', 'w', 'b']);
    HIGH.iter().find(|h| **h == base).copied()
}

fn is_stack(fam: &str) -> bool {
    fam == "bp" || fam == "sp"
}

fn split_operands(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() {
        out.push(last);
    }
    out
}

fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| !(c.is_ascii_alphanumeric() || c == '%'))
        .filter(|w| !w.is_empty())
}

fn parse_operand(op: &str, intel: bool) -> Operand {
    let inner = if intel {
        op.find('[').zip(op.rfind(']')).map(|(a, b)| &op[a + 1..b])
    } else {
        op.find('(').zip(op.rfind(')')).map(|(a, b)| &op[a + 1..b])
    };
    if let Some(inner) = inner {
        let regs: Vec<&'static str> = words(inner).filter_map(reg_family).filter(|f| *f != "ip").collect();
        let stack_slot = match regs.as_slice() {
            [only] if is_stack(only) => {
                let disp = if intel { inner.replace(' ', "") } else { String::from(op.split('(').next().unwrap_or("")) };
                Some(alloc::format!("{only}{disp}"))
            }
            _ => None,
        };
        return Operand::Mem { regs, stack_slot };
    }
    let op = op.trim();
    if op.starts_with('$') || (intel && op.bytes().next().is_some_and(|b| b.is_ascii_digit() || b == b'-')) {
        return Operand::Imm;
    }
    // Intel size-qualified absolute memory without brackets is not produced by objdump
    match reg_family(op) {
        Some(f) => Operand::Reg(f),
        None => Operand::Other,
    }
}

fn parse_insn<'a>(addr: u64, text: &'a str, intel: bool) -> Option<Insn<'a>> {
    let text = text.split('#').next().unwrap_or("").trim();
    let text = text.split(" <").next().unwrap_or(text).trim();
    let mut rest = text;
    let mnemonic = loop {
        let (m, r) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
        rest = r.trim_start();
        if !matches!(m, "lock" | "rep" | "repz" | "repnz" | "repe" | "repne" | "bnd" | "notrack" | "data16" | "cs" | "ds") {
            break m;
        }
        if rest.is_empty() {
            break m;
        }
    };
    if mnemonic.is_empty() {
        return None;
    }
    let mut operands: Vec<Operand> = split_operands(rest).into_iter().map(|o| parse_operand(o, intel)).collect();
    if intel {
        operands.reverse();
    }
    Some(Insn { addr, mnemonic, operands })
}

fn is_conditional_jump(m: &str) -> bool {
    m.starts_with('j') && !m.starts_with("jmp")
}

fn ends_path(m: &str) -> bool {
    m.starts_with("jmp") || m.starts_with("call") || m.starts_with("ret") || m == "ud2" || m == "hlt"
}

/// Mnemonics whose destination keeps its old value mixed with the sources.
fn is_read_modify_write(m: &str) -> bool {
    const RMW: &[&str] = &[
        "add", "sub", "and", "or", "xor", "adc", "sbb", "imul", "shl", "shr", "sar", "sal", "rol", "ror",
    ];
    RMW.iter().any(|p| m.starts_with(p))
}

fn is_fence(m: &str) -> bool {
    m == "lfence" || m == "mfence"
}

struct Taint {
    regs: BTreeSet<&'static str>,
    slots: BTreeSet<String>,
}

/// Returns the address of the second (leaking) load, if any.
fn scan_path(path: &[Insn<'_>]) -> Option<(u64, u64)> {
    let mut t = Taint { regs: BTreeSet::new(), slots: BTreeSet::new() };
    let mut first_load: Option<u64> = None;
    for insn in path {
        let m = insn.mnemonic;
        if is_fence(m) {
            return None;
        }
        if ends_path(m) {
            break;
        }
        if is_conditional_jump(m) || m.starts_with("cmp") || m.starts_with("test") || m.starts_with("nop") {
            continue;
        }
        let Some((dst, srcs)) = insn.operands.split_last() else { continue };
        let is_lea = m.starts_with("lea");

        // loads through a tainted address register
        for op in insn.operands.iter() {
            if let Operand::Mem { regs, stack_slot: None } = op {
                if !is_lea && regs.iter().any(|r| t.regs.contains(r)) {
                    return first_load.map(|f| (f, insn.addr));
                }
            }
        }

        let src_tainted = srcs.iter().any(|s| match s {
            Operand::Reg(r) => t.regs.contains(r),
            Operand::Mem { stack_slot: Some(slot), .. } => t.slots.contains(slot),
            Operand::Mem { regs, stack_slot: None } => is_lea && regs.iter().any(|r| t.regs.contains(r)),
            _ => false,
        });
        let indexed_load = srcs.iter().any(|s| matches!(s, Operand::Mem { regs, stack_slot: None } if !regs.is_empty()));

        match dst {
            Operand::Reg(d) => {
                let zeroing = m.starts_with("xor") && srcs.first() == Some(dst);
                let keep = is_read_modify_write(m) && t.regs.contains(d) && !zeroing;
                if (indexed_load && !is_lea) || src_tainted || keep {
                    if indexed_load && !is_lea && first_load.is_none() {
                        first_load = Some(insn.addr);
                    }
                    t.regs.insert(d);
                } else {
                    t.regs.remove(d);
                }
            }
            Operand::Mem { stack_slot: Some(slot), .. } => {
                if src_tainted {
                    t.slots.insert(slot.clone());
                } else if !is_read_modify_write(m) {
                    t.slots.remove(slot);
                }
            }
            _ => {}
        }
    }
    None
}

/// Scans line-annotated disassembly. Points are placed at the conditional
/// branch's source line, since that is the statement a patch must change.
pub fn builtin_spectre_scan(disasm: &str) -> Result<DetectorVerdict, AdapterError> {
    let map = parse_annotated_disassembly(disasm)
        .map_err(|e| AdapterError::UnparsableDisassembly(alloc::format!("{e}")))?;
    let intel = disasm.contains(" PTR ") || (disasm.contains('[') && !disasm.contains('%'));

    let mut functions: Vec<Vec<Insn<'_>>> = Vec::new();
    let mut current: Vec<Insn<'_>> = Vec::new();
    for raw in disasm.lines() {
        match classify_line(raw) {
            DisasmLine::FunctionHeader { .. } => {
                if !current.is_empty() {
                    functions.push(core::mem::take(&mut current));
                }
            }
            DisasmLine::Instruction { addr, text, .. } if !text.is_empty() => {
                if let Some(i) = parse_insn(addr, text, intel) {
                    current.push(i);
                }
            }
            _ => {}
        }
    }
    if !current.is_empty() {
        functions.push(current);
    }

    let mut points = Vec::new();
    for insns in &functions {
        for (i, insn) in insns.iter().enumerate() {
            if !is_conditional_jump(insn.mnemonic) {
                continue;
            }
            let end = (i + 1 + SCAN_WINDOW).min(insns.len());
            if let Some((first, second)) = scan_path(&insns[i + 1..end]) {
                points.push(branch_point(&map, insn.addr, first, second));
            }
        }
    }
    Ok(DetectorVerdict::new(Detector::BuiltinScanner, points))
}

fn branch_point(map: &AddressMap, branch: u64, first: u64, second: u64) -> LeakagePoint {
    let source = map.lookup(branch).cloned();
    LeakagePoint::new(LeakageKind::SpectreV1, Detector::BuiltinScanner)
        .at(source)
        .with_ip(branch)
        .with_detail(alloc::format!(
            "branch at {branch:#x} guards a load at {first:#x} whose value indexes a load at {second:#x}"
        ))
}
