//! Execution-trace model and the `ZLTR` binary trace format.
//!
//! A trace file is little-endian: a 10-byte header (`ZLTR`, version `u16`,
//! input id `u32`) followed by fixed 25-byte records (`kind u8`, `ip u64`,
//! `payload u64`, `aux u64`) repeated to end of stream.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"ZLTR";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 10;
pub const RECORD_LEN: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum EventKind {
    Branch = 0,
    MemRead = 1,
    MemWrite = 2,
    Alloc = 3,
    Free = 4,
    Call = 5,
    Return = 6,
}

impl EventKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => Self::Branch,
            1 => Self::MemRead,
            2 => Self::MemWrite,
            3 => Self::Alloc,
            4 => Self::Free,
            5 => Self::Call,
            6 => Self::Return,
            _ => return None,
        })
    }

    pub fn is_memory_access(self) -> bool {
        matches!(self, Self::MemRead | Self::MemWrite)
    }

    pub fn is_control_flow(self) -> bool {
        matches!(self, Self::Branch | Self::Call | Self::Return)
    }
}

/// One runtime event. `ip` is a module-relative offset; the tracer subtracts
/// the image base before writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceEvent {
    pub kind: EventKind,
    pub ip: u64,
    pub payload: u64,
    pub aux: u64,
}

impl TraceEvent {
    pub const fn new(kind: EventKind, ip: u64, payload: u64, aux: u64) -> Self {
        Self { kind, ip, payload, aux }
    }

    pub const fn branch(ip: u64, taken: u64) -> Self {
        Self::new(EventKind::Branch, ip, taken, 0)
    }

    pub const fn read(ip: u64, addr: u64) -> Self {
        Self::new(EventKind::MemRead, ip, addr, 0)
    }

    pub const fn write(ip: u64, addr: u64) -> Self {
        Self::new(EventKind::MemWrite, ip, addr, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub input_id: u32,
    pub events: Vec<TraceEvent>,
}

impl ExecutionTrace {
    pub fn new(input_id: u32, events: Vec<TraceEvent>) -> Self {
        Self { input_id, events }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("stream does not start with the ZLTR magic")]
    BadMagic,
    #[error("unsupported trace format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated record at byte offset {offset}")]
    TruncatedRecord { offset: usize },
    #[error("unknown event kind {kind} at byte offset {offset}")]
    UnknownEventKind { kind: u8, offset: usize },
    #[error("duplicate input id {0} in bundle")]
    DuplicateInput(u32),
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    let mut w = [0u8; 4];
    w.copy_from_slice(&b[at..at + 4]);
    u32::from_le_bytes(w)
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    let mut w = [0u8; 8];
    w.copy_from_slice(&b[at..at + 8]);
    u64::from_le_bytes(w)
}

/// Decodes a complete trace file.
pub fn read_trace(bytes: &[u8]) -> Result<ExecutionTrace, TraceError> {
    if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
        return Err(TraceError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(TraceError::TruncatedRecord { offset: 4 });
    }
    let version = u16_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(TraceError::UnsupportedVersion(version));
    }
    let input_id = u32_at(bytes, 6);

    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(RECORD_LEN) {
        let offset = HEADER_LEN + body.len() - body.len() % RECORD_LEN;
        return Err(TraceError::TruncatedRecord { offset });
    }
    let mut events = Vec::with_capacity(body.len() / RECORD_LEN);
    for (i, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let offset = HEADER_LEN + i * RECORD_LEN;
        let kind = EventKind::from_byte(rec[0])
            .ok_or(TraceError::UnknownEventKind { kind: rec[0], offset })?;
        events.push(TraceEvent {
            kind,
            ip: u64_at(rec, 1),
            payload: u64_at(rec, 9),
            aux: u64_at(rec, 17),
        });
    }
    Ok(ExecutionTrace { input_id, events })
}

/// Encodes a trace in the `ZLTR` v1 layout.
pub fn write_trace(trace: &ExecutionTrace) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + trace.events.len() * RECORD_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&trace.input_id.to_le_bytes());
    for ev in &trace.events {
        out.push(ev.kind as u8);
        out.extend_from_slice(&ev.ip.to_le_bytes());
        out.extend_from_slice(&ev.payload.to_le_bytes());
        out.extend_from_slice(&ev.aux.to_le_bytes());
    }
    out
}

/// Traces of one target, one per secret input.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraceBundle {
    traces: Vec<ExecutionTrace>,
}

impl TraceBundle {
    /// Builds a bundle, rejecting repeated input ids. Traces are kept sorted
    /// by input id.
    pub fn new(mut traces: Vec<ExecutionTrace>) -> Result<Self, TraceError> {
        traces.sort_by_key(|t| t.input_id);
        for pair in traces.windows(2) {
            if pair[0].input_id == pair[1].input_id {
                return Err(TraceError::DuplicateInput(pair[0].input_id));
            }
        }
        Ok(Self { traces })
    }

    pub fn traces(&self) -> &[ExecutionTrace] {
        &self.traces
    }

    pub fn input_count(&self) -> usize {
        self.traces.len()
    }

    pub fn into_traces(self) -> Vec<ExecutionTrace> {
        self.traces
    }
}

/// Tag bit marking a payload as `(allocation id, byte offset)` rather than a
/// module-relative address.
pub const ALLOC_TAG: u64 = 1 << 63;
const ALLOC_ID_MASK: u64 = (1 << 31) - 1;
const ALLOC_OFFSET_MASK: u64 = (1 << 32) - 1;

/// Payload encoding for an access inside a tracked allocation.
pub fn encode_alloc_address(id: u32, offset: u32) -> u64 {
    ALLOC_TAG | ((u64::from(id) & ALLOC_ID_MASK) << 32) | u64::from(offset)
}

/// Inverse of [`encode_alloc_address`]; `None` for untagged payloads.
pub fn decode_alloc_address(payload: u64) -> Option<(u32, u32)> {
    if payload & ALLOC_TAG == 0 {
        return None;
    }
    Some((
        ((payload >> 32) & ALLOC_ID_MASK) as u32,
        (payload & ALLOC_OFFSET_MASK) as u32,
    ))
}

/// Runtime base addresses of the allocations announced by `Alloc` events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AllocationTable {
    bases: BTreeMap<u64, u64>,
}

impl AllocationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alloc_id: u64, base: u64) {
        self.bases.insert(alloc_id, base);
    }

    pub fn base(&self, alloc_id: u64) -> Option<u64> {
        self.bases.get(&alloc_id).copied()
    }
}

impl FromIterator<(u64, u64)> for AllocationTable {
    fn from_iter<I: IntoIterator<Item = (u64, u64)>>(iter: I) -> Self {
        Self { bases: iter.into_iter().collect() }
    }
}

/// Rewrites memory-access payloads that fall inside a live tracked
/// allocation into `(id, offset)` form so traces compare equal across heap
/// layouts. `Alloc` events (payload = id, aux = size) open an allocation,
/// `Free` (payload = id) closes it. Everything else passes through.
pub fn normalize_addresses(trace: &ExecutionTrace, allocations: &AllocationTable) -> ExecutionTrace {
    // id -> (base, size)
    let mut live: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    let mut events = Vec::with_capacity(trace.events.len());
    for ev in &trace.events {
        let mut ev = *ev;
        match ev.kind {
            EventKind::Alloc => {
                if let Some(base) = allocations.base(ev.payload) {
                    live.insert(ev.payload, (base, ev.aux));
                }
            }
            EventKind::Free => {
                live.remove(&ev.payload);
            }
            EventKind::MemRead | EventKind::MemWrite => {
                let hit = live.iter().find(|(_, &(base, size))| {
                    ev.payload >= base && ev.payload - base < size
                });
                if let Some((&id, &(base, _))) = hit {
                    ev.payload = encode_alloc_address(id as u32, (ev.payload - base) as u32);
                }
            }
            _ => {}
        }
        events.push(ev);
    }
    ExecutionTrace { input_id: trace.input_id, events }
}
