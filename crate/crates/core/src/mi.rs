//! Mutual-information leakage analysis over trace bundles.
//!
//! Inputs are assumed uniformly distributed and execution deterministic, so
//! the mutual information between the secret input and an observation equals
//! the Shannon entropy of the observation distribution across inputs.
//!
//! The observation for an instruction is the ordered sequence of payloads it
//! emitted in one trace (empty if it never ran). Memory accesses and control
//! flow at the same instruction address are observed separately.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint::{self, Fingerprint, Fingerprinter};
use crate::trace::{EventKind, TraceBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Channel {
    MemoryAccess,
    ControlFlow,
}

impl Channel {
    pub fn of(kind: EventKind) -> Option<Self> {
        if kind.is_memory_access() {
            Some(Self::MemoryAccess)
        } else if kind.is_control_flow() {
            Some(Self::ControlFlow)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageFinding {
    pub ip: u64,
    pub channel: Channel,
    pub mi_bits: f64,
    pub distinct_observations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("trace bundle is empty")]
    EmptyBundle,
    #[error("leakage analysis needs at least two inputs, got {0}")]
    TooFewInputs(usize),
}

fn check_size(bundle: &TraceBundle) -> Result<usize, AnalysisError> {
    match bundle.input_count() {
        0 => Err(AnalysisError::EmptyBundle),
        1 => Err(AnalysisError::TooFewInputs(1)),
        n => Ok(n),
    }
}

/// Shannon entropy in bits of a distribution given by class counts summing
/// to `n`. A single class yields exactly `0.0`.
pub fn entropy_bits<I: IntoIterator<Item = usize>>(counts: I, n: usize) -> f64 {
    let total = n as f64;
    let mut h = 0.0;
    let mut classes = 0;
    for c in counts {
        if c == 0 {
            continue;
        }
        classes += 1;
        let p = c as f64 / total;
        h -= p * libm::log2(p);
    }
    if classes <= 1 {
        0.0
    } else {
        h
    }
}

fn class_entropy(fps: &[Fingerprint]) -> (f64, usize) {
    let mut classes: BTreeMap<Fingerprint, usize> = BTreeMap::new();
    for fp in fps {
        *classes.entry(*fp).or_default() += 1;
    }
    (entropy_bits(classes.values().copied(), fps.len()), classes.len())
}

/// Per-instruction leakage. Returns one finding per `(ip, channel)` whose
/// observations are not identical across all inputs, ordered by descending
/// `mi_bits` then ascending `ip`.
pub fn analyze_bundle(bundle: &TraceBundle) -> Result<Vec<LeakageFinding>, AnalysisError> {
    let n = check_size(bundle)?;

    let per_trace: Vec<BTreeMap<(u64, Channel), Fingerprinter>> = bundle
        .traces()
        .iter()
        .map(|t| {
            let mut sites: BTreeMap<(u64, Channel), Fingerprinter> = BTreeMap::new();
            for ev in &t.events {
                if let Some(ch) = Channel::of(ev.kind) {
                    sites.entry((ev.ip, ch)).or_default().push_u64(ev.payload);
                }
            }
            sites
        })
        .collect();

    let mut keys: Vec<(u64, Channel)> = per_trace.iter().flat_map(|m| m.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();

    let absent = fingerprint::of_payloads(&[]);
    let mut findings = Vec::new();
    let mut fps = Vec::with_capacity(n);
    for key in keys {
        fps.clear();
        fps.extend(per_trace.iter().map(|m| m.get(&key).map_or(absent, Fingerprinter::finish)));
        let (mi_bits, distinct) = class_entropy(&fps);
        if distinct > 1 {
            findings.push(LeakageFinding {
                ip: key.0,
                channel: key.1,
                mi_bits,
                distinct_observations: distinct,
            });
        }
    }

    findings.sort_by(|a, b| {
        b.mi_bits
            .total_cmp(&a.mi_bits)
            .then(a.ip.cmp(&b.ip))
            .then(a.channel.cmp(&b.channel))
    });
    Ok(findings)
}

/// True when the observations at `(ip, channel)` differ only in how many
/// times the instruction ran: every input's payload sequence is a prefix of
/// the longest one. Such a difference is caused by control flow.
pub fn differs_only_in_count(bundle: &TraceBundle, ip: u64, channel: Channel) -> bool {
    let seqs: Vec<Vec<u64>> = bundle
        .traces()
        .iter()
        .map(|t| {
            t.events
                .iter()
                .filter(|e| e.ip == ip && Channel::of(e.kind) == Some(channel))
                .map(|e| e.payload)
                .collect()
        })
        .collect();
    let Some(longest) = seqs.iter().max_by_key(|s| s.len()) else {
        return false;
    };
    seqs.iter().all(|s| longest.starts_with(s))
}

/// Entropy of whole-trace fingerprints: zero iff every input produced the
/// same normalized event sequence.
pub fn whole_trace_mi(bundle: &TraceBundle) -> Result<f64, AnalysisError> {
    check_size(bundle)?;
    let fps: Vec<Fingerprint> =
        bundle.traces().iter().map(|t| fingerprint::of_events(&t.events)).collect();
    Ok(class_entropy(&fps).0)
}
