//! Unified leakage model shared by every detector adapter.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::srcmap::SourceLocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LeakageKind {
    MemoryAccess,
    ConditionalBranch,
    LoopBound,
    SpectreV1,
}

impl LeakageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MemoryAccess => "MemoryAccess",
            Self::ConditionalBranch => "ConditionalBranch",
            Self::LoopBound => "LoopBound",
            Self::SpectreV1 => "SpectreV1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    Builtin,
    /// Disassembly pattern scanner; advisory only.
    BuiltinScanner,
    Microwalk,
    Spectector,
    Pitchfork,
    KLEESpectre,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Builtin => "Builtin",
            Self::BuiltinScanner => "BuiltinScanner",
            Self::Microwalk => "Microwalk",
            Self::Spectector => "Spectector",
            Self::Pitchfork => "Pitchfork",
            Self::KLEESpectre => "KLEESpectre",
        }
    }

    pub fn is_advisory(self) -> bool {
        self == Self::BuiltinScanner
    }

    pub fn may_report_spectre(self) -> bool {
        matches!(
            self,
            Self::Spectector | Self::Pitchfork | Self::KLEESpectre | Self::BuiltinScanner
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakagePoint {
    pub kind: LeakageKind,
    /// `None` when the reporting tool gave an address the map cannot place.
    pub source: Option<SourceLocation>,
    pub ip: Option<u64>,
    pub severity_bits: Option<f64>,
    /// Sorted, deduplicated, never empty.
    pub detectors: Vec<Detector>,
    pub detail: String,
}

impl LeakagePoint {
    pub fn new(kind: LeakageKind, detector: Detector) -> Self {
        Self {
            kind,
            source: None,
            ip: None,
            severity_bits: None,
            detectors: alloc::vec![detector],
            detail: String::new(),
        }
    }

    pub fn at(mut self, source: Option<SourceLocation>) -> Self {
        self.source = source;
        self
    }

    pub fn with_ip(mut self, ip: u64) -> Self {
        self.ip = Some(ip);
        self
    }

    pub fn with_severity(mut self, bits: f64) -> Self {
        self.severity_bits = Some(bits);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> Option<u32> {
        self.source.as_ref().map(|s| s.line)
    }

    /// Dedup identity: kind plus file and line, or kind plus ip for points
    /// without a source line. The function name is not part of the key
    /// since tools disagree on whether they report it.
    pub fn key(&self) -> PointKey {
        let source = self.source.as_ref().map(|s| (s.file.clone(), s.line));
        PointKey { ip: if source.is_some() { None } else { self.ip }, source, kind: self.kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointKey {
    pub source: Option<(String, u32)>,
    pub kind: LeakageKind,
    pub ip: Option<u64>,
}

/// Result of one detector over one binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub tool: Detector,
    pub points: Vec<LeakagePoint>,
    /// `false` when the tool did not run to completion; its points may be
    /// incomplete and the verdict can never certify a target.
    pub terminated: bool,
}

impl DetectorVerdict {
    pub fn new(tool: Detector, points: Vec<LeakagePoint>) -> Self {
        Self { tool, points, terminated: true }
    }
}

fn cmp_severity(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

fn pick_detail(a: String, b: String) -> String {
    // longest wins, ties broken lexicographically: a total order, so the
    // merge stays commutative and associative.
    match a.len().cmp(&b.len()).then_with(|| b.cmp(&a)) {
        Ordering::Less => b,
        _ => a,
    }
}

fn merge_into(acc: &mut LeakagePoint, p: LeakagePoint) {
    if cmp_severity(p.severity_bits, acc.severity_bits) == Ordering::Greater {
        acc.severity_bits = p.severity_bits;
    }
    acc.detectors.extend(p.detectors);
    acc.detectors.sort_unstable();
    acc.detectors.dedup();
    let detail = core::mem::take(&mut acc.detail);
    acc.detail = pick_detail(detail, p.detail);
    acc.ip = match (acc.ip, p.ip) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    // same file/line by key; keep the richer (max) function annotation
    if p.source > acc.source {
        acc.source = p.source;
    }
}

/// Ordering for merged output: source (file, line) first, unplaced points
/// last, then kind, then ip.
pub fn cmp_points(a: &LeakagePoint, b: &LeakagePoint) -> Ordering {
    let ka = a.key();
    let kb = b.key();
    match (&ka.source, &kb.source) {
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (x, y) => x.cmp(y),
    }
    .then(ka.kind.cmp(&kb.kind))
    .then(ka.ip.cmp(&kb.ip))
}

/// Union of the points of every verdict, deduplicated by
/// [`LeakagePoint::key`] (max severity, detectors unioned).
pub fn merge_points<I: IntoIterator<Item = LeakagePoint>>(points: I) -> Vec<LeakagePoint> {
    let mut by_key: BTreeMap<PointKey, LeakagePoint> = BTreeMap::new();
    for p in points {
        match by_key.get_mut(&p.key()) {
            Some(acc) => merge_into(acc, p),
            None => {
                let mut p = p;
                p.detectors.sort_unstable();
                p.detectors.dedup();
                by_key.insert(p.key(), p);
            }
        }
    }
    let mut out: Vec<LeakagePoint> = by_key.into_values().collect();
    out.sort_by(cmp_points);
    out
}

pub fn merge_verdicts(verdicts: &[DetectorVerdict]) -> Vec<LeakagePoint> {
    merge_points(verdicts.iter().flat_map(|v| v.points.iter().cloned()))
}

/// Merged view over several verdicts, split into gating points and advisory
/// ones (from heuristic detectors).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MergedReport {
    pub points: Vec<LeakagePoint>,
    pub advisory: Vec<LeakagePoint>,
    pub tools: Vec<Detector>,
    pub all_terminated: bool,
    /// At least one non-advisory detector contributed.
    pub gated: bool,
}

impl MergedReport {
    pub fn from_verdicts(verdicts: &[DetectorVerdict]) -> Self {
        let (advisory, gating): (Vec<&DetectorVerdict>, Vec<&DetectorVerdict>) =
            verdicts.iter().partition(|v| v.tool.is_advisory());
        let mut tools: Vec<Detector> = verdicts.iter().map(|v| v.tool).collect();
        tools.sort_unstable();
        tools.dedup();
        Self {
            points: merge_points(gating.iter().flat_map(|v| v.points.iter().cloned())),
            advisory: merge_points(advisory.iter().flat_map(|v| v.points.iter().cloned())),
            tools,
            all_terminated: verdicts.iter().all(|v| v.terminated),
            gated: !gating.is_empty(),
        }
    }

    /// Secure only when a gating detector ran, every detector terminated, and
    /// no gating point remains.
    pub fn is_secure(&self) -> bool {
        self.gated && self.all_terminated && self.points.is_empty()
    }

    pub fn unique_leak_count(&self) -> usize {
        self.points.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn pt(kind: LeakageKind, line: u32, det: Detector) -> LeakagePoint {
        LeakagePoint::new(kind, det).at(Some(SourceLocation::new("a.c", line)))
    }

    #[test]
    fn same_point_from_two_tools_merges() {
        let a = DetectorVerdict::new(
            Detector::Spectector,
            vec![pt(LeakageKind::SpectreV1, 5, Detector::Spectector).with_severity(1.0)],
        );
        let b = DetectorVerdict::new(
            Detector::Pitchfork,
            vec![pt(LeakageKind::SpectreV1, 5, Detector::Pitchfork).with_severity(2.0)],
        );
        let m = merge_verdicts(&[a, b]);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].detectors, vec![Detector::Spectector, Detector::Pitchfork]);
        assert_eq!(m[0].severity_bits, Some(2.0));
    }

    #[test]
    fn instructions_on_one_line_are_one_point() {
        let m = merge_points(vec![
            pt(LeakageKind::MemoryAccess, 4, Detector::Builtin).with_ip(0x20).with_severity(2.0),
            pt(LeakageKind::MemoryAccess, 4, Detector::Builtin).with_ip(0x18).with_severity(4.0),
            LeakagePoint::new(LeakageKind::MemoryAccess, Detector::Builtin).with_ip(0x90),
            LeakagePoint::new(LeakageKind::MemoryAccess, Detector::Builtin).with_ip(0x98),
        ]);
        assert_eq!(m.len(), 3);
        assert_eq!((m[0].ip, m[0].severity_bits), (Some(0x18), Some(4.0)));
        assert_eq!(m[1].ip, Some(0x90));
    }

    #[test]
    fn disjoint_sets_sorted_by_source_then_kind() {
        let a = DetectorVerdict::new(
            Detector::Builtin,
            vec![pt(LeakageKind::MemoryAccess, 9, Detector::Builtin)],
        );
        let b = DetectorVerdict::new(
            Detector::Builtin,
            vec![
                pt(LeakageKind::ConditionalBranch, 9, Detector::Builtin),
                pt(LeakageKind::MemoryAccess, 2, Detector::Builtin),
            ],
        );
        let m = merge_verdicts(&[a, b]);
        let order: Vec<_> = m.iter().map(|p| (p.line().unwrap(), p.kind)).collect();
        assert_eq!(
            order,
            vec![
                (2, LeakageKind::MemoryAccess),
                (9, LeakageKind::MemoryAccess),
                (9, LeakageKind::ConditionalBranch)
            ]
        );
    }

    #[test]
    fn non_terminated_verdict_blocks_secure() {
        let ok = DetectorVerdict::new(Detector::Pitchfork, vec![]);
        let mut hung = DetectorVerdict::new(Detector::Spectector, vec![]);
        hung.terminated = false;
        assert!(MergedReport::from_verdicts(std::slice::from_ref(&ok)).is_secure());
        assert!(!MergedReport::from_verdicts(&[ok, hung]).is_secure());
    }

    #[test]
    fn advisory_alone_never_certifies() {
        let scan = DetectorVerdict::new(Detector::BuiltinScanner, vec![]);
        assert!(!MergedReport::from_verdicts(std::slice::from_ref(&scan)).is_secure());
        let flagged = DetectorVerdict::new(
            Detector::BuiltinScanner,
            vec![pt(LeakageKind::SpectreV1, 3, Detector::BuiltinScanner)],
        );
        let builtin = DetectorVerdict::new(Detector::Builtin, vec![]);
        let m = MergedReport::from_verdicts(&[flagged, builtin]);
        assert!(m.is_secure());
        assert_eq!(m.advisory.len(), 1);
    }

    fn arb_point() -> impl Strategy<Value = LeakagePoint> {
        (
            0..4u8,
            1..4u32,
            prop::option::of(0..3u64),
            prop::option::of(0..4u8),
            0..6u8,
            "[ab]{0,2}",
        )
            .prop_map(|(k, line, ip, sev, det, detail)| {
                let kind = [
                    LeakageKind::MemoryAccess,
                    LeakageKind::ConditionalBranch,
                    LeakageKind::LoopBound,
                    LeakageKind::SpectreV1,
                ][k as usize];
                let det = [
                    Detector::Builtin,
                    Detector::BuiltinScanner,
                    Detector::Microwalk,
                    Detector::Spectector,
                    Detector::Pitchfork,
                    Detector::KLEESpectre,
                ][det as usize];
                let mut p = pt(kind, line, det).with_detail(detail);
                p.ip = ip;
                p.severity_bits = sev.map(f64::from);
                p
            })
    }

    fn arb_verdict() -> impl Strategy<Value = DetectorVerdict> {
        (prop::collection::vec(arb_point(), 0..5), any::<bool>()).prop_map(|(points, t)| {
            let mut v = DetectorVerdict::new(Detector::Builtin, points);
            v.terminated = t;
            v
        })
    }

    proptest! {
        #[test]
        fn merge_is_idempotent_commutative_associative(
            a in arb_verdict(), b in arb_verdict(), c in arb_verdict()
        ) {
            let ab = merge_verdicts(&[a.clone(), b.clone()]);
            let ba = merge_verdicts(&[b.clone(), a.clone()]);
            prop_assert_eq!(&ab, &ba);
            prop_assert_eq!(merge_points(ab.iter().cloned().chain(ab.iter().cloned())), ab.clone());
            let left = merge_points(ab.into_iter().chain(c.points.iter().cloned()));
            let bc = merge_verdicts(&[b, c]);
            let right = merge_points(a.points.iter().cloned().chain(bc));
            prop_assert_eq!(left, right);
        }

        #[test]
        fn unterminated_input_taints_secure(vs in prop::collection::vec(arb_verdict(), 1..4)) {
            let m = MergedReport::from_verdicts(&vs);
            if vs.iter().any(|v| !v.terminated) {
                prop_assert!(!m.is_secure());
            }
            if m.is_secure() {
                prop_assert!(vs.iter().all(|v| v.terminated && v.points.is_empty()));
            }
        }
    }
}
