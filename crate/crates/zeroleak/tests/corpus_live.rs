//! Live runs over the C corpus. Each test returns early when the
//! toolchain is missing.

mod common;

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use zeroleak::bench::{run_bench, BenchConfig, BenchError, BenchVariant, GADGET_CASES};
use zeroleak::detect::{DetectOptions, DetectionReport};
use zeroleak::target::{Stage, TargetSpec};
use zeroleak::verify::verify;
use zeroleak_core::leakage::LeakageKind;

// compiles and cycle counts interfere with each other
static SERIAL: Mutex<()> = Mutex::new(());

/// Builds, tests and detects on a fresh stage of the spec.
fn detect(spec: &TargetSpec) -> DetectionReport {
    let v = verify(spec, &Stage::new(&spec.root).unwrap(), &DetectOptions::default()).unwrap();
    v.detection.unwrap_or_else(|| panic!("{}: {:?}", spec.name, v.outcome))
}

fn expected() -> BTreeMap<String, Option<String>> {
    serde_json::from_str(&common::read(&common::fixtures().join("expected_channels.json"))).unwrap()
}

#[test]
fn corpus_sweep() {
    if common::skip_without_toolchain("corpus_sweep") {
        return;
    }
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let corpus = common::private_corpus();
    let start = Instant::now();
    let mut flagged = 0;
    for (case, channel) in expected() {
        let spec = TargetSpec::load(&corpus.path().join("cases").join(&case).join("target.json")).unwrap();
        let report = detect(&spec);
        let kinds: Vec<LeakageKind> = report.merged.points.iter().map(|p| p.kind).collect();
        match channel.as_deref() {
            None => assert!(report.is_secure(), "{case}: {kinds:?}"),
            Some("MemoryAccess") => assert!(kinds.contains(&LeakageKind::MemoryAccess), "{case}: {kinds:?}"),
            Some(_) => assert!(
                kinds.iter().any(|k| matches!(k, LeakageKind::ConditionalBranch | LeakageKind::LoopBound)),
                "{case}: {kinds:?}"
            ),
        }
        flagged += usize::from(!report.is_secure());
    }
    assert_eq!(flagged, 18);
    assert!(start.elapsed() < Duration::from_secs(300), "sweep took {:?}", start.elapsed());
}

#[test]
fn early_exit_compare_leaks_when_optimized() {
    if common::skip_without_toolchain("early_exit_compare_leaks_when_optimized") {
        return;
    }
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let corpus = common::private_corpus();
    let spec = TargetSpec::load(&corpus.path().join("cases/equal/target.json")).unwrap();
    assert!(spec.build_cmd.contains("TARGET_OPT=-O2"));
    let report = detect(&spec);
    assert!(!report.is_secure());
}

#[test]
fn source_fences_cost_cycles() {
    if common::skip_without_toolchain("source_fences_cost_cycles") {
        return;
    }
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let corpus = common::private_corpus();
    let mut cfg = BenchConfig::new(corpus.path());
    cfg.iterations = 20_000;
    let table = match run_bench(&cfg, &[BenchVariant::Baseline, BenchVariant::InlineLfence]) {
        Err(BenchError::HarnessUnavailable(why)) => {
            eprintln!("source_fences_cost_cycles: skipped, {why}");
            return;
        }
        r => r.unwrap(),
    };
    for case in GADGET_CASES.iter().filter(|c| BenchVariant::InlineLfence.applies_to(c)) {
        let mut base = table.median(case, BenchVariant::Baseline).unwrap();
        let mut fenced = table.median(case, BenchVariant::InlineLfence).unwrap();
        // a tie is re-measured in isolation before it counts as a failure
        for _ in 0..3 {
            if fenced > base {
                break;
            }
            cfg.cases = vec![case.to_string()];
            let t = run_bench(&cfg, &[BenchVariant::Baseline, BenchVariant::InlineLfence]).unwrap();
            base = t.median(case, BenchVariant::Baseline).unwrap();
            fenced = t.median(case, BenchVariant::InlineLfence).unwrap();
        }
        assert!(fenced > base, "case {case}: baseline {base} cc, inline_lfence {fenced} cc");
    }
}
