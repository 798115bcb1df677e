mod common;

use std::fs;
use std::path::Path;

use zeroleak::config::PipelineConfig;
use zeroleak::detect::DetectOptions;
use zeroleak::gateway::{ReplayBackend, ReplayEntry};
use zeroleak::report::SessionStatus;
use zeroleak::session::run_patch_session;
use zeroleak::target::{tree_checksum, Stage, TargetSpec};
use zeroleak::verify::{apply_patch, verify, VerificationOutcome};
use zeroleak_core::csrc::extract_code;
use zeroleak_core::leakage::LeakageKind;

const VICTIM: &str = "#include <stddef.h>\n\
\n\
int victim(size_t x, size_t size, const unsigned char *a) {\n\
    int r = 0;\n\
    if (x < size) {\n\
        r = a[x];\n\
    }\n\
    return r;\n\
}\n";

const TEST_DIAG: &str = "test.c:6: main: Assertion `victim(3, 8, a) == 3' failed.";

fn variant(body: &str) -> String {
    format!("int victim(size_t x, size_t size, const unsigned char *a) {{\n{body}}}\n")
}

/// A shell-only target: `build.sh` rejects sources containing SYNTAX,
/// `test.sh` rejects BROKEN and logs every run to `log`, and the detector
/// reports a speculative load until the source contains MASK.
fn toy(log: &Path) -> (tempfile::TempDir, TargetSpec) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("v.c"), VICTIM).unwrap();
    fs::write(
        root.join("build.sh"),
        "if grep -q SYNTAX \"$1/v.c\"; then echo \"$1/v.c:6: error: expected ';'\" >&2; exit 1; fi\n",
    )
    .unwrap();
    fs::write(
        root.join("test.sh"),
        format!(
            "touch \"$1/tested\"\necho run >> '{}'\nif grep -q BROKEN \"$1/v.c\"; then echo \"{}\" >&2; exit 1; fi\n",
            log.display(),
            TEST_DIAG.replace('`', "\\`")
        ),
    )
    .unwrap();
    fs::write(
        root.join("leaky.txt"),
        "[program] v.s\n[violation] 0x20 v.c:6 speculative load of a indexed by x\n[SNI] program is unsafe\n",
    )
    .unwrap();
    fs::write(root.join("safe.txt"), "[program] v.s\n[SNI] program is safe\n").unwrap();
    let spec: TargetSpec = serde_json::from_value(serde_json::json!({
        "name": "toy",
        "root": root,
        "source_files": ["v.c"],
        "function_name": "victim",
        "build_cmd": "sh {staging_dir}/build.sh {staging_dir}",
        "test_cmd": "sh {staging_dir}/test.sh {staging_dir}",
        "detector_cmds": [{
            "tool": "spectector",
            "cmd": "if grep -q MASK {staging_dir}/v.c; then cat {staging_dir}/safe.txt; else cat {staging_dir}/leaky.txt; fi"
        }],
        "check_commands": false
    }))
    .unwrap();
    spec.validate().unwrap();
    (dir, spec)
}

fn staged_with(spec: &TargetSpec, function: &str) -> Stage {
    let stage = Stage::new(&spec.root).unwrap();
    let cand = extract_code(&format!("```c\n{function}```"), "victim", Some(3), 1).unwrap();
    apply_patch(spec, &stage, &cand).unwrap();
    stage
}

#[test]
fn gates_run_in_order() {
    let logdir = tempfile::tempdir().unwrap();
    let log = logdir.path().join("tests.log");
    let (_dir, spec) = toy(&log);
    let before = tree_checksum(&spec.root).unwrap();
    let opts = DetectOptions::default();

    let baseline = Stage::new(&spec.root).unwrap();
    let v = verify(&spec, &baseline, &opts).unwrap();
    match &v.outcome {
        VerificationOutcome::Leaky(points) => {
            assert_eq!(points.len(), 1);
            assert_eq!(points[0].kind, LeakageKind::SpectreV1);
        }
        o => panic!("baseline: {o:?}"),
    }
    assert_eq!(v.leak_count(), Some(1));

    let bad = staged_with(&spec, &variant("    return SYNTAX;\n"));
    let v = verify(&spec, &bad, &opts).unwrap();
    assert_eq!(v.outcome, VerificationOutcome::SyntaxError("{staging_dir}/v.c:6: error: expected ';'".into()));
    assert!(v.detection.is_none());
    assert!(!bad.path().join("tested").exists(), "tests ran on a tree that does not build");

    let broken = staged_with(&spec, &variant("    return BROKEN;\n"));
    let v = verify(&spec, &broken, &opts).unwrap();
    assert_eq!(v.outcome, VerificationOutcome::TestFailure(TEST_DIAG.into()));
    assert!(broken.path().join("tested").exists());
    assert!(v.detection.is_none());

    let fixed = staged_with(&spec, &variant("    size_t MASK = 0 - (size_t)(x < size);\n    return a[x & MASK];\n"));
    let v = verify(&spec, &fixed, &opts).unwrap();
    assert_eq!(v.outcome, VerificationOutcome::Secure);
    assert_eq!(v.leak_count(), Some(0));

    assert_eq!(tree_checksum(&spec.root).unwrap(), before);
    assert_eq!(fs::read_to_string(spec.root.join("v.c")).unwrap(), VICTIM);
}

#[test]
fn test_failures_feed_the_retry_prompt() {
    let logdir = tempfile::tempdir().unwrap();
    let log = logdir.path().join("tests.log");
    let (_dir, spec) = toy(&log);
    let before = tree_checksum(&spec.root).unwrap();
    let fence = |b: &str| format!("```c\n{}```", variant(b));
    let script = vec![
        fence("    return SYNTAX;\n"),
        fence("    return BROKEN;\n"),
        fence("    size_t MASK = 0 - (size_t)(x < size);\n    return a[x & MASK];\n"),
    ];
    let entries: Vec<ReplayEntry> = script
        .into_iter()
        .map(|t| ReplayEntry { fingerprint: None, response_text: t, prompt_tokens: 100, completion_tokens: 50 })
        .collect();
    let script_path = logdir.path().join("script.json");
    fs::write(&script_path, serde_json::to_string(&entries).unwrap()).unwrap();
    let config = PipelineConfig::from_json(
        r#"{"model": {"preset": "gpt-4-0613"}, "backend": {"kind": "replay", "script": "script.json"}}"#,
        logdir.path(),
    )
    .unwrap();
    let backend = ReplayBackend::load(&script_path).unwrap();

    let report = run_patch_session(&config, &spec, &backend).unwrap();
    let outcomes: Vec<&str> = report.trials.iter().map(|t| t.outcome.as_str()).collect();
    assert_eq!(outcomes, ["SyntaxError", "TestFailure", "Secure"]);
    assert_eq!(report.trials[0].option, "SpectreCond");
    assert!(report.trials[0].prompt.contains("if (x < size)"));
    assert_eq!(report.trials[2].option, "Retry");
    assert!(report.trials[2].prompt.contains(TEST_DIAG), "{}", report.trials[2].prompt);
    assert_eq!(report.status, SessionStatus::Secure);
    assert!(report.best_candidate.as_ref().unwrap().function_text.contains("MASK"));

    // baseline plus the two candidates that built
    assert_eq!(fs::read_to_string(&log).unwrap().lines().count(), 3);
    assert_eq!(tree_checksum(&spec.root).unwrap(), before);
}

#[test]
fn corpus_case_before_and_after_fix() {
    if common::skip_without_toolchain("corpus_case_before_and_after_fix") {
        return;
    }
    let corpus = common::private_corpus();
    let spec = TargetSpec::load(&corpus.path().join("cases/memory_leakage_case_2/target.json")).unwrap();
    let opts = DetectOptions::default();

    let v = verify(&spec, &Stage::new(&spec.root).unwrap(), &opts).unwrap();
    let VerificationOutcome::Leaky(points) = &v.outcome else { panic!("baseline: {:?}", v.outcome) };
    assert!(points.iter().any(|p| p.kind == LeakageKind::MemoryAccess));

    let script: Vec<ReplayEntry> =
        serde_json::from_str(&common::read(&common::fixtures().join("sessions/case2_fix.json"))).unwrap();
    let fix = extract_code(&script.last().unwrap().response_text, &spec.function_name, None, 2).unwrap();
    let stage = Stage::new(&spec.root).unwrap();
    apply_patch(&spec, &stage, &fix).unwrap();
    assert_eq!(verify(&spec, &stage, &opts).unwrap().outcome, VerificationOutcome::Secure);
}
