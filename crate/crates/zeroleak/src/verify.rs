//! Applying candidates to a staged tree and the build / test / detect gates.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use zeroleak_core::csrc::{self, CodeError, PatchCandidate};
use zeroleak_core::leakage::LeakagePoint;

use crate::detect::{run_detect, DetectError, DetectOptions, DetectionReport};
use crate::exec::{self, CommandOutput, ExecError};
use crate::target::{Stage, TargetError, TargetSpec};

/// Diagnostics kept from a failing build or test run.
pub const DIAGNOSTICS_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", content = "detail")]
pub enum VerificationOutcome {
    SyntaxError(String),
    TestFailure(String),
    Leaky(Vec<LeakagePoint>),
    Secure,
}

impl VerificationOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SyntaxError(_) => "SyntaxError",
            Self::TestFailure(_) => "TestFailure",
            Self::Leaky(_) => "Leaky",
            Self::Secure => "Secure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub outcome: VerificationOutcome,
    /// Present when detection ran.
    pub detection: Option<DetectionReport>,
}

impl Verification {
    /// Unique leak count, `None` when detection did not run.
    pub fn leak_count(&self) -> Option<usize> {
        self.detection.as_ref().map(DetectionReport::leak_count)
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Truncates to at most `DIAGNOSTICS_LIMIT` bytes on a char boundary and
/// replaces the staging path with `{staging_dir}`.
pub fn scrub_diagnostics(text: &str, staging: &Path) -> String {
    let mut s = text.to_string();
    for base in [Some(staging.to_path_buf()), staging.canonicalize().ok()].into_iter().flatten() {
        let b = base.to_string_lossy().into_owned();
        if !b.is_empty() {
            s = s.replace(&b, "{staging_dir}");
        }
    }
    if s.len() > DIAGNOSTICS_LIMIT {
        let mut cut = DIAGNOSTICS_LIMIT;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
    }
    s
}

/// Writes the candidate into the staged copy of the defining file and
/// returns that file's relative path.
pub fn apply_patch(spec: &TargetSpec, stage: &Stage, cand: &PatchCandidate) -> Result<PathBuf, VerifyError> {
    let rel = spec.defining_file(stage.path())?;
    let original = stage.read(&rel)?;
    let patched = csrc::splice_function(&original, &spec.function_name, &cand.function_text)?;
    stage.write(&rel, &patched)?;
    Ok(rel)
}

fn run(spec: &TargetSpec, stage: &Stage, template: &str) -> Result<CommandOutput, VerifyError> {
    let vars = stage.vars(spec)?;
    let cmd = exec::render(template, &vars, true)?;
    Ok(exec::run_shell(&cmd, Some(stage.path()), &[], spec.timeout())?)
}

/// Formatter, build, tests, then detection. Stops at the first failing gate.
pub fn verify(spec: &TargetSpec, stage: &Stage, opts: &DetectOptions) -> Result<Verification, VerifyError> {
    if let Some(fmt) = &spec.formatter_cmd {
        let o = run(spec, stage, fmt)?;
        if !o.success() {
            log::warn!("formatter exited with {:?}; continuing unformatted", o.code);
        }
    }
    let build = run(spec, stage, &spec.build_cmd)?;
    if !build.success() {
        return Ok(Verification {
            outcome: VerificationOutcome::SyntaxError(scrub_diagnostics(&build.diagnostics(), stage.path())),
            detection: None,
        });
    }
    let test = run(spec, stage, &spec.test_cmd)?;
    if !test.success() {
        return Ok(Verification {
            outcome: VerificationOutcome::TestFailure(scrub_diagnostics(&test.diagnostics(), stage.path())),
            detection: None,
        });
    }
    let report = run_detect(spec, stage, opts)?;
    let outcome = if report.is_secure() {
        VerificationOutcome::Secure
    } else {
        VerificationOutcome::Leaky(report.merged.points.clone())
    };
    Ok(Verification { outcome, detection: Some(report) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scrub_truncates_and_hides_paths() {
        let s = scrub_diagnostics("/tmp/zl-x/a.c:3: error", Path::new("/tmp/zl-x"));
        assert_eq!(s, "{staging_dir}/a.c:3: error");
        let long = "é".repeat(1500);
        let s = scrub_diagnostics(&long, Path::new("/nowhere"));
        assert!(s.len() <= DIAGNOSTICS_LIMIT && s.len() >= DIAGNOSTICS_LIMIT - 1);
    }
}
