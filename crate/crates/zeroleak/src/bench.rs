//! Cycle-count overhead runs over the gadget set.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, ExecError, Vars};

pub const GADGET_CASES: [&str; 16] = [
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11gcc", "11ker", "11sub", "12", "13", "14",
];

pub const DEFAULT_ITERATIONS: u64 = 100_000;

/// Harness exit code when no timestamp counter is available.
const UNSUPPORTED_EXIT: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchVariant {
    Baseline,
    InlineLfence,
    CompilerSlh,
    CompilerLfence,
    Patched,
}

impl BenchVariant {
    pub const ALL: [Self; 5] =
        [Self::Baseline, Self::InlineLfence, Self::CompilerSlh, Self::CompilerLfence, Self::Patched];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::InlineLfence => "inline_lfence",
            Self::CompilerSlh => "compiler_slh",
            Self::CompilerLfence => "compiler_lfence",
            Self::Patched => "patched",
        }
    }

    /// Case 8 indexes through a ternary, so it has no source-level barrier.
    pub fn applies_to(self, case: &str) -> bool {
        !(self == Self::InlineLfence && case == "8")
    }
}

impl FromStr for BenchVariant {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s.trim())
            .ok_or_else(|| BenchError::UnknownVariant(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cycle harness unavailable: {0}")]
    HarnessUnavailable(String),
    #[error("unknown bench variant `{0}`")]
    UnknownVariant(String),
    #[error("malformed harness output line `{0}`")]
    Malformed(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchResult {
    pub case: String,
    pub variant: BenchVariant,
    pub median_cc: u64,
    pub runs: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchResult>,
    /// Variants whose build failed on this toolchain, with the diagnostics.
    pub unavailable: Vec<(BenchVariant, String)>,
}

impl BenchTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn median(&self, case: &str, variant: BenchVariant) -> Option<u64> {
        self.rows.iter().find(|r| r.case == case && r.variant == variant).map(|r| r.median_cc)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("case,variant,median_cc,runs\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.case, r.variant.as_str(), r.median_cc, r.runs);
        }
        s
    }

    /// One row per case, one column per variant; `-` where not measured.
    pub fn to_text(&self) -> String {
        let mut variants: Vec<BenchVariant> = self.rows.iter().map(|r| r.variant).collect();
        variants.sort();
        variants.dedup();
        let mut cases: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !cases.contains(&r.case.as_str()) {
                cases.push(&r.case);
            }
        }
        let mut s = format!("{:<8}", "case");
        for v in &variants {
            let _ = write!(s, " {:>16}", v.as_str());
        }
        s.push('\n');
        for c in cases {
            let _ = write!(s, "{c:<8}");
            for v in &variants {
                let cell = self.median(c, *v).map_or_else(|| "-".to_string(), |m| m.to_string());
                let _ = write!(s, " {cell:>16}");
            }
            s.push('\n');
        }
        s
    }
}

/// Parses `case,median_cc,runs` lines from the harness.
pub fn parse_harness_output(text: &str, variant: BenchVariant) -> Result<Vec<BenchResult>, BenchError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let bad = || BenchError::Malformed(line.to_string());
            let mut it = line.trim().split(',');
            let (Some(case), Some(m), Some(runs), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(bad());
            };
            let median_cc: u64 = m.parse().map_err(|_| bad())?;
            let runs: u64 = runs.parse().map_err(|_| bad())?;
            if case.is_empty() || median_cc == 0 || runs == 0 {
                return Err(bad());
            }
            Ok(BenchResult { case: case.to_string(), variant, median_cc, runs })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    /// Directory holding the corpus Makefile.
    pub harness_dir: PathBuf,
    pub iterations: u64,
    /// Gadget case names; empty means all of `GADGET_CASES`.
    pub cases: Vec<String>,
    pub timeout: Duration,
}

impl BenchConfig {
    pub fn new(harness_dir: impl Into<PathBuf>) -> Self {
        Self {
            harness_dir: harness_dir.into(),
            iterations: DEFAULT_ITERATIONS,
            cases: Vec::new(),
            timeout: Duration::from_secs(600),
        }
    }
}

fn build_variant(cfg: &BenchConfig, v: BenchVariant) -> Result<Result<PathBuf, String>, BenchError> {
    let vars = Vars::new().set_path("dir", &cfg.harness_dir).set("variant", v.as_str());
    let cmd = exec::render("make -s -C {dir} bench VARIANT={variant}", &vars, true)?;
    let o = match exec::run_shell(&cmd, None, &[], cfg.timeout) {
        Err(ExecError::CommandNotFound(c)) => return Ok(Err(format!("command not found: {c}"))),
        r => r?,
    };
    if !o.success() {
        return Ok(Err(o.diagnostics()));
    }
    Ok(Ok(cfg.harness_dir.join("build").join(format!("bench_{}", v.as_str()))))
}

fn run_binary(cfg: &BenchConfig, bin: &Path, v: BenchVariant, cases: &[String]) -> Result<Vec<BenchResult>, BenchError> {
    let mut vars = Vars::new().set_path("bin", bin).set("iterations", cfg.iterations.to_string());
    let mut template = String::from("{bin} {iterations}");
    for (i, c) in cases.iter().enumerate() {
        let name = format!("case{i}");
        vars = vars.set(&name, c.clone());
        let _ = write!(template, " {{{name}}}");
    }
    let cmd = exec::render(&template, &vars, true)?;
    let o = exec::run_shell(&cmd, None, &[], cfg.timeout)?;
    if o.code == Some(UNSUPPORTED_EXIT) {
        return Err(BenchError::HarnessUnavailable(o.diagnostics()));
    }
    if !o.success() {
        return Err(BenchError::HarnessUnavailable(format!("{} exited with {:?}: {}", v.as_str(), o.code, o.diagnostics())));
    }
    parse_harness_output(&o.stdout, v)
}

/// Median cycles per (case, variant). The baseline build must succeed;
/// other variants that fail to build are listed as unavailable.
pub fn run_bench(cfg: &BenchConfig, variants: &[BenchVariant]) -> Result<BenchTable, BenchError> {
    let mut table = BenchTable::default();
    if variants.is_empty() {
        return Ok(table);
    }
    if !cfg.harness_dir.join("Makefile").is_file() {
        return Err(BenchError::HarnessUnavailable(format!("no Makefile in {}", cfg.harness_dir.display())));
    }
    let cases: Vec<String> =
        if cfg.cases.is_empty() { GADGET_CASES.iter().map(|c| c.to_string()).collect() } else { cfg.cases.clone() };
    for &v in variants {
        let bin = match build_variant(cfg, v)? {
            Ok(bin) => bin,
            Err(diag) if v == BenchVariant::Baseline => return Err(BenchError::HarnessUnavailable(diag)),
            Err(diag) => {
                log::warn!("{} unavailable on this toolchain", v.as_str());
                table.unavailable.push((v, diag));
                continue;
            }
        };
        let wanted: Vec<String> = cases.iter().filter(|c| v.applies_to(c)).cloned().collect();
        if wanted.is_empty() {
            continue;
        }
        table.rows.extend(run_binary(cfg, &bin, v, &wanted)?);
    }
    Ok(table)
}
