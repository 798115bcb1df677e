//! Session reports: JSON audit record and human summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use zeroleak_core::leakage::LeakagePoint;
use zeroleak_core::ledger::CostLedger;
use zeroleak_core::prompt::PromptMode;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub name: String,
    pub function_name: String,
    pub defining_file: String,
    pub source_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-based over the session.
    pub trial_index: u32,
    /// 1-based within the current point.
    pub point_trial: u32,
    pub point: LeakagePoint,
    /// `MemAccess`, `Conditional`, `LoopBound`, `SpectreCond` or `Retry`.
    pub option: String,
    pub prompt: String,
    pub response: String,
    /// `SyntaxError`, `TestFailure`, `Leaky` or `Secure`.
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
    /// Unique leak count of the verified tree, when detection ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_count: Option<usize>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCandidate {
    /// `None` for the unpatched original.
    pub trial_index: Option<u32>,
    pub leak_count: usize,
    pub points: Vec<LeakagePoint>,
    pub function_text: String,
    /// Full text of the defining file.
    pub source_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    Secure,
    /// A trial, iteration or token budget ran out with leaks left.
    BudgetExhausted,
    /// Every patchable point was handled but leaks remain.
    LeaksRemain,
}

/// Wall-clock data, kept apart so the rest of the report is reproducible.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTiming {
    pub wall_ms: u64,
    pub baseline_ms: u64,
    pub gateway_ms: Vec<u64>,
    pub verify_ms: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub version: u32,
    pub target: TargetSummary,
    pub model_id: String,
    pub mode: PromptMode,
    pub seed: u64,
    pub inputs: usize,
    pub status: SessionStatus,
    pub initial_points: Vec<LeakagePoint>,
    pub initial_leak_count: usize,
    pub final_points: Vec<LeakagePoint>,
    pub final_leak_count: usize,
    /// Points outside the function under repair or without a usable line.
    pub unpatchable: Vec<LeakagePoint>,
    pub trials: Vec<TrialRecord>,
    pub best_candidate: Option<BestCandidate>,
    pub ledger: CostLedger,
    pub timing: SessionTiming,
}

impl SessionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the timing block; identical across reruns of the same
    /// configuration, script and seed.
    pub fn to_json_untimed(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(std::io::Error::other)
    }

    /// Writes `<stem>.json` and `<stem>.txt`.
    pub fn save(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.json")), self.to_json())?;
        fs::write(dir.join(format!("{stem}.txt")), self.summary())
    }

    pub fn is_secure(&self) -> bool {
        self.status == SessionStatus::Secure
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "target     {} ({} in {})", self.target.name, self.target.function_name, self.target.defining_file);
        let _ = writeln!(s, "model      {}", self.model_id);
        let _ = writeln!(s, "status     {:?}", self.status);
        let _ = writeln!(s, "leaks      {} -> {}", self.initial_leak_count, self.final_leak_count);
        let _ = writeln!(s, "trials     {}", self.trials.len());
        for t in &self.trials {
            let at = t.point.source.as_ref().map_or_else(|| "?".to_string(), |l| l.to_string());
            let leaks = t.leak_count.map_or_else(String::new, |n| format!(" ({n} leaks)"));
            let _ = writeln!(
                s,
                "  #{:<3} {:<18} {:<11} {:<12} {}{}",
                t.trial_index,
                at,
                t.point.kind.as_str(),
                t.option,
                t.outcome,
                leaks
            );
        }
        for p in &self.unpatchable {
            let at = p.source.as_ref().map_or_else(|| "?".to_string(), |l| l.to_string());
            let _ = writeln!(s, "  unpatchable {} {}", at, p.kind.as_str());
        }
        if let Some(b) = &self.best_candidate {
            let from = b.trial_index.map_or_else(|| "original".to_string(), |i| format!("trial {i}"));
            let _ = writeln!(s, "best       {from}, {} leaks", b.leak_count);
        }
        let t = &self.ledger.totals;
        let _ = writeln!(
            s,
            "tokens     {} prompt, {} completion",
            t.prompt_tokens, t.completion_tokens
        );
        let _ = writeln!(s, "cost       {}", self.ledger.total_cost_2dp());
        let _ = writeln!(s, "wall time  {:.1} s", self.timing.wall_ms as f64 / 1000.0);
        s
    }
}

/// Total session cost, exact.
pub fn estimate_session_cost(report: &SessionReport) -> Decimal {
    report.ledger.entries.iter().map(|e| e.cost).sum()
}
