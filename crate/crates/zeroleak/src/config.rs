//! Pipeline configuration file.
//!
//! ```json
//! {
//!   "model": { "preset": "gpt-4-0613", "price_in": "0.03", "price_out": "0.06" },
//!   "backend": { "kind": "http", "base_url": "https://api.openai.com/v1", "api_key_env": "OPENAI_API_KEY" },
//!   "policy": { "max_trials_per_point": 5, "max_total_iterations": 50 },
//!   "detectors": { "builtin": true, "external": true },
//!   "formatter": true,
//!   "specifics": ""
//! }
//! ```
//!
//! `model` may instead be a full parameter set (`model_id`, `temperature`,
//! ...). A replay backend is `{ "kind": "replay", "script": "path.json" }`,
//! with the path relative to the config file.

use std::fs;
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use zeroleak_core::ledger::{ConfigError, ModelConfig};
use zeroleak_core::prompt::PromptMode;

use crate::detect::{DEFAULT_INPUTS, DEFAULT_SEED};
use crate::gateway::{Backend, GatewayError, HttpBackend, HttpSettings, ReplayBackend};
use crate::target::TargetSpec;

#[derive(Debug, Error)]
pub enum PipelineConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Model(#[from] ConfigError),
    #[error("policy: {0}")]
    Policy(&'static str),
    #[error("replay script {0} does not exist")]
    MissingReplay(PathBuf),
}

fn d_trials() -> u32 {
    5
}
fn d_iterations() -> u32 {
    50
}
fn d_tokens() -> u64 {
    2_000_000
}
fn d_inputs() -> usize {
    DEFAULT_INPUTS
}
fn d_seed() -> u64 {
    DEFAULT_SEED
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopPolicy {
    #[serde(default = "d_trials")]
    pub max_trials_per_point: u32,
    /// Gateway calls over the whole session.
    #[serde(default = "d_iterations")]
    pub max_total_iterations: u32,
    /// Prompt plus completion tokens over the whole session.
    #[serde(default = "d_tokens")]
    pub token_budget: u64,
    #[serde(default = "d_inputs")]
    pub input_count: usize,
    #[serde(default = "d_seed")]
    pub prng_seed: u64,
    #[serde(default = "yes")]
    pub keep_best: bool,
}

impl Default for LoopPolicy {
    fn default() -> Self {
        Self {
            max_trials_per_point: d_trials(),
            max_total_iterations: d_iterations(),
            token_budget: d_tokens(),
            input_count: d_inputs(),
            prng_seed: d_seed(),
            keep_best: true,
        }
    }
}

impl LoopPolicy {
    pub fn validate(&self) -> Result<(), PipelineConfigError> {
        if self.max_trials_per_point == 0 {
            return Err(PipelineConfigError::Policy("max_trials_per_point must be positive"));
        }
        if self.max_total_iterations == 0 {
            return Err(PipelineConfigError::Policy("max_total_iterations must be positive"));
        }
        if self.token_budget == 0 {
            return Err(PipelineConfigError::Policy("token_budget must be positive"));
        }
        if self.input_count < 2 {
            return Err(PipelineConfigError::Policy("input_count must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSelection {
    Preset {
        preset: String,
        #[serde(default)]
        price_in: Option<Decimal>,
        #[serde(default)]
        price_out: Option<Decimal>,
        #[serde(default)]
        context_window: Option<u32>,
    },
    Full(ModelConfig),
}

impl ModelSelection {
    pub fn resolve(&self) -> Result<ModelConfig, ConfigError> {
        let m = match self {
            Self::Preset { preset, price_in, price_out, context_window } => {
                let mut m = ModelConfig::preset(preset)?;
                m.price_in = price_in.unwrap_or_default();
                m.price_out = price_out.unwrap_or_default();
                if let Some(w) = context_window {
                    m.context_window = *w;
                }
                m
            }
            Self::Full(m) => m.clone(),
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSelection {
    Http(HttpSettings),
    Replay { script: PathBuf },
}

impl BackendSelection {
    pub fn build(&self) -> Result<Box<dyn Backend>, GatewayError> {
        Ok(match self {
            Self::Http(s) => Box::new(HttpBackend::new(s.clone())?),
            Self::Replay { script } => Box::new(ReplayBackend::load(script)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorToggles {
    /// Traced MI analysis (needs the target's `trace_cmd`).
    #[serde(default = "yes")]
    pub builtin: bool,
    /// The target's external detector commands.
    #[serde(default = "yes")]
    pub external: bool,
    /// Overrides the target's advisory scanner flag.
    #[serde(default)]
    pub spectre_scan: Option<bool>,
}

impl Default for DetectorToggles {
    fn default() -> Self {
        Self { builtin: true, external: true, spectre_scan: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub model: ModelSelection,
    pub backend: BackendSelection,
    #[serde(default)]
    pub policy: LoopPolicy,
    #[serde(default)]
    pub detectors: DetectorToggles,
    /// Run the target's formatter before each build.
    #[serde(default = "yes")]
    pub formatter: bool,
    /// Language-specific guidance appended to the system prompt.
    #[serde(default)]
    pub specifics: String,
    /// Prompt family; chosen from the baseline points when unset.
    #[serde(default)]
    pub mode: Option<PromptMode>,
}

impl PipelineConfig {
    pub fn from_json(text: &str, base: &Path) -> Result<Self, PipelineConfigError> {
        let mut cfg: Self = serde_json::from_str(text)
            .map_err(|source| PipelineConfigError::Parse { path: base.to_path_buf(), source })?;
        if let BackendSelection::Replay { script } = &mut cfg.backend {
            if script.is_relative() {
                *script = base.join(&*script);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineConfigError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineConfigError::Read { path: path.into(), source })?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), PipelineConfigError> {
        self.model.resolve()?;
        self.policy.validate()?;
        if let BackendSelection::Replay { script } = &self.backend {
            if !script.is_file() {
                return Err(PipelineConfigError::MissingReplay(script.clone()));
            }
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        self.model.resolve().expect("validated at load")
    }

    /// The target with this configuration's detector and formatter toggles
    /// applied.
    pub fn effective_target(&self, spec: &TargetSpec) -> TargetSpec {
        let mut t = spec.clone();
        if !self.detectors.builtin {
            t.trace_cmd = None;
        }
        if !self.detectors.external {
            t.detector_cmds.clear();
        }
        if let Some(s) = self.detectors.spectre_scan {
            t.spectre_scan = s;
        }
        if !self.formatter {
            t.formatter_cmd = None;
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_with_prices() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("s.json"), "[]").unwrap();
        let cfg = PipelineConfig::from_json(
            r#"{"model":{"preset":"gpt-4-0613","price_in":"0.03","price_out":0.06},
                "backend":{"kind":"replay","script":"s.json"},
                "policy":{"max_trials_per_point":3}}"#,
            dir.path(),
        )
        .unwrap();
        let m = cfg.model_config();
        assert_eq!(m.price_in, Decimal::new(3, 2));
        assert_eq!(m.price_out, Decimal::new(6, 2));
        assert_eq!(cfg.policy.max_trials_per_point, 3);
        assert_eq!(cfg.policy.input_count, 16);
        assert!(cfg.backend.build().is_ok());
    }

    #[test]
    fn fail_fast() {
        let base = Path::new("/nonexistent-zl");
        let missing = PipelineConfig::from_json(
            r#"{"model":{"preset":"gpt-4-0613"},"backend":{"kind":"replay","script":"s.json"}}"#,
            base,
        );
        assert!(matches!(missing, Err(PipelineConfigError::MissingReplay(_))));
        let bad_model = PipelineConfig::from_json(r#"{"model":{"preset":"gpt-9"},"backend":{"kind":"http"}}"#, base);
        assert!(matches!(bad_model, Err(PipelineConfigError::Model(ConfigError::UnknownPreset(_)))));
        let bad_policy = PipelineConfig::from_json(
            r#"{"model":{"preset":"gpt-4-0613"},"backend":{"kind":"http"},"policy":{"max_trials_per_point":0}}"#,
            base,
        );
        assert!(matches!(bad_policy, Err(PipelineConfigError::Policy(_))));
        let full = PipelineConfig::from_json(
            r#"{"model":{"model_id":"local","temperature":0.0},"backend":{"kind":"http","base_url":"http://127.0.0.1:1"}}"#,
            base,
        )
        .unwrap();
        assert_eq!(full.model_config().model_id, "local");
    }
}
