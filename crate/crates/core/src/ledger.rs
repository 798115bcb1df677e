//! Model parameters, completion records and exact cost accounting.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::time::Duration;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::Message;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub temperature: f64,
    /// `None` when the provider takes no completion limit.
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub top_p: Option<f64>,
    #[serde(default)]
    pub top_k: Option<u32>,
    #[serde(default = "one")]
    pub best_of: u32,
    /// Currency per 1000 prompt tokens.
    #[serde(default)]
    pub price_in: Decimal,
    /// Currency per 1000 completion tokens.
    #[serde(default)]
    pub price_out: Decimal,
    /// Context window in tokens used for truncation.
    #[serde(default = "default_window")]
    pub context_window: u32,
}

fn one() -> u32 {
    1
}

fn default_window() -> u32 {
    8192
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("model_id is empty")]
    EmptyModelId,
    #[error("temperature must be a finite value >= 0")]
    Temperature,
    #[error("top_p must lie in (0, 1]")]
    TopP,
    #[error("best_of must be >= 1")]
    BestOf,
    #[error("max_tokens and top_k must be >= 1 when set")]
    ZeroLimit,
    #[error("prices must be >= 0")]
    NegativePrice,
    #[error("unknown model preset `{0}`")]
    UnknownPreset(String),
}

struct Preset {
    id: &'static str,
    temperature: f64,
    max_tokens: Option<u32>,
    top_p: Option<f64>,
    top_k: Option<u32>,
    best_of: u32,
    window: u32,
}

const PRESETS: &[Preset] = &[
    Preset { id: "gpt-4-0613", temperature: 1.0, max_tokens: Some(2048), top_p: Some(1.0), top_k: None, best_of: 1, window: 8192 },
    Preset { id: "gpt-3.5-turbo-0613", temperature: 1.2, max_tokens: Some(2048), top_p: Some(1.0), top_k: None, best_of: 1, window: 4096 },
    Preset { id: "text-davinci-003", temperature: 0.2, max_tokens: Some(256), top_p: Some(0.8), top_k: None, best_of: 5, window: 4097 },
    Preset { id: "code-davinci-edit-001", temperature: 0.7, max_tokens: None, top_p: Some(1.0), top_k: None, best_of: 1, window: 8001 },
    Preset { id: "chat-bison-001", temperature: 0.2, max_tokens: Some(2048), top_p: None, top_k: None, best_of: 1, window: 8192 },
    Preset { id: "codechat-bison-001", temperature: 0.2, max_tokens: Some(1024), top_p: None, top_k: None, best_of: 1, window: 6144 },
    Preset { id: "code-bison-001", temperature: 0.2, max_tokens: Some(1024), top_p: None, top_k: None, best_of: 1, window: 6144 },
    Preset { id: "text-bison-001", temperature: 0.2, max_tokens: Some(256), top_p: Some(0.8), top_k: Some(40), best_of: 1, window: 8196 },
];

impl ModelConfig {
    /// Sampling parameters for a known model; prices default to zero.
    pub fn preset(model_id: &str) -> Result<Self, ConfigError> {
        let p = PRESETS
            .iter()
            .find(|p| p.id == model_id)
            .ok_or_else(|| ConfigError::UnknownPreset(model_id.to_string()))?;
        Ok(Self {
            model_id: p.id.to_string(),
            temperature: p.temperature,
            max_tokens: p.max_tokens,
            top_p: p.top_p,
            top_k: p.top_k,
            best_of: p.best_of,
            price_in: Decimal::ZERO,
            price_out: Decimal::ZERO,
            context_window: p.window,
        })
    }

    pub fn preset_ids() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|p| p.id)
    }

    pub fn with_prices(mut self, price_in: Decimal, price_out: Decimal) -> Self {
        self.price_in = price_in;
        self.price_out = price_out;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.model_id.trim().is_empty() {
            return Err(ConfigError::EmptyModelId);
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ConfigError::Temperature);
        }
        if let Some(p) = self.top_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(ConfigError::TopP);
            }
        }
        if self.best_of < 1 {
            return Err(ConfigError::BestOf);
        }
        if self.max_tokens == Some(0) || self.top_k == Some(0) {
            return Err(ConfigError::ZeroLimit);
        }
        if self.price_in.is_sign_negative() && !self.price_in.is_zero()
            || self.price_out.is_sign_negative() && !self.price_out.is_zero()
        {
            return Err(ConfigError::NegativePrice);
        }
        Ok(())
    }

    /// Cost of one exchange: `(pt * price_in + ct * price_out) / 1000`.
    pub fn cost_of(&self, prompt_tokens: u64, completion_tokens: u64) -> Decimal {
        (Decimal::from(prompt_tokens) * self.price_in + Decimal::from(completion_tokens) * self.price_out)
            / Decimal::ONE_THOUSAND
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionExchange {
    pub request: Vec<Message>,
    pub response_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub model_id: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: Decimal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: Decimal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<LedgerEntry>,
    pub totals: LedgerTotals,
}

impl CostLedger {
    pub fn record(&mut self, model_id: &str, prompt_tokens: u64, completion_tokens: u64, config: &ModelConfig) {
        let cost = config.cost_of(prompt_tokens, completion_tokens);
        self.totals.prompt_tokens += prompt_tokens;
        self.totals.completion_tokens += completion_tokens;
        self.totals.cost += cost;
        self.entries.push(LedgerEntry {
            model_id: model_id.to_string(),
            prompt_tokens,
            completion_tokens,
            cost,
        });
    }

    pub fn record_cost(&mut self, exchange: &CompletionExchange, config: &ModelConfig) {
        self.record(&config.model_id, exchange.prompt_tokens, exchange.completion_tokens, config);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total cost rounded half-away-from-zero to cents.
    pub fn total_cost_2dp(&self) -> Decimal {
        self.totals
            .cost
            .round_dp_with_strategy(2, rust_decimal::RoundingStrategy::MidpointAwayFromZero)
    }
}

/// Index of the highest-scoring response; ties keep the earliest.
pub fn best_of_index<S: PartialOrd>(responses: &[String], scorer: impl Fn(&str) -> S) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (i, r) in responses.iter().enumerate() {
        let s = scorer(r);
        let better = match &best {
            None => true,
            Some((_, b)) => s.partial_cmp(b) == Some(core::cmp::Ordering::Greater),
        };
        if better {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

pub fn best_of_select<S: PartialOrd>(responses: &[String], scorer: impl Fn(&str) -> S) -> Option<&str> {
    best_of_index(responses, scorer).map(|i| responses[i].as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::str::FromStr;

    fn priced() -> ModelConfig {
        ModelConfig::preset("gpt-4-0613")
            .unwrap()
            .with_prices(Decimal::from_str("0.03").unwrap(), Decimal::from_str("0.06").unwrap())
    }

    #[test]
    fn presets_validate() {
        for id in ModelConfig::preset_ids() {
            ModelConfig::preset(id).unwrap().validate().unwrap();
        }
        let t = ModelConfig::preset("text-bison-001").unwrap();
        assert_eq!((t.top_k, t.top_p, t.max_tokens), (Some(40), Some(0.8), Some(256)));
        assert_eq!(ModelConfig::preset("text-davinci-003").unwrap().best_of, 5);
        assert!(ModelConfig::preset("gpt-5").is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = priced();
        c.top_p = Some(0.0);
        assert_eq!(c.validate(), Err(ConfigError::TopP));
        let mut c = priced();
        c.temperature = -0.1;
        assert_eq!(c.validate(), Err(ConfigError::Temperature));
        let mut c = priced();
        c.price_out = Decimal::from_str("-0.01").unwrap();
        assert_eq!(c.validate(), Err(ConfigError::NegativePrice));
    }

    #[test]
    fn thousand_prompt_tokens_cost_three_cents() {
        let mut l = CostLedger::default();
        l.record("m", 1000, 0, &priced());
        assert_eq!(l.totals.cost, Decimal::from_str("0.03").unwrap());
        let before = l.totals;
        l.record("m", 0, 0, &priced());
        assert_eq!(l.totals, before);
    }

    #[test]
    fn best_of_rules() {
        let r = vec!["a".to_string(), "bbb".to_string(), "cc".to_string()];
        assert_eq!(best_of_select(&r, str::len), Some("bbb"));
        assert_eq!(best_of_select(&r, |_| 0), Some("a"));
        assert_eq!(best_of_select(&r[..1], str::len), Some("a"));
        assert_eq!(best_of_select(&[], str::len), None);
    }
}
