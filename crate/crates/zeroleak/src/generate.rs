//! Driver and crypto-implementation generation sessions.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use zeroleak_core::context::{ContextError, ConversationContext, Message};
use zeroleak_core::csrc;
use zeroleak_core::ledger::{CostLedger, ModelConfig};
use zeroleak_core::prompt::{self, GenerationStep, PromptError, PromptMode};

use crate::gateway::{complete, Backend, GatewayError};

/// Upper bound on functions implemented from one listing.
pub const MAX_LISTED_FUNCTIONS: usize = 32;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("the function listing named no functions")]
    EmptyListing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTurn {
    pub prompt: String,
    pub response: String,
    /// Fenced code blocks of the response, or the whole response when it
    /// has none.
    pub code: Vec<String>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTranscript {
    pub model_id: String,
    pub mode: PromptMode,
    pub turns: Vec<GenerationTurn>,
    pub ledger: CostLedger,
}

impl GenerationTranscript {
    /// Code of every turn, in order, blank-line separated.
    pub fn code(&self) -> String {
        let mut out = Vec::new();
        for t in &self.turns {
            out.extend(t.code.iter().map(|c| c.trim_matches('\n')));
        }
        out.join("\n\n") + "\n"
    }
}

fn code_of(response: &str) -> Vec<String> {
    let blocks = csrc::fenced_blocks(response);
    if blocks.is_empty() {
        vec![response.trim().to_string()]
    } else {
        blocks.into_iter().map(str::to_string).collect()
    }
}

struct Conversation<'a> {
    backend: &'a dyn Backend,
    model: &'a ModelConfig,
    ctx: Option<ConversationContext>,
    system: String,
    transcript: GenerationTranscript,
}

impl<'a> Conversation<'a> {
    fn new(backend: &'a dyn Backend, model: &'a ModelConfig, system: String, mode: PromptMode) -> Self {
        Self {
            backend,
            model,
            ctx: None,
            system,
            transcript: GenerationTranscript {
                model_id: model.model_id.clone(),
                mode,
                turns: Vec::new(),
                ledger: CostLedger::default(),
            },
        }
    }

    fn ask(&mut self, prompt: String) -> Result<&GenerationTurn, GenerateError> {
        let budget = (self.model.context_window as usize) * 9 / 10;
        let ctx = match self.ctx.take() {
            None => ConversationContext::new(Message::system(self.system.clone()), Message::user(prompt.clone()), "", budget)?,
            Some(c) => c.appended(Message::user(prompt.clone()))?,
        };
        let ex = complete(self.backend, self.model, &ctx, &|_| 0)?;
        self.transcript.ledger.record_cost(&ex, self.model);
        self.ctx = Some(ctx.appended(Message::assistant(ex.response_text.clone()))?);
        self.transcript.turns.push(GenerationTurn {
            prompt,
            code: code_of(&ex.response_text),
            response: ex.response_text,
            prompt_tokens: ex.prompt_tokens,
            completion_tokens: ex.completion_tokens,
        });
        Ok(self.transcript.turns.last().expect("just pushed"))
    }
}

/// One-turn driver generation. `api` (a header or test file) is attached
/// after the template when non-empty.
pub fn generate_driver(
    backend: &dyn Backend,
    model: &ModelConfig,
    language: &str,
    specifics: &str,
    api: &str,
) -> Result<GenerationTranscript, GenerateError> {
    let system = prompt::render_system_prompt(language, specifics, PromptMode::Driver)?;
    let mut conv = Conversation::new(backend, model, system, PromptMode::Driver);
    let mut user = prompt::render_driver_prompt();
    if !api.trim().is_empty() {
        user.push_str("\n\n");
        user.push_str(api.trim_end());
    }
    conv.ask(user)?;
    Ok(conv.transcript)
}

const NOT_FUNCTIONS: [&str; 9] = ["if", "for", "while", "switch", "return", "sizeof", "main", "void", "int"];

/// Function names in a listing, in order of first mention: identifiers
/// directly followed by `(`, or a backticked identifier leading a line.
pub fn listed_functions(listing: &str) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    let mut add = |n: &str| {
        if !n.is_empty() && !NOT_FUNCTIONS.contains(&n) && !names.iter().any(|x| x == n) {
            names.push(n.to_string());
        }
    };
    let ident = |c: char| c.is_ascii_alphanumeric() || c == '_';
    for line in listing.lines() {
        let bytes: Vec<char> = line.chars().collect();
        let mut found = false;
        let mut i = 0;
        while i < bytes.len() {
            if ident(bytes[i]) && (i == 0 || !ident(bytes[i - 1])) {
                let start = i;
                while i < bytes.len() && ident(bytes[i]) {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().collect();
                let mut j = i;
                while j < bytes.len() && bytes[j] == ' ' {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == '(' && !bytes[start].is_ascii_digit() {
                    add(&word);
                    found = true;
                }
            } else {
                i += 1;
            }
        }
        if !found {
            let t = line.trim_start_matches(|c: char| c.is_whitespace() || "-*0123456789.)".contains(c));
            if let Some(rest) = t.strip_prefix('`') {
                if let Some(end) = rest.find('`') {
                    let w = &rest[..end];
                    if w.chars().all(ident) && !w.starts_with(|c: char| c.is_ascii_digit()) {
                        add(w);
                    }
                }
            }
        }
    }
    names.truncate(MAX_LISTED_FUNCTIONS);
    names
}

/// List functions for `algorithm`, implement each, then the main function.
pub fn generate_crypto(
    backend: &dyn Backend,
    model: &ModelConfig,
    language: &str,
    specifics: &str,
    algorithm: &str,
) -> Result<GenerationTranscript, GenerateError> {
    let system = prompt::render_system_prompt(language, specifics, PromptMode::Generate)?;
    let mut conv = Conversation::new(backend, model, system, PromptMode::Generate);
    let list = prompt::render_generation_prompt(&GenerationStep::ListFunctions { algorithm: algorithm.to_string() })?;
    let listing = conv.ask(list)?.response.clone();
    let names = listed_functions(&listing);
    if names.is_empty() {
        return Err(GenerateError::EmptyListing);
    }
    for name in names {
        conv.ask(prompt::render_generation_prompt(&GenerationStep::ImplementFunction { name })?)?;
    }
    conv.ask(prompt::render_generation_prompt(&GenerationStep::ImplementMain)?)?;
    Ok(conv.transcript)
}
