//! Conversation context with a token budget.
//!
//! Messages 0 (system prompt) and 1 (the first user prompt, which carries
//! the original function) are pinned. When an append pushes the total over
//! budget, the oldest unpinned message (index 2) is evicted until it fits.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of leading messages that are never evicted.
pub const PINNED: usize = 2;

pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

/// `ceil(bytes / 4)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ByteHeuristic;

impl TokenCounter for ByteHeuristic {
    fn count(&self, text: &str) -> usize {
        text.len().div_ceil(4)
    }
}

impl<F: Fn(&str) -> usize> TokenCounter for F {
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

pub fn count_tokens(text: &str) -> usize {
    ByteHeuristic.count(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::System => "system",
            Self::User => "user",
            Self::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    pub token_estimate: usize,
}

impl Message {
    pub fn new(role: Role, text: impl Into<String>, counter: &dyn TokenCounter) -> Self {
        let text = text.into();
        Self { role, token_estimate: counter.count(&text), text }
    }

    pub fn system(text: impl Into<String>) -> Self {
        Self::new(Role::System, text, &ByteHeuristic)
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::new(Role::User, text, &ByteHeuristic)
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self::new(Role::Assistant, text, &ByteHeuristic)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("message of {tokens} tokens exceeds the {available} tokens left after pinned messages")]
    MessageTooLarge { tokens: usize, available: usize },
    #[error("pinned messages need {pinned} tokens but the budget is {budget}")]
    BudgetTooSmall { pinned: usize, budget: usize },
    #[error("the first message must be a system message")]
    MissingSystem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationContext {
    messages: VecDeque<Message>,
    budget: usize,
    original_function: String,
    /// Number of messages evicted so far.
    evicted: usize,
}

impl ConversationContext {
    pub fn new(
        system: Message,
        first_user: Message,
        original_function: impl Into<String>,
        budget: usize,
    ) -> Result<Self, ContextError> {
        if system.role != Role::System {
            return Err(ContextError::MissingSystem);
        }
        let pinned = system.token_estimate + first_user.token_estimate;
        if pinned > budget {
            return Err(ContextError::BudgetTooSmall { pinned, budget });
        }
        Ok(Self {
            messages: VecDeque::from(alloc::vec![system, first_user]),
            budget,
            original_function: original_function.into(),
            evicted: 0,
        })
    }

    pub fn messages(&self) -> impl ExactSizeIterator<Item = &Message> + Clone {
        self.messages.iter()
    }

    pub fn to_vec(&self) -> Vec<Message> {
        self.messages.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn original_function(&self) -> &str {
        &self.original_function
    }

    pub fn evicted(&self) -> usize {
        self.evicted
    }

    pub fn total_tokens(&self) -> usize {
        self.messages.iter().map(|m| m.token_estimate).sum()
    }

    pub fn pinned_tokens(&self) -> usize {
        self.messages.iter().take(PINNED).map(|m| m.token_estimate).sum()
    }

    /// Appends `msg`, then evicts index 2 onward until the total fits.
    pub fn append_and_truncate(&mut self, msg: Message) -> Result<(), ContextError> {
        let available = self.budget - self.pinned_tokens();
        if msg.token_estimate > available {
            return Err(ContextError::MessageTooLarge { tokens: msg.token_estimate, available });
        }
        self.messages.push_back(msg);
        let mut total = self.total_tokens();
        while total > self.budget {
            let gone = self.messages.remove(PINNED).expect("appended message alone fits");
            total -= gone.token_estimate;
            self.evicted += 1;
        }
        Ok(())
    }

    /// Functional form of [`Self::append_and_truncate`].
    pub fn appended(mut self, msg: Message) -> Result<Self, ContextError> {
        self.append_and_truncate(msg)?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(role: Role, tokens: usize) -> Message {
        Message { role, text: alloc::format!("{tokens}"), token_estimate: tokens }
    }

    fn ctx(budget: usize) -> ConversationContext {
        ConversationContext::new(msg(Role::System, 3), msg(Role::User, 4), "f", budget).unwrap()
    }

    #[test]
    fn counting() {
        assert_eq!(count_tokens(""), 0);
        assert_eq!(count_tokens("12345678"), 2);
        assert_eq!(count_tokens("123456789"), 3);
        let one = |_: &str| 1usize;
        assert_eq!(Message::new(Role::User, "long text here", &one).token_estimate, 1);
    }

    #[test]
    fn within_budget_only_appends() {
        let mut c = ctx(20);
        let before = c.to_vec();
        c.append_and_truncate(msg(Role::Assistant, 5)).unwrap();
        assert_eq!(&c.to_vec()[..2], &before[..]);
        assert_eq!(c.len(), 3);
        assert_eq!(c.evicted(), 0);
    }

    #[test]
    fn overflow_by_one_turn_evicts_index_two() {
        // pinned 7; then 5 + 5 = 17 of 20; next 5 overflows by 2
        let mut c = ctx(20);
        let first = Message { role: Role::Assistant, text: "first".into(), token_estimate: 5 };
        c.append_and_truncate(first.clone()).unwrap();
        c.append_and_truncate(msg(Role::User, 5)).unwrap();
        c.append_and_truncate(msg(Role::Assistant, 5)).unwrap();
        assert_eq!(c.len(), 4);
        assert!(!c.messages().any(|m| m == &first));
        assert_eq!(c.total_tokens(), 17);
        assert_eq!(c.evicted(), 1);
    }

    #[test]
    fn too_large_and_bad_construction() {
        let mut c = ctx(10);
        assert_eq!(
            c.append_and_truncate(msg(Role::User, 4)),
            Err(ContextError::MessageTooLarge { tokens: 4, available: 3 })
        );
        assert!(c.append_and_truncate(msg(Role::User, 3)).is_ok());
        assert!(matches!(
            ConversationContext::new(msg(Role::User, 1), msg(Role::User, 1), "", 10),
            Err(ContextError::MissingSystem)
        ));
        assert!(matches!(
            ConversationContext::new(msg(Role::System, 6), msg(Role::User, 6), "", 10),
            Err(ContextError::BudgetTooSmall { pinned: 12, budget: 10 })
        ));
    }

    #[test]
    fn constant_counter_budget_is_message_count() {
        let one = |_: &str| 1usize;
        let mut c = ConversationContext::new(
            Message::new(Role::System, "s", &one),
            Message::new(Role::User, "u", &one),
            "u",
            4,
        )
        .unwrap();
        for i in 0..10 {
            c.append_and_truncate(Message::new(Role::Assistant, alloc::format!("{i}"), &one)).unwrap();
            assert!(c.len() <= 4);
        }
        assert_eq!(c.len(), 4);
    }
}
