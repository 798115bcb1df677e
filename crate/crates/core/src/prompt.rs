//! Prompt rendering from text templates with `<placeholder>` markers.
//!
//! Substitution is a single left-to-right pass over the template: only the
//! placeholder names a template declares are replaced, and substituted
//! values are never rescanned, so function sources containing `<...>` text
//! pass through untouched.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SYSTEM_PATCH: &str = include_str!("../templates/system_patch.txt");
pub const SYSTEM_GENERATE: &str = include_str!("../templates/system_generate.txt");
pub const PATCH_MEMORY_ACCESS: &str = include_str!("../templates/patch_memory_access.txt");
pub const PATCH_CONDITIONAL: &str = include_str!("../templates/patch_conditional.txt");
pub const PATCH_LOOP_BOUND: &str = include_str!("../templates/patch_loop_bound.txt");
pub const PATCH_RETRY: &str = include_str!("../templates/patch_retry.txt");
pub const PATCH_SPECTRE_CONDITIONAL: &str = include_str!("../templates/patch_spectre_conditional.txt");
pub const GENERATE_LIST: &str = include_str!("../templates/generate_list.txt");
pub const GENERATE_FUNCTION: &str = include_str!("../templates/generate_function.txt");
pub const GENERATE_MAIN: &str = include_str!("../templates/generate_main.txt");
pub const DRIVER: &str = include_str!("../templates/driver.txt");

/// Crash reason used when a candidate builds but fails its tests.
pub const FUNCTIONAL_FAILURE_REASON: &str = "The code is not working correctly.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("unknown prompt mode `{0}`")]
    UnknownMode(String),
    #[error("missing or empty field `{0}`")]
    MissingField(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptMode {
    ConstantTime,
    Spectre,
    Generate,
    Driver,
}

impl FromStr for PromptMode {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "constanttime" | "ct" => Ok(Self::ConstantTime),
            "spectre" => Ok(Self::Spectre),
            "generate" => Ok(Self::Generate),
            "driver" => Ok(Self::Driver),
            _ => Err(PromptError::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatchOption {
    MemAccess { arrays: Vec<String>, line: u32 },
    Conditional { stmt: String },
    LoopBound { stmt: String },
    Retry { crash_reason: String },
    SpectreCond { stmt: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchPrompt {
    pub option: PatchOption,
    pub language_tag: String,
    pub specifics: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenerationStep {
    ListFunctions { algorithm: String },
    ImplementFunction { name: String },
    ImplementMain,
}

/// Replaces each `<name>` of `vars` in `template` in one pass.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + vars.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('<') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        for (name, value) in vars {
            if tail.len() > name.len() + 1
                && tail[1..].starts_with(name)
                && tail.as_bytes()[name.len() + 1] == b'>'
            {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
                continue 'scan;
            }
        }
        out.push('<');
        rest = &tail[1..];
    }
    out.push_str(rest);
    out
}

fn non_empty<'a>(value: &'a str, field: &'static str) -> Result<&'a str, PromptError> {
    if value.trim().is_empty() {
        Err(PromptError::MissingField(field))
    } else {
        Ok(value)
    }
}

fn with_specifics(template: &str, language: &str, specifics: &str) -> String {
    let text = fill(template, &[("language", language), ("specifics", specifics.trim())]);
    if specifics.trim().is_empty() {
        text.trim_end().to_string()
    } else {
        text
    }
}

/// System prompt for a session. Driver sessions share the generation
/// system prompt.
pub fn render_system_prompt(language_tag: &str, specifics: &str, mode: PromptMode) -> Result<String, PromptError> {
    let language = non_empty(language_tag, "language_tag")?;
    Ok(match mode {
        PromptMode::ConstantTime => with_specifics(SYSTEM_PATCH, language, specifics),
        PromptMode::Spectre => with_specifics(&SYSTEM_PATCH.replace("constant-time", "secure"), language, specifics),
        PromptMode::Generate | PromptMode::Driver => with_specifics(SYSTEM_GENERATE, language, specifics),
    })
}

/// Parses a mode name and renders its system prompt.
pub fn render_system_prompt_named(language_tag: &str, specifics: &str, mode: &str) -> Result<String, PromptError> {
    render_system_prompt(language_tag, specifics, mode.parse()?)
}

pub fn render_patch_prompt(p: &PatchPrompt, function_source: &str) -> Result<String, PromptError> {
    let function = || non_empty(function_source, "function_source").map(str::trim_end);
    Ok(match &p.option {
        PatchOption::MemAccess { arrays, line } => {
            if arrays.is_empty() || arrays.iter().any(|a| a.trim().is_empty()) {
                return Err(PromptError::MissingField("arrays"));
            }
            if *line == 0 {
                return Err(PromptError::MissingField("line"));
            }
            let names = arrays.iter().map(|a| a.trim()).collect::<Vec<_>>().join(", ");
            let line = line.to_string();
            fill(PATCH_MEMORY_ACCESS, &[("function", function()?), ("arrays", &names), ("line", &line)])
        }
        PatchOption::Conditional { stmt } => fill(
            PATCH_CONDITIONAL,
            &[("function", function()?), ("if statement", non_empty(stmt, "stmt")?.trim())],
        ),
        PatchOption::LoopBound { stmt } => fill(
            PATCH_LOOP_BOUND,
            &[("function", function()?), ("loop statement", non_empty(stmt, "stmt")?.trim())],
        ),
        PatchOption::SpectreCond { stmt } => fill(
            PATCH_SPECTRE_CONDITIONAL,
            &[("function", function()?), ("conditional statement", non_empty(stmt, "stmt")?.trim())],
        ),
        PatchOption::Retry { crash_reason } => {
            let reason = non_empty(crash_reason, "crash_reason")?.trim_end();
            let sep = if reason.contains('\n') { "\n" } else { " " };
            fill(PATCH_RETRY, &[("crash reason", reason), ("separator", sep)])
        }
    })
}

/// Crash reason for a candidate that failed its functional tests.
pub fn functional_failure_reason(diagnostics: &str) -> String {
    let d = diagnostics.trim();
    if d.is_empty() {
        FUNCTIONAL_FAILURE_REASON.to_string()
    } else {
        alloc::format!("{FUNCTIONAL_FAILURE_REASON}\n{d}")
    }
}

pub fn render_generation_prompt(step: &GenerationStep) -> Result<String, PromptError> {
    Ok(match step {
        GenerationStep::ListFunctions { algorithm } => {
            fill(GENERATE_LIST, &[("algorithm", non_empty(algorithm, "algorithm")?.trim())])
        }
        GenerationStep::ImplementFunction { name } => {
            fill(GENERATE_FUNCTION, &[("function name", non_empty(name, "name")?.trim())])
        }
        GenerationStep::ImplementMain => GENERATE_MAIN.to_string(),
    })
}

pub fn render_driver_prompt() -> String {
    DRIVER.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fill_is_single_pass() {
        assert_eq!(fill("<a>-<b>", &[("a", "<b>"), ("b", "x")]), "<b>-x");
        assert_eq!(fill("#include <stdio.h> <a>", &[("a", "1")]), "#include <stdio.h> 1");
        assert_eq!(fill("<a", &[("a", "1")]), "<a");
        assert_eq!(fill("<", &[]), "<");
    }

    #[test]
    fn empty_specifics_leave_no_residue() {
        let s = render_system_prompt("C", "", PromptMode::ConstantTime).unwrap();
        assert!(s.ends_with("Do not change the name of the function."));
        assert!(!s.contains('<'));
        let g = render_system_prompt("C", "  ", PromptMode::Generate).unwrap();
        assert!(g.ends_with("Just do what the user says."));
    }

    #[test]
    fn specifics_are_appended() {
        let s = render_system_prompt("Javascript", "Use let instead of const.", PromptMode::ConstantTime).unwrap();
        assert!(s.ends_with("function. Use let instead of const."));
        assert!(s.contains("in Javascript."));
    }

    #[test]
    fn mode_names() {
        assert_eq!("constant-time".parse::<PromptMode>(), Ok(PromptMode::ConstantTime));
        assert_eq!("Spectre".parse::<PromptMode>(), Ok(PromptMode::Spectre));
        assert_eq!(
            render_system_prompt_named("C", "", "quantum"),
            Err(PromptError::UnknownMode("quantum".to_string()))
        );
        assert_eq!(render_system_prompt("", "", PromptMode::Spectre), Err(PromptError::MissingField("language_tag")));
    }

    #[test]
    fn missing_fields() {
        let p = |option| PatchPrompt { option, language_tag: "C".into(), specifics: String::new() };
        assert_eq!(
            render_patch_prompt(&p(PatchOption::MemAccess { arrays: vec![], line: 3 }), "int f(){}"),
            Err(PromptError::MissingField("arrays"))
        );
        assert_eq!(
            render_patch_prompt(&p(PatchOption::Conditional { stmt: "if (x)".into() }), ""),
            Err(PromptError::MissingField("function_source"))
        );
        assert!(render_patch_prompt(&p(PatchOption::Retry { crash_reason: "x".into() }), "").is_ok());
    }

    #[test]
    fn multiline_crash_reason_uses_newline() {
        let p = PatchPrompt {
            option: PatchOption::Retry { crash_reason: "error: a\nerror: b\n".into() },
            language_tag: "C".into(),
            specifics: String::new(),
        };
        assert!(render_patch_prompt(&p, "").unwrap().starts_with("error: a\nerror: b\nThe generated code"));
    }
}
