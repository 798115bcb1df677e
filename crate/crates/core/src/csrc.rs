//! Lightweight C source handling: comment/literal masking, top-level item
//! splitting, code extraction from model responses and function splicing.
//!
//! This is not a C parser. It tracks brace and parenthesis depth over text
//! with comments, string/char literals and preprocessor lines blanked out,
//! which is enough to locate function definitions in the sources the
//! patching loop deals with.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("response contains no code")]
    NoCodeFound,
    #[error("response code does not define `{0}`")]
    FunctionRenamed(String),
    #[error("`{name}` takes {found} parameters, the original takes {expected}")]
    SignatureChanged { name: String, expected: usize, found: usize },
    #[error("no definition of `{0}` found")]
    FunctionSpanNotFound(String),
    #[error("`{0}` is defined more than once")]
    AmbiguousDefinition(String),
}

/// Same-length copy of `src` with comment bodies and literal contents
/// replaced by spaces. Newlines are kept so offsets and line numbers agree.
pub fn mask_comments_and_literals(src: &str) -> String {
    #[derive(PartialEq)]
    enum St {
        Code,
        Line,
        Block,
        Str(u8),
    }
    let b = src.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut st = St::Code;
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        let next = b.get(i + 1).copied();
        match st {
            St::Code => match (c, next) {
                (b'/', Some(b'/')) => {
                    st = St::Line;
                    out.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                (b'/', Some(b'*')) => {
                    st = St::Block;
                    out.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                (b'"' | b'\'', _) => {
                    st = St::Str(c);
                    out.push(c);
                }
                _ => out.push(if c.is_ascii() { c } else { b' ' }),
            },
            St::Line => {
                if c == b'\n' {
                    st = St::Code;
                    out.push(b'\n');
                } else {
                    out.push(b' ');
                }
            }
            St::Block => {
                if c == b'*' && next == Some(b'/') {
                    st = St::Code;
                    out.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                out.push(if c == b'\n' { b'\n' } else { b' ' });
            }
            St::Str(q) => {
                if c == b'\\' && next.is_some() {
                    out.push(b' ');
                    out.push(if next == Some(b'\n') { b'\n' } else { b' ' });
                    i += 2;
                    continue;
                }
                if c == q {
                    st = St::Code;
                    out.push(c);
                } else if c == b'\n' {
                    // unterminated literal; recover at end of line
                    st = St::Code;
                    out.push(b'\n');
                } else {
                    out.push(b' ');
                }
            }
        }
        i += 1;
    }
    String::from_utf8(out).expect("masking emits ASCII only")
}

/// Masked text with preprocessor directives blanked too.
pub fn mask_code(src: &str) -> String {
    let masked = mask_comments_and_literals(src);
    let mut out = String::with_capacity(masked.len());
    let mut in_directive = false;
    for line in masked.split_inclusive('\n') {
        let body = line.strip_suffix('\n').unwrap_or(line);
        if in_directive || body.trim_start().starts_with('#') {
            in_directive = body.trim_end().ends_with('\\');
            out.extend(body.chars().map(|_| ' '));
            if line.ends_with('\n') {
                out.push('\n');
            }
        } else {
            out.push_str(line);
        }
    }
    out
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Offsets of whole-word occurrences of `word` in `text`.
pub fn find_word(text: &str, word: &str) -> Vec<usize> {
    let tb = text.as_bytes();
    let mut out = Vec::new();
    if word.is_empty() {
        return out;
    }
    let mut from = 0;
    while let Some(pos) = text[from..].find(word) {
        let s = from + pos;
        let e = s + word.len();
        let before_ok = s == 0 || !is_ident_byte(tb[s - 1]);
        let after_ok = e >= tb.len() || !is_ident_byte(tb[e]);
        if before_ok && after_ok {
            out.push(s);
        }
        from = s + 1;
    }
    out
}

/// Offset just past the bracket matching the one at `open`, if balanced.
pub fn matching_close(masked: &str, open: usize) -> Option<usize> {
    let b = masked.as_bytes();
    let (o, c) = match b.get(open)? {
        b'(' => (b'(', b')'),
        b'{' => (b'{', b'}'),
        b'[' => (b'[', b']'),
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, &ch) in b.iter().enumerate().skip(open) {
        if ch == o {
            depth += 1;
        } else if ch == c {
            depth -= 1;
            if depth == 0 {
                return Some(i + 1);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ItemKind {
    Function { name: String, params: usize },
    Declaration,
    Directive,
}

/// One top-level construct of a C translation unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub kind: ItemKind,
    pub span: Range<usize>,
    /// `false` when the closing brace or semicolon was never found.
    pub complete: bool,
}

impl Item {
    pub fn function_name(&self) -> Option<&str> {
        match &self.kind {
            ItemKind::Function { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.clone()]
    }
}

/// Number of parameters in a masked parameter list (without parentheses).
pub fn param_count(params: &str) -> usize {
    let t = params.trim();
    if t.is_empty() || t == "void" {
        return 0;
    }
    let mut depth = 0i32;
    let mut n = 1;
    for c in t.bytes() {
        match c {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth -= 1,
            b',' if depth == 0 => n += 1,
            _ => {}
        }
    }
    n
}

/// If `header` (masked, up to the opening brace) looks like a function
/// declarator, returns its name and parameter count.
fn function_signature(header: &str) -> Option<(String, usize)> {
    let h = header.trim_end();
    if !h.ends_with(')') {
        return None;
    }
    if h.contains('=') {
        return None;
    }
    // the parameter list is the first top-level parenthesis group
    let open = h.find('(')?;
    let close = matching_close(h, open)?;
    let before = h[..open].trim_end();
    let name_start = before.rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).map_or(0, |i| i + 1);
    let name = &before[name_start..];
    if name.is_empty() || name.as_bytes()[0].is_ascii_digit() {
        return None;
    }
    const NOT_FUNCTIONS: &[&str] = &["if", "for", "while", "switch", "return", "sizeof", "do"];
    if NOT_FUNCTIONS.contains(&name) {
        return None;
    }
    Some((name.to_string(), param_count(&h[open + 1..close - 1])))
}

/// Splits a translation unit into top-level items.
pub fn top_level_items(src: &str) -> Vec<Item> {
    let comments = mask_comments_and_literals(src);
    let masked = mask_code(src);
    let b = masked.as_bytes();
    let mut items = Vec::new();

    // directives first, from the comment-masked text
    let mut directive_spans: Vec<Range<usize>> = Vec::new();
    let mut offset = 0;
    let mut open: Option<usize> = None;
    for line in comments.split_inclusive('\n') {
        let body = line.strip_suffix('\n').unwrap_or(line);
        let start_col = body.len() - body.trim_start().len();
        if open.is_none() && body.trim_start().starts_with('#') {
            open = Some(offset + start_col);
        }
        if let Some(s) = open {
            if !body.trim_end().ends_with('\\') {
                directive_spans.push(s..offset + body.trim_end().len());
                open = None;
            }
        }
        offset += line.len();
    }
    if let Some(s) = open {
        directive_spans.push(s..src.len());
    }

    let mut depth = 0usize;
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if start.is_none() {
            if c.is_ascii_whitespace() || c == b';' {
                i += 1;
                continue;
            }
            start = Some(i);
        }
        let s = start.unwrap_or(i);
        match c {
            b'{' => {
                if depth == 0 {
                    if let Some((name, params)) = function_signature(&masked[s..i]) {
                        let (end, complete) = match matching_close(&masked, i) {
                            Some(e) => (e, true),
                            None => (src.len(), false),
                        };
                        items.push(Item { kind: ItemKind::Function { name, params }, span: s..end, complete });
                        start = None;
                        i = end;
                        continue;
                    }
                }
                depth += 1;
            }
            b'}' => depth = depth.saturating_sub(1),
            b';' if depth == 0 => {
                items.push(Item { kind: ItemKind::Declaration, span: s..i + 1, complete: true });
                start = None;
            }
            _ => {}
        }
        i += 1;
    }
    if let Some(s) = start {
        if !masked[s..].trim().is_empty() {
            items.push(Item { kind: ItemKind::Declaration, span: s..src.len(), complete: false });
        }
    }

    items.extend(directive_spans.into_iter().map(|span| Item { kind: ItemKind::Directive, span, complete: true }));
    items.sort_by_key(|it| it.span.start);
    items
}

pub fn function_definitions<'a>(items: &'a [Item], name: &'a str) -> impl Iterator<Item = &'a Item> + 'a {
    items.iter().filter(move |it| it.function_name() == Some(name))
}

/// The single definition of `name` in `src`.
pub fn locate_function(src: &str, name: &str) -> Result<Item, CodeError> {
    let items = top_level_items(src);
    let mut defs = function_definitions(&items, name);
    let first = defs.next().ok_or_else(|| CodeError::FunctionSpanNotFound(name.to_string()))?;
    if defs.next().is_some() {
        return Err(CodeError::AmbiguousDefinition(name.to_string()));
    }
    Ok(first.clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchCandidate {
    /// Code taken from the response: the fenced block, or the bare
    /// function definition when the response has no fences.
    pub function_text: String,
    pub raw_response: String,
    pub trial_index: u32,
}

/// Bodies of fenced code blocks (```), in order. An unterminated final
/// fence runs to the end of the text.
pub fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                let mut content = &body[..close];
                // a closing fence sits on its own line
                if let Some(stripped) = content.strip_suffix('\n') {
                    content = stripped;
                }
                blocks.push(content);
                rest = &body[close + 3..];
            }
            None => {
                blocks.push(body);
                break;
            }
        }
    }
    blocks
}

fn check_signature(items: &[Item], name: &str, expected: Option<usize>) -> Result<bool, CodeError> {
    let mut found = None;
    for it in function_definitions(items, name) {
        if let ItemKind::Function { params, .. } = it.kind {
            match expected {
                Some(e) if params == e => return Ok(true),
                _ => found = found.or(Some(params)),
            }
        }
    }
    match (found, expected) {
        (None, _) => Ok(false),
        (Some(_), None) => Ok(true),
        (Some(f), Some(e)) => Err(CodeError::SignatureChanged { name: name.to_string(), expected: e, found: f }),
    }
}

/// Pulls a patch candidate for `function_name` out of a model response.
///
/// The first fenced block that defines the function wins. Without fences,
/// the longest brace-balanced definition of the function in the response
/// is used. `expected_params` rejects candidates whose parameter count
/// differs from the original.
pub fn extract_code(
    response: &str,
    function_name: &str,
    expected_params: Option<usize>,
    trial_index: u32,
) -> Result<PatchCandidate, CodeError> {
    let blocks = fenced_blocks(response);
    let mut signature_error = None;
    for block in &blocks {
        let items = top_level_items(block);
        match check_signature(&items, function_name, expected_params) {
            Ok(true) => {
                return Ok(PatchCandidate {
                    function_text: block.trim_matches('\n').to_string(),
                    raw_response: response.to_string(),
                    trial_index,
                })
            }
            Ok(false) => {}
            Err(e) => signature_error = signature_error.or(Some(e)),
        }
    }

    let items = top_level_items(response);
    let best = function_definitions(&items, function_name)
        .filter(|it| {
            matches!(it.kind, ItemKind::Function { params, .. } if expected_params.is_none_or(|e| e == params))
        })
        .max_by_key(|it| it.span.len());
    if let Some(it) = best {
        return Ok(PatchCandidate {
            function_text: it.text(response).to_string(),
            raw_response: response.to_string(),
            trial_index,
        });
    }
    if let Some(e) = signature_error {
        return Err(e);
    }
    check_signature(&items, function_name, expected_params)?;
    let has_code = !blocks.is_empty() || items.iter().any(|it| matches!(it.kind, ItemKind::Function { .. }));
    if has_code {
        Err(CodeError::FunctionRenamed(function_name.to_string()))
    } else {
        Err(CodeError::NoCodeFound)
    }
}

fn normalized(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Replaces the definition of `function_name` in `original` with the one in
/// `candidate`. Other functions of the candidate replace same-named
/// definitions in place or, when new, are inserted once right before the
/// target; directives and declarations not already present are inserted
/// there as well.
pub fn splice_function(original: &str, function_name: &str, candidate: &str) -> Result<String, CodeError> {
    let target = locate_function(original, function_name)?;
    let orig_items = top_level_items(original);
    let cand_items = top_level_items(candidate);
    let new_def = function_definitions(&cand_items, function_name)
        .max_by_key(|it| it.span.len())
        .ok_or_else(|| CodeError::FunctionRenamed(function_name.to_string()))?;

    let existing: Vec<String> = orig_items.iter().map(|it| normalized(it.text(original))).collect();
    let mut prelude = String::new();
    // (span in original, replacement)
    let mut replacements: Vec<(Range<usize>, String)> = Vec::new();
    for it in &cand_items {
        if core::ptr::eq(it, new_def) {
            continue;
        }
        let text = it.text(candidate);
        match &it.kind {
            ItemKind::Function { name, .. } => {
                if name == function_name {
                    continue;
                }
                let mut same = function_definitions(&orig_items, name);
                match (same.next(), same.next()) {
                    (Some(old), None) => replacements.push((old.span.clone(), text.to_string())),
                    (None, _) => {
                        prelude.push_str(text);
                        prelude.push_str("\n\n");
                    }
                    (Some(_), Some(_)) => return Err(CodeError::AmbiguousDefinition(name.clone())),
                }
            }
            ItemKind::Directive | ItemKind::Declaration => {
                let n = normalized(text);
                let is_own_prototype = matches!(it.kind, ItemKind::Declaration)
                    && !find_word(&mask_code(text), function_name).is_empty()
                    && !text.contains('=');
                if !existing.contains(&n) && !is_own_prototype {
                    prelude.push_str(text);
                    prelude.push('\n');
                    if matches!(it.kind, ItemKind::Declaration) {
                        prelude.push('\n');
                    }
                }
            }
        }
    }
    if !prelude.is_empty() && !prelude.ends_with("\n\n") {
        prelude.push('\n');
    }
    let mut target_text = prelude;
    target_text.push_str(new_def.text(candidate));
    replacements.push((target.span.clone(), target_text));
    replacements.sort_by_key(|(r, _)| core::cmp::Reverse(r.start));

    let mut out = original.to_string();
    for (range, text) in replacements {
        out.replace_range(range, &text);
    }
    Ok(out)
}

/// 1-based line number of byte offset `pos`.
pub fn line_of(src: &str, pos: usize) -> u32 {
    src.as_bytes()[..pos.min(src.len())].iter().filter(|&&b| b == b'\n').count() as u32 + 1
}

/// Byte range of 1-based line `line`, without its newline.
pub fn line_range(src: &str, line: u32) -> Option<Range<usize>> {
    if line == 0 {
        return None;
    }
    let mut start = 0;
    for (i, l) in src.split_inclusive('\n').enumerate() {
        if i + 1 == line as usize {
            let body = l.strip_suffix('\n').unwrap_or(l);
            let body = body.strip_suffix('\r').unwrap_or(body);
            return Some(start..start + body.len());
        }
        start += l.len();
    }
    None
}

/// The function definition enclosing 1-based `line`, if any.
pub fn function_containing_line(src: &str, line: u32) -> Option<Item> {
    let r = line_range(src, line)?;
    top_level_items(src)
        .into_iter()
        .find(|it| matches!(it.kind, ItemKind::Function { .. }) && it.span.start <= r.start && r.start < it.span.end)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = "#include <stdint.h>\n\
/* LUT { */\n\
static const uint8_t LUT[16] = {1, 2, 3};\n\
int helper(int a, int b);\n\
\n\
int target(int k) {\n  if (k) { return LUT[k % 16]; } // }\n  return \"}\"[0];\n}\n\
\n\
int main(void) { return target(1); }\n";

    #[test]
    fn masking_keeps_offsets() {
        let m = mask_comments_and_literals(FILE);
        assert_eq!(m.len(), FILE.len());
        assert_eq!(m.matches('\n').count(), FILE.matches('\n').count());
        assert!(!m.contains("LUT {"));
        assert!(!mask_code(FILE).contains("stdint"));
        assert_eq!(mask_comments_and_literals("'\\''x"), "'  'x");
    }

    #[test]
    fn items_split() {
        let items = top_level_items(FILE);
        let kinds: Vec<_> = items
            .iter()
            .map(|it| match &it.kind {
                ItemKind::Function { name, params } => alloc::format!("fn {name}/{params}"),
                ItemKind::Declaration => "decl".to_string(),
                ItemKind::Directive => "dir".to_string(),
            })
            .collect();
        assert_eq!(kinds, ["dir", "decl", "decl", "fn target/1", "fn main/0"]);
        let t = locate_function(FILE, "target").unwrap();
        assert!(t.text(FILE).starts_with("int target(int k) {"));
        assert!(t.text(FILE).ends_with("[0];\n}"));
    }

    #[test]
    fn params() {
        assert_eq!(param_count(""), 0);
        assert_eq!(param_count(" void "), 0);
        assert_eq!(param_count("int (*f)(int, int), char c"), 2);
        assert_eq!(param_count("const char *fmt, ..."), 2);
    }

    #[test]
    fn extraction_prefers_fenced_block() {
        let r = "Here:\n```c\nint target(int k) {\n  return 0;\n}\n```\nDone.";
        let c = extract_code(r, "target", Some(1), 1).unwrap();
        assert_eq!(c.function_text, "int target(int k) {\n  return 0;\n}");
        assert_eq!(c.trial_index, 1);
    }

    #[test]
    fn extraction_errors() {
        assert_eq!(extract_code("I cannot help.", "f", None, 1), Err(CodeError::NoCodeFound));
        assert_eq!(
            extract_code("```c\nint g(int a) { return a; }\n```", "f", None, 1),
            Err(CodeError::FunctionRenamed("f".into()))
        );
        assert_eq!(
            extract_code("```c\nint f(int a, int b) { return a; }\n```", "f", Some(1), 1),
            Err(CodeError::SignatureChanged { name: "f".into(), expected: 1, found: 2 })
        );
    }

    #[test]
    fn unfenced_takes_longest_definition() {
        let r = "Try int f(int a) { return a; } or better:\nint f(int a) {\n  int m = -a;\n  return m;\n}\n";
        let c = extract_code(r, "f", Some(1), 2).unwrap();
        assert!(c.function_text.contains("int m = -a;"));
    }

    #[test]
    fn splice_replaces_and_inserts_helper() {
        let cand = "#include <stdint.h>\n#include <string.h>\nstatic int pick(int m, int a) { return m & a; }\nint target(int k) {\n  return pick(-1, LUT[0]);\n}";
        let out = splice_function(FILE, "target", cand).unwrap();
        assert_eq!(out.matches("#include <stdint.h>").count(), 1);
        assert_eq!(out.matches("#include <string.h>").count(), 1);
        assert_eq!(out.matches("static int pick").count(), 1);
        assert!(out.find("static int pick").unwrap() < out.find("int target").unwrap());
        assert!(!out.contains("k % 16"));
        assert!(out.contains("int main(void) { return target(1); }"));
        // applying the same candidate twice does not duplicate the helper
        let again = splice_function(&out, "target", cand).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn splice_errors() {
        let twice = "int f(void) { return 0; }\nint f(void) { return 1; }\n";
        assert_eq!(splice_function(twice, "f", "int f(void){return 2;}"), Err(CodeError::AmbiguousDefinition("f".into())));
        assert_eq!(splice_function("int g;", "f", "int f(void){}"), Err(CodeError::FunctionSpanNotFound("f".into())));
    }

    #[test]
    fn lines() {
        assert_eq!(line_of("a\nb\nc", 2), 2);
        assert_eq!(line_range("a\nbc\n", 2), Some(2..4));
        assert_eq!(line_range("a\n", 3), None);
        let t = function_containing_line(FILE, 8).unwrap();
        assert_eq!(t.function_name(), Some("target"));
        assert!(function_containing_line(FILE, 3).is_none());
    }
}
