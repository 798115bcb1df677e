//! Turns a localized leakage point into the patch option to prompt with.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::csrc::{find_word, line_range, mask_code, matching_close};
use crate::leakage::{LeakageKind, LeakagePoint};
use crate::prompt::PatchOption;

const LOOP_KEYWORDS: [&str; 3] = ["for", "while", "do"];
const CONDITION_KEYWORDS: [&str; 4] = ["if", "while", "for", "switch"];

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern",
    "float", "for", "goto", "if", "int", "long", "register", "return", "short", "signed", "sizeof", "static",
    "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while",
];

/// Whether the line lexically contains `for`, `while` or `do`.
pub fn has_loop_keyword(line: &str) -> bool {
    let m = mask_code(line);
    LOOP_KEYWORDS.iter().any(|k| !find_word(&m, k).is_empty())
}

/// Identifiers subscripted on the line, in order of first appearance.
/// Falls back to pointers dereferenced with `*name` or `name->`.
pub fn array_names(line: &str) -> Vec<String> {
    let m = mask_code(line);
    let b = m.as_bytes();
    let mut names: Vec<String> = Vec::new();
    fn push(names: &mut Vec<String>, n: &str) {
        if !n.is_empty() && !C_KEYWORDS.contains(&n) && !names.iter().any(|x| x == n) {
            names.push(n.to_string());
        }
    }
    let ident_before = |end: usize| -> &str {
        let mut s = end;
        while s > 0 && (b[s - 1].is_ascii_alphanumeric() || b[s - 1] == b'_') {
            s -= 1;
        }
        if s < end && !b[s].is_ascii_digit() {
            &m[s..end]
        } else {
            ""
        }
    };
    for (i, &c) in b.iter().enumerate() {
        if c == b'[' {
            let mut e = i;
            while e > 0 && b[e - 1] == b' ' {
                e -= 1;
            }
            push(&mut names, ident_before(e));
        }
    }
    if names.is_empty() {
        for (i, &c) in b.iter().enumerate() {
            let deref = c == b'*' && b.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic() || *n == b'_');
            if deref {
                let mut e = i + 1;
                while e < b.len() && (b[e].is_ascii_alphanumeric() || b[e] == b'_') {
                    e += 1;
                }
                push(&mut names, &m[i + 1..e]);
            } else if c == b'-' && b.get(i + 1) == Some(&b'>') {
                push(&mut names, ident_before(i));
            }
        }
    }
    names
}

/// The condition statement starting on `line` of `src`: the keyword
/// through its closing parenthesis, which may span lines. Lines without a
/// condition keyword (e.g. a ternary) yield the trimmed line.
pub fn condition_statement(src: &str, line: u32) -> Option<String> {
    let r = line_range(src, line)?;
    let masked = mask_code(src);
    let line_masked = &masked[r.clone()];
    let hit = CONDITION_KEYWORDS
        .iter()
        .flat_map(|k| find_word(line_masked, k).into_iter().map(move |p| (p, *k)))
        .min_by_key(|(p, _)| *p);
    if let Some((p, kw)) = hit {
        let start = r.start + p;
        let after_kw = start + kw.len();
        let open = masked[after_kw..].find(|c: char| !c.is_whitespace()).map(|o| after_kw + o);
        if let Some(open) = open.filter(|&o| masked.as_bytes()[o] == b'(') {
            if let Some(close) = matching_close(&masked, open) {
                return Some(src[start..close].to_string());
            }
        }
        if kw == "switch" {
            return Some(src[start..r.end].trim().to_string());
        }
    }
    Some(src[r].trim().to_string())
}

fn has_decision(line: &str) -> bool {
    let m = mask_code(line);
    CONDITION_KEYWORDS.iter().chain(["case"].iter()).any(|k| !find_word(&m, k).is_empty())
        || m.contains('?')
        || m.contains("&&")
        || m.contains("||")
}

/// The line that decides whether `line` runs: `line` itself when it holds a
/// condition, otherwise the nearest condition at most `max_back` lines above
/// it within the same function. Block-coverage tracers attribute a taken
/// branch to the first line of its body, hence this walk.
pub fn controlling_line(src: &str, line: u32, max_back: u32) -> u32 {
    let text = |l: u32| line_range(src, l).map(|r| &src[r]);
    if text(line).is_some_and(has_decision) {
        return line;
    }
    let Some(func) = crate::csrc::function_containing_line(src, line) else {
        return line;
    };
    let first = crate::csrc::line_of(src, func.span.start);
    (1..=max_back)
        .map_while(|d| line.checked_sub(d).filter(|&l| l > first))
        .find(|&l| text(l).is_some_and(has_decision))
        .unwrap_or(line)
}

/// Option for a point, given the full text of the file it points into.
/// `None` when the point has no source line inside `src`.
pub fn patch_option_for(point: &LeakagePoint, src: &str) -> Option<PatchOption> {
    let line = point.line()?;
    let text = &src[line_range(src, line)?];
    Some(match point.kind {
        LeakageKind::MemoryAccess => {
            let mut arrays = array_names(text);
            if arrays.is_empty() {
                arrays.push(text.trim().to_string());
            }
            PatchOption::MemAccess { arrays, line }
        }
        LeakageKind::ConditionalBranch if has_loop_keyword(text) => {
            PatchOption::LoopBound { stmt: condition_statement(src, line)? }
        }
        LeakageKind::ConditionalBranch => PatchOption::Conditional { stmt: condition_statement(src, line)? },
        LeakageKind::LoopBound => PatchOption::LoopBound { stmt: condition_statement(src, line)? },
        LeakageKind::SpectreV1 => PatchOption::SpectreCond { stmt: condition_statement(src, line)? },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::Detector;
    use crate::srcmap::SourceLocation;
    use alloc::vec;

    #[test]
    fn loop_keywords_are_whole_words() {
        assert!(has_loop_keyword("  for (i = 0; i < n; i++) {"));
        assert!(has_loop_keyword("} while (x);"));
        assert!(!has_loop_keyword("  if (format[i]) { // for each"));
        assert!(!has_loop_keyword("  done = fork;"));
    }

    #[test]
    fn control_lines() {
        let src = "int f(int x) {\n  if (x > 10) {\n    return x % 10;\n  } else {\n    return x + 10;\n  }\n}\n";
        assert_eq!(controlling_line(src, 3, 3), 2);
        assert_eq!(controlling_line(src, 5, 3), 2);
        assert_eq!(controlling_line(src, 5, 2), 5);
        assert_eq!(controlling_line(src, 2, 3), 2);
        let src = "int g(int x) {\n  x++;\n  x++;\n  return x;\n}\nint h(int y) {\n  if (y)\n    y = 0;\n  return y;\n}\n";
        assert_eq!(controlling_line(src, 4, 3), 4);
        assert_eq!(controlling_line(src, 8, 3), 7);
        assert_eq!(controlling_line(src, 9, 3), 7);
        assert_eq!(controlling_line(src, 40, 3), 40);
    }

    #[test]
    fn arrays_on_line() {
        assert_eq!(array_names("  return LUT[kval % 16];"), vec!["LUT"]);
        assert_eq!(array_names("y = array2[array1[x] * 512];"), vec!["array2", "array1"]);
        assert_eq!(array_names("z [x % 3] = 1; // a[0]"), vec!["z"]);
        assert_eq!(array_names("v = *p + q->n;"), vec!["p", "q"]);
        assert!(array_names("x = y + 1;").is_empty());
    }

    #[test]
    fn conditions() {
        let src = "int f(int x) {\n  if (a == NULL\n      || x < 0) return 0;\n  y = x ? 1 : 2;\n  while (x--) {}\n}\n";
        assert_eq!(condition_statement(src, 2).unwrap(), "if (a == NULL\n      || x < 0)");
        assert_eq!(condition_statement(src, 4).unwrap(), "y = x ? 1 : 2;");
        assert_eq!(condition_statement(src, 5).unwrap(), "while (x--)");
        assert_eq!(condition_statement(src, 9), None);
    }

    #[test]
    fn option_selection() {
        let src = "int f(int k) {\n  for (i = 0; i < k; i++) s += LUT[i];\n  if (k > 3) return 1;\n}\n";
        let at = |kind, line| LeakagePoint::new(kind, Detector::Builtin).at(Some(SourceLocation::new("f.c", line)));
        assert_eq!(
            patch_option_for(&at(LeakageKind::ConditionalBranch, 2), src),
            Some(PatchOption::LoopBound { stmt: "for (i = 0; i < k; i++)".into() })
        );
        assert_eq!(
            patch_option_for(&at(LeakageKind::ConditionalBranch, 3), src),
            Some(PatchOption::Conditional { stmt: "if (k > 3)".into() })
        );
        assert_eq!(
            patch_option_for(&at(LeakageKind::MemoryAccess, 2), src),
            Some(PatchOption::MemAccess { arrays: vec!["LUT".into()], line: 2 })
        );
        assert_eq!(
            patch_option_for(&at(LeakageKind::SpectreV1, 3), src),
            Some(PatchOption::SpectreCond { stmt: "if (k > 3)".into() })
        );
        assert_eq!(patch_option_for(&LeakagePoint::new(LeakageKind::MemoryAccess, Detector::Builtin), src), None);
    }
}
