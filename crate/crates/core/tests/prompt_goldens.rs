use std::path::PathBuf;

use zeroleak_core::prompt::{
    functional_failure_reason, render_patch_prompt, render_system_prompt, PatchOption, PatchPrompt, PromptMode,
};

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/fixtures/prompts").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn patch(option: PatchOption, function: &str) -> String {
    let p = PatchPrompt { option, language_tag: "C".into(), specifics: String::new() };
    render_patch_prompt(&p, function).unwrap()
}

#[test]
fn system_prompts() {
    assert_eq!(render_system_prompt("C", "", PromptMode::ConstantTime).unwrap(), golden("system_constant_time_c.txt"));
    assert_eq!(render_system_prompt("C", "", PromptMode::Spectre).unwrap(), golden("system_spectre_c.txt"));
}

#[test]
fn spectre_system_prompt_is_one_substitution_away() {
    for specifics in ["", "Use uint8_t for bytes.", "Keep constant-time helpers."] {
        let ct = render_system_prompt("C", specifics, PromptMode::ConstantTime).unwrap();
        let sp = render_system_prompt("C", specifics, PromptMode::Spectre).unwrap();
        assert_eq!(ct.matches("constant-time").count() - specifics.matches("constant-time").count(), 1);
        let (head, tail) = ct.split_at(ct.find("constant-time").unwrap());
        assert_eq!(sp, format!("{head}secure{}", &tail["constant-time".len()..]));
    }
}

#[test]
fn constant_time_options() {
    let f = golden("fixture_memory_access.c");
    assert_eq!(
        patch(PatchOption::MemAccess { arrays: vec!["LUT".into()], line: 17 }, &f),
        golden("ct_option1_memory_access.txt")
    );
    let b = golden("fixture_branch.c");
    assert_eq!(
        patch(PatchOption::Conditional { stmt: "if (pw[i] != in[i])".into() }, &b),
        golden("ct_option2_conditional.txt")
    );
    assert_eq!(
        patch(PatchOption::LoopBound { stmt: "for (i = 0; i < 16; i++)".into() }, &b),
        golden("ct_option3_loop_bound.txt")
    );
    assert_eq!(
        patch(PatchOption::Retry { crash_reason: functional_failure_reason("") }, ""),
        golden("ct_option4_retry.txt")
    );
}

#[test]
fn spectre_option() {
    assert_eq!(
        patch(PatchOption::SpectreCond { stmt: "if (x < size)".into() }, &golden("fixture_spectre.c")),
        golden("spectre_option1.txt")
    );
}

#[test]
fn rendering_is_deterministic() {
    let f = golden("fixture_memory_access.c");
    let o = PatchOption::MemAccess { arrays: vec!["LUT".into(), "sbox".into()], line: 5 };
    assert_eq!(patch(o.clone(), &f), patch(o, &f));
}

#[test]
fn diagnostics_round_trip_into_retry() {
    let diag = "test.c:6: main: Assertion `f(3) == 0x7f' failed.";
    let text = patch(PatchOption::Retry { crash_reason: functional_failure_reason(diag) }, "");
    assert!(text.contains(diag));
    assert!(text.starts_with("The code is not working correctly.\n"));
}
