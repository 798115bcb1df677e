use proptest::prelude::*;
use zeroleak_core::adapters::{
    parse_kleespectre_output, parse_microwalk_report, parse_pitchfork_output, parse_spectector_output, AdapterError,
};
use zeroleak_core::leakage::LeakageKind;
use zeroleak_core::srcmap::AddressMap;

fn malformed_or_ok<T>(r: Result<T, AdapterError>) -> bool {
    matches!(r, Ok(_) | Err(AdapterError::MalformedReport { .. }))
}

// line-shaped noise built from the grammars' own tokens
fn arb_report(head: &'static str) -> impl Strategy<Value = String> {
    let tokens = prop::sample::select(vec![
        "[memory-access]", "[control-flow]", "[violation]", "[SNI]", "program is safe", "program is unsafe",
        "== results ==", "== end ==", "violations: 1", "paths explored: 2", "- kind=address", "speculative=true",
        "ip=0x10", "loc=a.c:3", "::", "lib.so:0x10", "f", "a.c:0", "a.c:7", "-", "1.5", "bits", "0x1f", "x",
    ]);
    prop::collection::vec(prop::collection::vec(tokens, 0..6), 0..8).prop_map(move |lines| {
        let body: Vec<String> = lines.into_iter().map(|l| l.join(" ")).collect();
        format!("{head}\n{}", body.join("\n"))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parsers_are_total(
        mw in arb_report("Microwalk leakage report"),
        sp in arb_report("[program] a.s"),
        pf in arb_report("pitchfork: analyzing function `f`"),
        junk in ".{0,200}",
    ) {
        let map = AddressMap::default();
        prop_assert!(malformed_or_ok(parse_microwalk_report(&mw, &map)));
        prop_assert!(malformed_or_ok(parse_microwalk_report(&junk, &map)));
        prop_assert!(malformed_or_ok(parse_spectector_output(&sp, None)));
        prop_assert!(malformed_or_ok(parse_spectector_output(&junk, None)));
        prop_assert!(malformed_or_ok(parse_pitchfork_output(&pf, None)));
        prop_assert!(malformed_or_ok(parse_pitchfork_output(&junk, None)));
        prop_assert!(malformed_or_ok(parse_kleespectre_output(&junk)));
    }

    #[test]
    fn parsed_points_respect_the_model(
        sp in arb_report("[program] a.s"),
        pf in arb_report("pitchfork: analyzing function `f`"),
    ) {
        for v in [parse_spectector_output(&sp, None), parse_pitchfork_output(&pf, None)].into_iter().flatten() {
            for p in &v.points {
                prop_assert!(p.line().is_none_or(|l| l >= 1));
                if p.kind == LeakageKind::SpectreV1 {
                    prop_assert!(p.detectors.iter().all(|d| d.may_report_spectre()));
                }
            }
        }
    }
}
