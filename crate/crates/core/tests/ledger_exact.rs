use proptest::prelude::*;
use rust_decimal::Decimal;
use zeroleak_core::ledger::{CostLedger, ModelConfig};

fn gpt4() -> ModelConfig {
    ModelConfig::preset("gpt-4-0613").unwrap().with_prices(Decimal::new(3, 2), Decimal::new(6, 2))
}

#[test]
fn thousand_prompt_tokens() {
    let m = gpt4();
    assert_eq!(m.cost_of(1000, 0), Decimal::new(3, 2));
    assert_eq!(m.cost_of(0, 1000), Decimal::new(6, 2));
    let mut l = CostLedger::default();
    l.record(&m.model_id, 1000, 0, &m);
    assert_eq!(l.totals.cost.to_string(), "0.03");
}

#[test]
fn sub_cent_amounts_accumulate_exactly() {
    let m = gpt4();
    let mut l = CostLedger::default();
    for _ in 0..1000 {
        l.record(&m.model_id, 1, 0, &m);
    }
    assert_eq!(l.totals.cost, Decimal::new(3, 2));
    assert_eq!(l.totals.prompt_tokens, 1000);
}

proptest! {
    #[test]
    fn total_is_order_independent(
        mut ex in prop::collection::vec((0..100_000u64, 0..100_000u64), 0..40),
        seed in any::<u64>(),
    ) {
        let m = gpt4();
        let total = |ex: &[(u64, u64)]| {
            let mut l = CostLedger::default();
            for &(p, c) in ex {
                l.record(&m.model_id, p, c, &m);
            }
            l.totals
        };
        let a = total(&ex);
        // deterministic shuffle
        let mut s = seed | 1;
        for i in (1..ex.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            ex.swap(i, (s % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(total(&ex), a);
        let sum: u64 = ex.iter().map(|&(p, c)| 3 * p + 6 * c).sum();
        prop_assert_eq!(a.cost, Decimal::from(sum) / Decimal::from(100_000));
    }
}
