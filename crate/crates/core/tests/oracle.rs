//! Exact engine against the brute-force oracle on random discrete scenarios.

mod common;

use awareness_auction::dist_core::{Distribution, InfoLevel, Rational};
use awareness_auction::engine::{self, EstimatorConfig};
use awareness_auction::fees;
use awareness_auction::presets;
use awareness_auction::scenario::{AwarenessSet, DisclosurePolicy, Scenario};
use common::oracle;
use proptest::prelude::*;

fn exact(e: &engine::Estimate) -> Rational {
    e.exact.clone().expect("exact backend")
}

fn arb_law() -> impl Strategy<Value = Distribution> {
    proptest::collection::btree_map(-3i64..=4, 1i64..=3, 2..=3).prop_map(|atoms| {
        let total: i64 = atoms.values().sum();
        let support: Vec<(i64, i64, i64)> = atoms.into_iter().map(|(v, w)| (v, w, total)).collect();
        Distribution::discrete_ratios(&support).expect("valid law")
    })
}

fn arb_case() -> impl Strategy<Value = (Scenario, DisclosurePolicy)> {
    (2usize..=3, 1usize..=3)
        .prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(arb_law(), n * m),
                proptest::collection::vec(0u32..1 << (m - 1), n),
                proptest::collection::vec(proptest::collection::vec(0usize..3, 3), n * m),
                Just((n, m)),
            )
        })
        .prop_map(|(laws, rest, labels, (n, m))| {
            let s = Scenario::new(n, m, laws).expect("shape");
            let sets = rest.iter().map(|r| AwarenessSet::from_bits(1 | r << 1)).collect();
            let p = DisclosurePolicy::with_levels(&s, sets, |i, j| {
                let len = s.law(i, j).support_size().expect("discrete");
                InfoLevel::Cells(labels[i * m + j][..len].to_vec())
            })
            .expect("valid policy");
            (s, p)
        })
}

fn assert_matches(s: &Scenario, p: &DisclosurePolicy) {
    let o = oracle(s, p);
    let b = engine::estimate_with_hidden(s, p, &EstimatorConfig::exact()).expect("exact run");
    assert_eq!(exact(&b.first_order), o.first);
    assert_eq!(exact(&b.second_order), o.second);
    assert_eq!(exact(&b.revenue_via_fees), o.revenue);
    assert_eq!(exact(&b.revenue_via_rents), o.revenue);
    for (i, x) in b.bidders.iter().enumerate() {
        assert_eq!(exact(&x.perceived_surplus), o.perceived[i], "bidder {i} perceived");
        assert_eq!(exact(&x.actual_surplus), o.actual[i], "bidder {i} actual");
        assert_eq!(exact(&x.actual_win), o.win[i], "bidder {i} win");
        assert_eq!(exact(x.hidden_on_win.as_ref().expect("requested")), o.hidden_on_win[i], "bidder {i} hidden");
    }
}

#[test]
fn presets_match_the_oracle() {
    for (s, p) in [
        presets::d1(),
        presets::d1_extended(),
        presets::example1_discretized(),
        presets::public_full_info(),
        presets::public_negative_max(),
        presets::common_awareness(),
        presets::coins(),
        presets::hidden_characteristic(-1),
    ] {
        assert_matches(&s, &p);
    }
}

#[test]
fn d1_oracle_values() {
    let (s, p) = presets::d1();
    let o = oracle(&s, &p);
    let r = awareness_auction::dist_core::rational::ratio;
    assert_eq!(o.perceived, vec![r(9, 8), r(1, 4)]);
    assert_eq!(o.actual, vec![r(9, 8), r(1, 8)]);
    assert_eq!((o.first, o.second, o.revenue), (r(13, 8), r(3, 8), r(7, 4)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn exact_engine_matches_oracle((s, p) in arb_case()) {
        assert_matches(&s, &p);
    }

    #[test]
    fn revenue_decompositions_agree((s, p) in arb_case()) {
        let r = fees::revenue(&s, &p, &EstimatorConfig::exact()).unwrap();
        prop_assert_eq!(exact(&r.residual), Rational::from_integer(0.into()));
        prop_assert_eq!(exact(&r.total_revenue), exact(&r.first_order) + exact(&r.total_rent()));
    }
}
