//! Small reference scenarios used by tests, the bundled scenario files and the CLI.

use crate::dist_core::rational::ratio;
use crate::dist_core::{Distribution, InfoLevel, Rational};
use crate::scenario::{AwarenessSet, DisclosurePolicy, Scenario};

pub type Preset = (Scenario, DisclosurePolicy);

fn equiprobable(values: &[Rational]) -> Distribution {
    let p = ratio(1, values.len() as i64);
    Distribution::discrete(values.iter().map(|v| (v.clone(), p.clone())).collect()).expect("valid atoms")
}

fn coin(hi: i64) -> Distribution {
    Distribution::discrete_ratios(&[(0, 1, 2), (hi, 1, 2)]).expect("valid coin")
}

fn repeat_row(row: &[Distribution], n: usize) -> Vec<Distribution> {
    row.iter().cycle().take(row.len() * n).cloned().collect()
}

fn sets(ids: &[&[usize]]) -> Vec<AwarenessSet> {
    ids.iter().map(|s| AwarenessSet::from_ids(s)).collect()
}

/// Two bidders; characteristic 1 is a fair coin on {0, 1} for both, characteristic 2
/// a fair coin on {0, 2}. Bidder 1 is aware of both, bidder 2 only of characteristic 1.
pub fn d1() -> Preset {
    let s = Scenario::new(2, 2, vec![coin(1), coin(2), coin(1), coin(2)]).expect("d1");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1]])).expect("d1 policy");
    (s, p)
}

/// `d1` after bidder 2 is also made aware of characteristic 2.
pub fn d1_extended() -> Preset {
    let (s, _) = d1();
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1, 2]])).expect("policy");
    (s, p)
}

/// Two bidders with characteristic 1 ~ U[0, 5] each and characteristic 2 ~ U[-6, 5];
/// only bidder 1 is aware of characteristic 2, with full information.
pub fn example1() -> Preset {
    let u = Distribution::uniform(0.0, 5.0).expect("u");
    let v = Distribution::uniform(-6.0, 5.0).expect("v");
    let s = Scenario::new(2, 2, vec![u.clone(), v.clone(), u, v]).expect("example 1");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1]])).expect("policy");
    (s, p)
}

/// Midpoint discretization of [`example1`]: 5 equiprobable atoms 0.5..4.5 and
/// 11 equiprobable atoms -5.5..4.5.
pub fn example1_discretized() -> Preset {
    let u = equiprobable(&(0..5).map(|k| ratio(2 * k + 1, 2)).collect::<Vec<_>>());
    let v = equiprobable(&(0..11).map(|k| ratio(2 * k - 11, 2)).collect::<Vec<_>>());
    let s = Scenario::new(2, 2, vec![u.clone(), v.clone(), u, v]).expect("discretized");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1]])).expect("policy");
    (s, p)
}

/// Two bidders with normal characteristics: N(mu1, s1^2) for characteristic 1 and
/// N(mu2, s2^2) for characteristic 2; only bidder 1 is aware of characteristic 2.
pub fn example2(mu1: f64, s1: f64, mu2: f64, s2: f64) -> Preset {
    let a = Distribution::normal(mu1, s1).expect("normal");
    let b = Distribution::normal(mu2, s2).expect("normal");
    let s = Scenario::new(2, 2, vec![a.clone(), b.clone(), a, b]).expect("example 2");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1]])).expect("policy");
    (s, p)
}

/// Three bidders, characteristic 1 on {0, 1, 2} with full information and a second
/// characteristic with mean `mean2`; nobody has information about characteristic 2
/// and nobody is aware of it.
pub fn public_no_info(mean2: Rational) -> Preset {
    let base = Distribution::discrete_ratios(&[(0, 1, 3), (1, 1, 3), (2, 1, 3)]).expect("base");
    let one = Rational::from_integer(1.into());
    let extra = Distribution::discrete(vec![(&mean2 - &one, ratio(1, 2)), (&mean2 + &one, ratio(1, 2))])
        .expect("extra");
    let s = Scenario::new(3, 2, repeat_row(&[base, extra], 3)).expect("scenario");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1], &[1], &[1]])).expect("policy");
    (s, p)
}

/// Three bidders, characteristic 1 on {0, 1, 2}, and characteristic 2 on
/// {-3, 1} with probabilities 1/4, 3/4 (mean 0, positive expected maximum).
pub fn public_full_info() -> Preset {
    let base = Distribution::discrete_ratios(&[(0, 1, 3), (1, 1, 3), (2, 1, 3)]).expect("base");
    let extra = Distribution::discrete_ratios(&[(-3, 1, 4), (1, 3, 4)]).expect("extra");
    let s = Scenario::new(3, 2, repeat_row(&[base, extra], 3)).expect("scenario");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1], &[1], &[1]])).expect("policy");
    (s, p)
}

/// Three bidders, characteristic 1 on {0, 1, 2}, and characteristic 2 on {-3, -1}
/// with equal probabilities, so its expected maximum across bidders is negative.
pub fn public_negative_max() -> Preset {
    let base = Distribution::discrete_ratios(&[(0, 1, 3), (1, 1, 3), (2, 1, 3)]).expect("base");
    let extra = Distribution::discrete_ratios(&[(-3, 1, 2), (-1, 1, 2)]).expect("extra");
    let s = Scenario::new(3, 2, repeat_row(&[base, extra], 3)).expect("scenario");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1], &[1], &[1]])).expect("policy");
    (s, p)
}

/// Two bidders aware of both characteristics: characteristic 1 on {0, 1, 2} with
/// full information, characteristic 2 on {-1, 2} with no information.
pub fn common_awareness() -> Preset {
    let a = Distribution::discrete_ratios(&[(0, 1, 3), (1, 1, 3), (2, 1, 3)]).expect("a");
    let b = Distribution::discrete_ratios(&[(-1, 1, 2), (2, 1, 2)]).expect("b");
    let s = Scenario::new(2, 2, vec![a.clone(), b.clone(), a, b]).expect("scenario");
    let p = DisclosurePolicy::with_levels(&s, sets(&[&[1, 2], &[1, 2]]), |_, j| {
        if j == 0 { InfoLevel::FullInfo } else { InfoLevel::NoInfo }
    })
    .expect("policy");
    (s, p)
}

/// Two bidders, one characteristic on {0, 1}, common awareness and full information.
pub fn coins() -> Preset {
    let s = Scenario::new(2, 1, vec![coin(1), coin(1)]).expect("coins");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1], &[1]])).expect("policy");
    (s, p)
}

/// Symmetric scenario where every bidder is unaware of characteristic 2, whose law
/// has mean `hidden_mean`.
pub fn hidden_characteristic(hidden_mean: i64) -> Preset {
    let base = Distribution::discrete_ratios(&[(0, 1, 3), (1, 1, 3), (3, 1, 3)]).expect("base");
    let hidden = Distribution::discrete_ratios(&[(hidden_mean - 2, 1, 2), (hidden_mean + 2, 1, 2)]).expect("hidden");
    let s = Scenario::new(3, 2, repeat_row(&[base, hidden], 3)).expect("scenario");
    let p = DisclosurePolicy::full_info(&s, sets(&[&[1], &[1], &[1]])).expect("policy");
    (s, p)
}
