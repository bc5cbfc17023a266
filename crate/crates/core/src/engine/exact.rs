//! Exact backend: enumerates the product of all support points in scope.
//!
//! Estimates, values and probabilities are scaled to integers with common
//! denominators, so each outcome is accumulated in integer arithmetic. `i128` is
//! tried first; on overflow the whole enumeration is redone with `BigInt`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::*;
use crate::dist_core::rational;

trait ExactInt: Clone + Ord + Send + Sync {
    fn zero() -> Self;
    fn from_big(v: &BigInt) -> Option<Self>;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn to_big(&self) -> BigInt;
}

impl ExactInt for i128 {
    fn zero() -> Self {
        0
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl ExactInt for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

/// One joint realization of a bidder's in-scope characteristics.
struct Combo<T> {
    weight: T,
    /// `bids[p][v]`: bid under policy `p` and view `v` (0 is `M`, `1 + i` is `M^i`).
    bids: Vec<Vec<T>>,
    /// `hidden[p]`: value of the characteristics outside the bidder's awareness.
    hidden: Vec<T>,
}

/// Integer-scaled inputs shared by both integer widths.
struct Setup {
    n: usize,
    policies: usize,
    combos: Vec<Vec<BigCombo>>,
    /// Common denominator of all probabilities.
    weight_total: BigInt,
    /// Scale of values and estimates.
    value_scale: BigInt,
    /// `lcm(1..=n)`, the scale of win shares.
    tie_scale: i128,
    outcomes: u128,
}

struct BigCombo {
    weight: BigInt,
    bids: Vec<Vec<BigInt>>,
    hidden: Vec<BigInt>,
}

fn scaled(r: &Rational, scale: &BigInt) -> BigInt {
    let v = r * Rational::from_integer(scale.clone());
    debug_assert!(v.is_integer());
    v.to_integer()
}

fn setup(s: &Scenario, plans: &[BidPlan], cfg: &EstimatorConfig, hidden: bool) -> Result<Setup, EngineError> {
    let (n, m) = (s.bidders(), s.characteristics());
    let scope: Vec<AwarenessSet> = (0..n)
        .map(|k| {
            if hidden {
                AwarenessSet::full(m)
            } else {
                plans.iter().fold(AwarenessSet::base(), |acc, p| acc.union(p.awareness(k)))
            }
        })
        .collect();

    let mut outcomes: u128 = 1;
    for k in 0..n {
        for j in scope[k].iter() {
            let size = s
                .law(k, j)
                .support_size()
                .ok_or(EngineError::NotEnumerable { bidder: k + 1, characteristic: j + 1 })?;
            outcomes = outcomes.saturating_mul(size as u128);
        }
    }
    if outcomes > cfg.enumeration_cap {
        let size = if outcomes == u128::MAX { "more than 2^128".to_string() } else { outcomes.to_string() };
        return Err(EngineError::EnumerationCap { size, cap: cfg.enumeration_cap });
    }

    let atoms = |k: usize, j: usize| s.law(k, j).as_discrete().expect("checked discrete");
    let mut value_scale = BigInt::one();
    let mut weight_total = BigInt::one();
    for k in 0..n {
        for j in scope[k].iter() {
            let a = atoms(k, j);
            weight_total *= rational::lcm_denominators(a.probs());
            if hidden {
                value_scale = value_scale.lcm(&rational::lcm_denominators(a.values()));
            }
            for plan in plans {
                if let Some(map) = plan.map(k, j) {
                    let est = (0..a.len()).map(|t| map.estimate_atom(t).expect("discrete signal map"));
                    value_scale = value_scale.lcm(&rational::lcm_denominators(est));
                }
            }
        }
    }

    let combos = (0..n)
        .map(|k| bidder_combos(s, plans, k, scope[k], &value_scale, hidden))
        .collect();
    let tie_scale = (1..=n as i128).fold(1i128, |acc, t| acc.lcm(&t));
    Ok(Setup { n, policies: plans.len(), combos, weight_total, value_scale, tie_scale, outcomes })
}

fn bidder_combos(
    s: &Scenario,
    plans: &[BidPlan],
    k: usize,
    scope: AwarenessSet,
    value_scale: &BigInt,
    hidden: bool,
) -> Vec<BigCombo> {
    let n = s.bidders();
    let chars: Vec<usize> = scope.iter().collect();
    let laws: Vec<_> = chars.iter().map(|&j| s.law(k, j).as_discrete().expect("discrete")).collect();
    let prob_scale: Vec<BigInt> = laws.iter().map(|a| rational::lcm_denominators(a.probs())).collect();
    let sizes: Vec<usize> = laws.iter().map(|a| a.len()).collect();
    let count: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(count);
    let mut idx = vec![0usize; chars.len()];
    for _ in 0..count {
        let mut weight = BigInt::one();
        for (t, a) in laws.iter().enumerate() {
            weight *= scaled(&a.probs()[idx[t]], &prob_scale[t]);
        }
        let mut bids = Vec::with_capacity(plans.len());
        let mut hid = Vec::with_capacity(plans.len());
        for plan in plans {
            let own = plan.awareness(k);
            let est: Vec<(usize, BigInt)> = chars
                .iter()
                .enumerate()
                .filter_map(|(t, &j)| {
                    plan.map(k, j).map(|map| (j, scaled(map.estimate_atom(idx[t]).expect("atom"), value_scale)))
                })
                .collect();
            let bid_in = |view: AwarenessSet| -> BigInt {
                est.iter().filter(|(j, _)| view.contains(*j)).map(|(_, e)| e.clone()).sum()
            };
            let mut views = Vec::with_capacity(n + 1);
            views.push(bid_in(own));
            for i in 0..n {
                views.push(bid_in(own.intersect(plan.awareness(i))));
            }
            bids.push(views);
            hid.push(if hidden {
                chars
                    .iter()
                    .enumerate()
                    .filter(|&(_, &j)| !own.contains(j))
                    .map(|(t, _)| scaled(&laws[t].values()[idx[t]], value_scale))
                    .sum()
            } else {
                <BigInt as Zero>::zero()
            });
        }
        out.push(BigCombo { weight, bids, hidden: hid });
        for t in (0..idx.len()).rev() {
            idx[t] += 1;
            if idx[t] < sizes[t] {
                break;
            }
            idx[t] = 0;
        }
    }
    out
}

fn convert<T: ExactInt>(setup: &Setup) -> Option<Vec<Vec<Combo<T>>>> {
    setup
        .combos
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    Some(Combo {
                        weight: T::from_big(&c.weight)?,
                        bids: c
                            .bids
                            .iter()
                            .map(|v| v.iter().map(T::from_big).collect::<Option<Vec<_>>>())
                            .collect::<Option<Vec<_>>>()?,
                        hidden: c.hidden.iter().map(T::from_big).collect::<Option<Vec<_>>>()?,
                    })
                })
                .collect()
        })
        .collect()
}

/// Surplus (value scale) and win share (tie scale) of bidder `i`.
fn standing<T: ExactInt>(bids: &[T], i: usize, tie_scale: i128) -> Option<(T, T)> {
    let top = bids.iter().max()?;
    if bids[i] != *top {
        return Some((T::zero(), T::zero()));
    }
    let tied = bids.iter().filter(|b| *b == top).count();
    if tied >= 2 {
        return Some((T::zero(), T::from_big(&BigInt::from(tie_scale / tied as i128))?));
    }
    let others = bids.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, b)| b).max()?;
    Some((bids[i].sub(others)?, T::from_big(&BigInt::from(tie_scale))?))
}

fn top_two<T: ExactInt>(bids: &[T]) -> (T, T) {
    let mut sorted: Vec<&T> = bids.iter().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    (sorted[0].clone(), sorted[1].clone())
}

/// Adds `weight * value` into `acc`.
fn add_weighted<T: ExactInt>(acc: &mut T, weight: &T, value: &T) -> Option<()> {
    *acc = acc.add(&weight.mul(value)?)?;
    Some(())
}

fn accumulate<T: ExactInt>(setup: &Setup, combos: &[Vec<Combo<T>>], hidden: bool) -> Option<Vec<T>> {
    let n = setup.n;
    let f = field_count(n);
    let width = f * setup.policies;
    let tie_scale = setup.tie_scale;

    let partials: Vec<Option<Vec<T>>> = (0..combos[0].len())
        .into_par_iter()
        .map(|first| {
            let mut acc = vec![T::zero(); width];
            let mut idx = vec![0usize; n];
            idx[0] = first;
            let inner: usize = combos[1..].iter().map(Vec::len).product();
            let mut full = Vec::with_capacity(n);
            let mut seen = Vec::with_capacity(n);
            for _ in 0..inner {
                let mut weight = combos[0][first].weight.clone();
                for k in 1..n {
                    weight = weight.mul(&combos[k][idx[k]].weight)?;
                }
                for p in 0..setup.policies {
                    let out = &mut acc[p * f..(p + 1) * f];
                    full.clear();
                    full.extend((0..n).map(|k| combos[k][idx[k]].bids[p][0].clone()));
                    let (y1, y2) = top_two(&full);
                    let mut fees = T::zero();
                    let mut rents = T::zero();
                    for i in 0..n {
                        seen.clear();
                        seen.extend((0..n).map(|k| {
                            if k == i { full[i].clone() } else { combos[k][idx[k]].bids[p][1 + i].clone() }
                        }));
                        let (ps, pw) = standing(&seen, i, tie_scale)?;
                        let (act, aw) = standing(&full, i, tie_scale)?;
                        let rent = ps.sub(&act)?;
                        add_weighted(&mut out[bidder_field(i, PERC_SURPLUS)], &weight, &ps)?;
                        add_weighted(&mut out[bidder_field(i, ACT_SURPLUS)], &weight, &act)?;
                        add_weighted(&mut out[bidder_field(i, RENT)], &weight, &rent)?;
                        add_weighted(&mut out[bidder_field(i, PERC_WIN)], &weight, &pw)?;
                        add_weighted(&mut out[bidder_field(i, ACT_WIN)], &weight, &aw)?;
                        if hidden {
                            let h = aw.mul(&combos[i][idx[i]].hidden[p])?;
                            add_weighted(&mut out[bidder_field(i, HIDDEN)], &weight, &h)?;
                        }
                        fees = fees.add(&ps)?;
                        rents = rents.add(&rent)?;
                    }
                    let via_fees = fees.add(&y2)?;
                    let via_rents = y1.add(&rents)?;
                    let residual = via_fees.sub(&via_rents)?;
                    add_weighted(&mut out[Y1], &weight, &y1)?;
                    add_weighted(&mut out[Y2], &weight, &y2)?;
                    add_weighted(&mut out[REV_FEES], &weight, &via_fees)?;
                    add_weighted(&mut out[REV_RENTS], &weight, &via_rents)?;
                    add_weighted(&mut out[RESIDUAL], &weight, &residual)?;
                }
                for k in (1..n).rev() {
                    idx[k] += 1;
                    if idx[k] < combos[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            Some(acc)
        })
        .collect();

    let mut total = vec![T::zero(); width];
    for part in partials {
        let part = part?;
        for (t, v) in total.iter_mut().zip(&part) {
            *t = t.add(v)?;
        }
    }
    Some(total)
}

pub(super) fn run(
    s: &Scenario,
    policies: &[&DisclosurePolicy],
    cfg: &EstimatorConfig,
    hidden: bool,
) -> Result<Vec<EstimateBundle>, EngineError> {
    let plans = policies.iter().map(|p| BidPlan::new(s, p)).collect::<Result<Vec<_>, _>>()?;
    let setup = setup(s, &plans, cfg, hidden)?;
    let sums: Vec<BigInt> = match convert::<i128>(&setup).and_then(|c| accumulate(&setup, &c, hidden)) {
        Some(v) => v.iter().map(ExactInt::to_big).collect(),
        None => {
            let combos = convert::<BigInt>(&setup).expect("BigInt conversion");
            accumulate(&setup, &combos, hidden).expect("BigInt arithmetic")
        }
    };

    let n = setup.n;
    let f = field_count(n);
    let tie = BigInt::from(setup.tie_scale);
    let scale_of = |t: usize| -> BigInt {
        if t < HEAD {
            return setup.value_scale.clone();
        }
        match (t - HEAD) % PER_BIDDER {
            PERC_WIN | ACT_WIN => tie.clone(),
            HIDDEN => &setup.value_scale * &tie,
            _ => setup.value_scale.clone(),
        }
    };
    let values: Vec<Vec<Rational>> = (0..setup.policies)
        .map(|p| {
            (0..f)
                .map(|t| Rational::new(sums[p * f + t].clone(), &setup.weight_total * scale_of(t)))
                .collect()
        })
        .collect();
    let bundle = |vals: Vec<Rational>| {
        let fields = vals.into_iter().map(Estimate::exact).collect();
        EstimateBundle::from_fields(Backend::ExactDiscrete, None, Some(setup.outcomes), fields, n, hidden)
    };
    let mut out: Vec<EstimateBundle> = values.iter().cloned().map(bundle).collect();
    if values.len() == 2 {
        let change = values[1].iter().zip(&values[0]).map(|(a, b)| a - b).collect();
        out.push(bundle(change));
    }
    Ok(out)
}
