//! Search over disclosure policies, the awareness trade-off for one more bidder,
//! and exact checks of the revenue results on a seeded corpus of discrete scenarios.

use std::fmt;

use num_traits::{Signed, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dist_core::rational::{self, ratio};
use crate::dist_core::{self, Distribution, InfoLevel, Law, Rational};
use crate::engine::{self, Backend, EngineError, Estimate, EstimateBundle, EstimatorConfig, PairedBundle};
use crate::fees::{self, RevenueReport};
use crate::orderstats;
use crate::scenario::{lattice, AwarenessSet, DisclosurePolicy, Scenario, ScenarioError};

/// Candidate count up to which `optimize` enumerates the whole regime.
pub const EXHAUSTIVE_CAP: u128 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DisclosureError {
    #[error("the regime has {candidates} candidate policies, above the exhaustive cap of {cap}; enable greedy search")]
    SearchSpace { candidates: String, cap: u128 },
    #[error("base policy does not have the trade-off shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyRegime {
    /// Awareness chosen per bidder; each pair keeps its externally given information.
    IndividualExogenousInfo,
    /// Common awareness; characteristic 1 keeps its given information, every
    /// other disclosed characteristic comes with none.
    PublicNoInfo,
    /// Common awareness with full information on everything disclosed.
    PublicFullInfo,
    /// Common awareness and any partition information per (bidder, characteristic).
    CommonAwarenessFreeInfo,
}

impl PolicyRegime {
    pub const ALL: [PolicyRegime; 4] = [
        PolicyRegime::IndividualExogenousInfo,
        PolicyRegime::PublicNoInfo,
        PolicyRegime::PublicFullInfo,
        PolicyRegime::CommonAwarenessFreeInfo,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PolicyRegime::IndividualExogenousInfo => "individual",
            PolicyRegime::PublicNoInfo => "public-no-info",
            PolicyRegime::PublicFullInfo => "public-full-info",
            PolicyRegime::CommonAwarenessFreeInfo => "common-free-info",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.label() == text)
    }
}

impl fmt::Display for PolicyRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Information each (bidder, characteristic) pair gets once the bidder is aware.
///
/// Pairs the policy already covers keep their level. Otherwise the level of the
/// lowest-index aware bidder is reused when it fits the pair's law; full
/// information is the fallback.
pub fn exogenous_info(s: &Scenario, p: &DisclosurePolicy) -> Vec<Vec<InfoLevel>> {
    (0..s.bidders())
        .map(|i| {
            (0..s.characteristics())
                .map(|j| {
                    if let Some(level) = p.info(i, j) {
                        return level.clone();
                    }
                    let donor = (0..s.bidders()).find_map(|k| p.info(k, j).map(|l| (k, l)));
                    match donor {
                        Some((_, InfoLevel::NoInfo)) => InfoLevel::NoInfo,
                        Some((k, level)) if level.is_full(s.law(k, j)) => InfoLevel::FullInfo,
                        Some((_, level)) => level.canonical(s.law(i, j)).unwrap_or(InfoLevel::FullInfo),
                        None => InfoLevel::FullInfo,
                    }
                })
                .collect()
        })
        .collect()
}

fn policy_from(s: &Scenario, sets: Vec<AwarenessSet>, info: &[Vec<InfoLevel>]) -> Result<DisclosurePolicy, ScenarioError> {
    DisclosurePolicy::with_levels(s, sets, |i, j| info[i][j].clone())
}

fn saturating_pow2(bits: usize) -> u128 {
    if bits >= 127 { u128::MAX } else { 1u128 << bits }
}

/// Number of set partitions of `k` items, saturating.
pub fn bell(k: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("non-empty"));
        for v in &row {
            let last = *next.last().expect("non-empty");
            next.push(last.saturating_add(*v));
        }
        row = next;
    }
    row[0]
}

/// Every information partition of one law: all set partitions of a discrete
/// support in restricted-growth order (coarsest first), or no and full
/// information for a continuous law.
pub fn partitions(d: &Distribution) -> Vec<InfoLevel> {
    let Some(k) = d.support_size() else {
        return vec![InfoLevel::NoInfo, InfoLevel::FullInfo];
    };
    let mut out = Vec::new();
    let mut labels = vec![0usize; k];
    loop {
        out.push(InfoLevel::Cells(labels.clone()).canonical(d).expect("labels fit the support"));
        // next restricted growth string
        let mut pos = k;
        loop {
            if pos <= 1 {
                return out;
            }
            pos -= 1;
            let bound = labels[..pos].iter().max().copied().unwrap_or(0) + 1;
            if labels[pos] < bound {
                labels[pos] += 1;
                for l in labels.iter_mut().skip(pos + 1) {
                    *l = 0;
                }
                break;
            }
        }
    }
}

/// Enumerates or steps through the policies a regime allows.
struct Space<'a> {
    s: &'a Scenario,
    regime: PolicyRegime,
    exogenous: Vec<Vec<InfoLevel>>,
}

impl<'a> Space<'a> {
    fn new(s: &'a Scenario, initial: &'a DisclosurePolicy, regime: PolicyRegime) -> Self {
        Self { s, regime, exogenous: exogenous_info(s, initial) }
    }

    fn extra(&self) -> usize {
        self.s.characteristics() - 1
    }

    /// Common awareness from a mask over characteristics 2..m.
    fn common(&self, mask: u64) -> AwarenessSet {
        AwarenessSet::from_bits(((mask as u32) << 1) | 1)
    }

    fn public_level(&self, i: usize, j: usize) -> InfoLevel {
        match self.regime {
            PolicyRegime::PublicFullInfo => InfoLevel::FullInfo,
            _ if j == 0 => self.exogenous[i][0].clone(),
            _ => InfoLevel::NoInfo,
        }
    }

    fn public(&self, set: AwarenessSet) -> Result<DisclosurePolicy, ScenarioError> {
        DisclosurePolicy::with_levels(self.s, vec![set; self.s.bidders()], |i, j| self.public_level(i, j))
    }

    fn pairs(&self, set: AwarenessSet) -> Vec<(usize, usize)> {
        (0..self.s.bidders()).flat_map(|i| set.iter().map(move |j| (i, j))).collect()
    }

    fn free_count(&self, set: AwarenessSet) -> u128 {
        self.pairs(set).iter().fold(1u128, |acc, &(i, j)| {
            let options = match self.s.law(i, j).support_size() {
                Some(k) => bell(k),
                None => 2,
            };
            acc.saturating_mul(options)
        })
    }

    fn size(&self) -> u128 {
        match self.regime {
            PolicyRegime::IndividualExogenousInfo => saturating_pow2(self.s.bidders() * self.extra()),
            PolicyRegime::PublicNoInfo | PolicyRegime::PublicFullInfo => saturating_pow2(self.extra()),
            PolicyRegime::CommonAwarenessFreeInfo => {
                lattice(self.s.characteristics()).into_iter().fold(0u128, |acc, a| acc.saturating_add(self.free_count(a)))
            }
        }
    }

    fn all(&self) -> Result<Vec<DisclosurePolicy>, ScenarioError> {
        let (n, extra) = (self.s.bidders(), self.extra());
        match self.regime {
            PolicyRegime::IndividualExogenousInfo => (0..1u64 << (n * extra))
                .map(|mask| {
                    let sets = (0..n)
                        .map(|i| {
                            let bits = (mask >> (i * extra)) & ((1u64 << extra) - 1);
                            self.common(bits)
                        })
                        .collect();
                    policy_from(self.s, sets, &self.exogenous)
                })
                .collect(),
            PolicyRegime::PublicNoInfo | PolicyRegime::PublicFullInfo => {
                (0..1u64 << extra).map(|mask| self.public(self.common(mask))).collect()
            }
            PolicyRegime::CommonAwarenessFreeInfo => {
                let mut out = Vec::new();
                for mask in 0..1u64 << extra {
                    out.extend(self.free_at(self.common(mask))?);
                }
                Ok(out)
            }
        }
    }

    /// Every partition assignment at common awareness `set`; the last pair varies fastest.
    fn free_at(&self, set: AwarenessSet) -> Result<Vec<DisclosurePolicy>, ScenarioError> {
        let n = self.s.bidders();
        let pairs = self.pairs(set);
        let options: Vec<Vec<InfoLevel>> = pairs.iter().map(|&(i, j)| partitions(self.s.law(i, j))).collect();
        let mut digits = vec![0usize; pairs.len()];
        let mut out = Vec::new();
        loop {
            let mut info = vec![vec![InfoLevel::NoInfo; self.s.characteristics()]; n];
            for (k, &(i, j)) in pairs.iter().enumerate() {
                info[i][j] = options[k][digits[k]].clone();
            }
            out.push(policy_from(self.s, vec![set; n], &info)?);
            let mut k = pairs.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < options[k].len() {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    fn start(&self) -> Result<DisclosurePolicy, ScenarioError> {
        let base = vec![AwarenessSet::base(); self.s.bidders()];
        match self.regime {
            PolicyRegime::IndividualExogenousInfo => policy_from(self.s, base, &self.exogenous),
            PolicyRegime::CommonAwarenessFreeInfo => DisclosurePolicy::full_info(self.s, base),
            _ => self.public(AwarenessSet::base()),
        }
    }

    /// Policies one disclosure step beyond `p`.
    fn neighbours(&self, p: &DisclosurePolicy) -> Result<Vec<DisclosurePolicy>, ScenarioError> {
        let (n, m) = (self.s.bidders(), self.s.characteristics());
        let mut out = Vec::new();
        match self.regime {
            PolicyRegime::IndividualExogenousInfo => {
                for i in 0..n {
                    for j in 1..m {
                        if !p.awareness(i).contains(j) {
                            let mut sets = p.awareness_sets().to_vec();
                            sets[i] = sets[i].with(j);
                            out.push(policy_from(self.s, sets, &self.exogenous)?);
                        }
                    }
                }
            }
            PolicyRegime::PublicNoInfo | PolicyRegime::PublicFullInfo => {
                let set = p.awareness(0);
                for j in (1..m).filter(|&j| !set.contains(j)) {
                    out.push(self.public(set.with(j))?);
                }
            }
            PolicyRegime::CommonAwarenessFreeInfo => {
                let set = p.awareness(0);
                let current = |i: usize, j: usize| p.info(i, j).cloned().unwrap_or(InfoLevel::FullInfo);
                for j in (1..m).filter(|&j| !set.contains(j)) {
                    out.push(DisclosurePolicy::with_levels(self.s, vec![set.with(j); n], current)?);
                }
                for (i, j) in self.pairs(set) {
                    if !current(i, j).is_full(self.s.law(i, j)) {
                        out.push(DisclosurePolicy::with_levels(self.s, vec![set; n], |a, b| {
                            if (a, b) == (i, j) { InfoLevel::FullInfo } else { current(a, b) }
                        })?);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub estimator: EstimatorConfig,
    /// Fall back to greedy search when the regime is too large to enumerate.
    pub greedy: bool,
}

impl OptimizeConfig {
    pub fn new(estimator: EstimatorConfig) -> Self {
        Self { estimator, greedy: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub policy: DisclosurePolicy,
    pub revenue: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub regime: PolicyRegime,
    pub policy: DisclosurePolicy,
    pub report: RevenueReport,
    /// `true` when every policy of the regime was evaluated.
    pub exhaustive: bool,
    /// Every evaluated policy, in evaluation order.
    pub trace: Vec<TraceEntry>,
}

/// Orders revenues; exact values compare exactly.
fn compare(a: &Estimate, b: &Estimate) -> std::cmp::Ordering {
    match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => x.cmp(y),
        _ => a.value.total_cmp(&b.value),
    }
}

/// Index of the best entry: highest revenue, then fewest aware pairs, then earliest.
fn best_index(trace: &[TraceEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, e) in trace.iter().enumerate() {
        best = match best {
            None => Some(k),
            Some(b) => {
                let current = &trace[b];
                let better = match compare(&e.revenue, &current.revenue) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => e.policy.aware_pairs() < current.policy.aware_pairs(),
                };
                Some(if better { k } else { b })
            }
        };
    }
    best
}

fn evaluate_all(
    s: &Scenario,
    policies: Vec<DisclosurePolicy>,
    cfg: &EstimatorConfig,
) -> Result<Vec<TraceEntry>, EngineError> {
    policies
        .into_par_iter()
        .map(|policy| {
            let revenue = engine::estimate(s, &policy, cfg)?.revenue_via_fees;
            Ok(TraceEntry { policy, revenue })
        })
        .collect()
}

/// Revenue-maximizing policy of a regime. `initial` supplies the externally given
/// information levels.
pub fn optimize(
    s: &Scenario,
    initial: &DisclosurePolicy,
    regime: PolicyRegime,
    cfg: &OptimizeConfig,
) -> Result<OptimizeResult, DisclosureError> {
    let space = Space::new(s, initial, regime);
    let size = space.size();
    let exhaustive = size <= EXHAUSTIVE_CAP;
    let trace = if exhaustive {
        evaluate_all(s, space.all()?, &cfg.estimator)?
    } else if cfg.greedy {
        greedy(s, &space, &cfg.estimator)?
    } else {
        return Err(DisclosureError::SearchSpace { candidates: size.to_string(), cap: EXHAUSTIVE_CAP });
    };
    let policy = if exhaustive {
        trace[best_index(&trace).expect("at least one candidate")].policy.clone()
    } else {
        trace.last().expect("greedy evaluates its start").policy.clone()
    };
    let report = fees::revenue(s, &policy, &cfg.estimator)?;
    Ok(OptimizeResult { regime, policy, report, exhaustive, trace })
}

/// Adds one disclosure step at a time while revenue strictly improves. The last
/// trace entry is the accepted policy.
fn greedy(s: &Scenario, space: &Space, cfg: &EstimatorConfig) -> Result<Vec<TraceEntry>, DisclosureError> {
    let mut trace = evaluate_all(s, vec![space.start()?], cfg)?;
    let mut current = trace[0].clone();
    loop {
        let round = evaluate_all(s, space.neighbours(&current.policy)?, cfg)?;
        let best = best_index(&round).map(|k| round[k].clone());
        trace.extend(round);
        match best {
            Some(b) if compare(&b.revenue, &current.revenue).is_gt() => current = b,
            _ => break,
        }
    }
    trace.push(current);
    Ok(trace)
}

/// Greedy search even when the regime is small enough to enumerate.
pub fn optimize_greedy(
    s: &Scenario,
    initial: &DisclosurePolicy,
    regime: PolicyRegime,
    cfg: &EstimatorConfig,
) -> Result<OptimizeResult, DisclosureError> {
    let space = Space::new(s, initial, regime);
    let trace = greedy(s, &space, cfg)?;
    let policy = trace.last().expect("non-empty").policy.clone();
    let report = fees::revenue(s, &policy, cfg)?;
    Ok(OptimizeResult { regime, policy, report, exhaustive: false, trace })
}

/// Every policy of the regime, in canonical order.
pub fn regime_policies(
    s: &Scenario,
    initial: &DisclosurePolicy,
    regime: PolicyRegime,
) -> Result<Vec<DisclosurePolicy>, DisclosureError> {
    let space = Space::new(s, initial, regime);
    let size = space.size();
    if size > EXHAUSTIVE_CAP {
        return Err(DisclosureError::SearchSpace { candidates: size.to_string(), cap: EXHAUSTIVE_CAP });
    }
    Ok(space.all()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Raise,
    Keep,
}

impl Decision {
    pub fn label(self) -> &'static str {
        match self {
            Decision::Raise => "raise",
            Decision::Keep => "keep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffBreakdown {
    /// 0-based bidder who would become aware; equals the bidder count when none is left.
    pub target: usize,
    /// 0-based characteristic.
    pub characteristic: usize,
    pub delta_first_order_stat: Estimate,
    /// Change in the rents of every other bidder.
    pub delta_rents_remaining_unaware: Estimate,
    /// Rent the target pays now and no longer pays once aware.
    pub lost_rent_newly_aware: Estimate,
    pub decision: Decision,
    pub revenue_before: Estimate,
    pub revenue_after: Estimate,
}

impl TradeoffBreakdown {
    /// `revenue_after - revenue_before`.
    pub fn revenue_change(&self) -> Estimate {
        difference(&self.revenue_after, &self.revenue_before)
    }
}

fn zero(backend: Backend) -> Estimate {
    match backend {
        Backend::ExactDiscrete => Estimate::exact(Rational::zero()),
        Backend::MonteCarlo => Estimate::sampled(0.0, Some(0.0)),
    }
}

fn sum<'a>(items: impl Iterator<Item = &'a Estimate>, backend: Backend) -> Estimate {
    items.fold(zero(backend), |acc, e| match (&acc.exact, &e.exact) {
        (Some(a), Some(b)) => Estimate::exact(a + b),
        _ => Estimate::sampled(acc.value + e.value, Some(acc.se().hypot(e.se()))),
    })
}

fn negate(e: &Estimate) -> Estimate {
    match &e.exact {
        Some(x) => Estimate::exact(-x),
        None => Estimate::sampled(-e.value, e.std_error),
    }
}

fn difference(a: &Estimate, b: &Estimate) -> Estimate {
    match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => Estimate::exact(x - y),
        _ => Estimate::sampled(a.value - b.value, Some(a.se().hypot(b.se()))),
    }
}

fn exceeds(a: &Estimate, b: &Estimate) -> bool {
    compare(a, b).is_gt()
}

/// Shared part of an awareness policy: bidders `0..k` are aware of `M' ∪ {ℓ}`,
/// the others of `M'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TradeoffShape {
    pub common: AwarenessSet,
    pub characteristic: usize,
    pub aware: usize,
}

/// Checks that `p` has the trade-off shape for characteristic `l` (0-based).
pub fn tradeoff_shape(p: &DisclosurePolicy, l: usize) -> Result<TradeoffShape, DisclosureError> {
    if l == 0 {
        return Err(DisclosureError::Shape("characteristic 1 is always disclosed".into()));
    }
    let common = p.awareness(0).without(l);
    let aware = p.awareness_sets().iter().take_while(|a| a.contains(l)).count();
    for (i, a) in p.awareness_sets().iter().enumerate() {
        if a.without(l) != common {
            return Err(DisclosureError::Shape(format!(
                "bidder {} is aware of {} but bidder 1 of {} apart from characteristic {}",
                i + 1,
                a.without(l),
                common,
                l + 1
            )));
        }
        if i >= aware && a.contains(l) {
            return Err(DisclosureError::Shape(format!(
                "bidders aware of characteristic {} must come first, but bidder {} is aware and bidder {} is not",
                l + 1,
                i + 1,
                aware + 1
            )));
        }
    }
    Ok(TradeoffShape { common, characteristic: l, aware })
}

fn breakdown(target: usize, l: usize, pair: &PairedBundle) -> TradeoffBreakdown {
    let backend = pair.change.backend;
    let c = &pair.change;
    let delta_first_order_stat = c.first_order.clone();
    let delta_rents_remaining_unaware =
        sum(c.bidders.iter().enumerate().filter(|&(i, _)| i != target).map(|(_, b)| &b.rent), backend);
    let lost_rent_newly_aware = negate(&c.bidders[target].rent);
    let gain = sum([&delta_first_order_stat, &delta_rents_remaining_unaware].into_iter(), backend);
    let decision = if exceeds(&gain, &lost_rent_newly_aware) { Decision::Raise } else { Decision::Keep };
    TradeoffBreakdown {
        target,
        characteristic: l,
        delta_first_order_stat,
        delta_rents_remaining_unaware,
        lost_rent_newly_aware,
        decision,
        revenue_before: pair.before.revenue_via_fees.clone(),
        revenue_after: pair.after.revenue_via_fees.clone(),
    }
}

/// The base policy with `target` also aware of `l`, at its externally given level.
fn raise_one(s: &Scenario, base: &DisclosurePolicy, target: usize, l: usize) -> Result<DisclosurePolicy, ScenarioError> {
    let info = exogenous_info(s, base);
    let mut sets = base.awareness_sets().to_vec();
    sets[target] = sets[target].with(l);
    policy_from(s, sets, &info)
}

/// Components of the revenue change from making bidder `target` aware of `l`
/// (both 0-based), estimated on common random numbers. `base` must have bidders
/// `0..target` aware of `M' ∪ {l}` and the rest aware of `M'`.
pub fn check_tradeoff(
    s: &Scenario,
    base: &DisclosurePolicy,
    target: usize,
    l: usize,
    cfg: &EstimatorConfig,
) -> Result<TradeoffBreakdown, DisclosureError> {
    if l >= s.characteristics() {
        return Err(ScenarioError::UnknownCharacteristic(l + 1).into());
    }
    let shape = tradeoff_shape(base, l)?;
    if target != shape.aware {
        return Err(DisclosureError::Shape(format!(
            "{} bidder(s) are aware of characteristic {}, so the next bidder to raise is {}, not {}",
            shape.aware,
            l + 1,
            shape.aware + 1,
            target + 1
        )));
    }
    if target == s.bidders() {
        let revenue = fees::revenue(s, base, cfg)?.total_revenue;
        let z = zero(cfg.backend);
        return Ok(TradeoffBreakdown {
            target,
            characteristic: l,
            delta_first_order_stat: z.clone(),
            delta_rents_remaining_unaware: z.clone(),
            lost_rent_newly_aware: z,
            decision: Decision::Keep,
            revenue_before: revenue.clone(),
            revenue_after: revenue,
        });
    }
    let after = raise_one(s, base, target, l)?;
    let pair = engine::estimate_paired(s, base, &after, cfg)?;
    Ok(breakdown(target, l, &pair))
}

/// Bounds of the seeded random corpus of discrete scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub count: usize,
    pub seed: u64,
    pub max_bidders: usize,
    pub max_characteristics: usize,
    pub max_atoms: usize,
    /// Inclusive range of the integer support points.
    pub values: (i64, i64),
    /// Largest joint-outcome count times policy count for one full-partition sweep.
    pub partition_work_cap: u128,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            count: 100,
            seed: 0,
            max_bidders: 3,
            max_characteristics: 3,
            max_atoms: 3,
            values: (-3, 4),
            partition_work_cap: 200_000,
        }
    }
}

/// One corpus entry with the information level of each characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScenario {
    pub id: usize,
    pub scenario: Scenario,
    pub info: Vec<InfoLevel>,
}

impl CorpusScenario {
    /// Policy with the given awareness and the corpus information levels.
    pub fn policy(&self, sets: Vec<AwarenessSet>) -> DisclosurePolicy {
        DisclosurePolicy::with_levels(&self.scenario, sets, |_, j| self.info[j].clone()).expect("corpus levels fit")
    }
}

/// Seeded corpus: 2..=max bidders and characteristics, 2..=max atoms per law with
/// distinct integer values and weights 1..=3, full information on characteristic 1
/// and a fair coin between no and full information on each other characteristic.
pub fn corpus(cfg: &CorpusConfig) -> Vec<CorpusScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.values;
    let span = (hi - lo + 1).max(2) as usize;
    let max_atoms = cfg.max_atoms.clamp(2, span);
    (0..cfg.count)
        .map(|id| {
            let n = rng.gen_range(2..=cfg.max_bidders.max(2));
            let m = rng.gen_range(2..=cfg.max_characteristics.max(2));
            let laws = (0..n * m)
                .map(|_| {
                    let k = rng.gen_range(2..=max_atoms);
                    let mut values: Vec<i64> = sample(&mut rng, span, k).into_iter().map(|v| lo + v as i64).collect();
                    values.sort_unstable();
                    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
                    let total: i64 = weights.iter().sum();
                    let atoms = values.iter().zip(&weights).map(|(&v, &w)| (rational::int(v), ratio(w, total))).collect();
                    Distribution::discrete(atoms).expect("distinct sorted atoms")
                })
                .collect();
            let info = (0..m)
                .map(|j| if j == 0 || rng.gen_bool(0.5) { InfoLevel::FullInfo } else { InfoLevel::NoInfo })
                .collect();
            CorpusScenario { id, scenario: Scenario::new(n, m, laws).expect("corpus shape"), info }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Claim {
    /// Making bidder 1 aware of a characteristic with positive mean raises revenue.
    Prop2,
    /// ... and raises the expected first order statistic.
    Lemma3,
    /// ... and gives the others positive rents.
    Lemma4,
    /// The trade-off decision agrees with the direct revenue comparison.
    Prop3,
    /// Raising bidder k+1 with positive mean raises the first order statistic.
    Lemma5,
    /// ... and raises the rents of the bidders still unaware.
    Lemma6,
    /// Bidder k+1 pays a positive rent when the aware bidders' means are positive.
    Lemma7,
    /// Public disclosure without information shifts revenue by the mean.
    Prop4,
    /// Public full-information disclosure with negative expected maximum lowers revenue.
    Prop5If,
    /// Full information is revenue-maximal at common awareness.
    Prop6,
    /// Equal awareness means zero rents and revenue equal to the first order statistic.
    Cor1,
}

impl Claim {
    pub const ALL: [Claim; 11] = [
        Claim::Prop2,
        Claim::Lemma3,
        Claim::Lemma4,
        Claim::Prop3,
        Claim::Lemma5,
        Claim::Lemma6,
        Claim::Lemma7,
        Claim::Prop4,
        Claim::Prop5If,
        Claim::Prop6,
        Claim::Cor1,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Claim::Prop2 => "prop2",
            Claim::Lemma3 => "lemma3",
            Claim::Lemma4 => "lemma4",
            Claim::Prop3 => "prop3",
            Claim::Lemma5 => "lemma5",
            Claim::Lemma6 => "lemma6",
            Claim::Lemma7 => "lemma7",
            Claim::Prop4 => "prop4",
            Claim::Prop5If => "prop5-if",
            Claim::Prop6 => "prop6",
            Claim::Cor1 => "cor1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// A Monte Carlo margin within four standard errors of the boundary.
    Inconclusive,
}

/// Strict positivity of an estimate: exact values compare exactly, sampled ones
/// need a margin above four standard errors.
pub fn strictly_positive(e: &Estimate) -> Verdict {
    match &e.exact {
        Some(x) if x.is_positive() => Verdict::Holds,
        Some(_) => Verdict::Fails,
        None if e.value > 4.0 * e.se() => Verdict::Holds,
        None if e.value < -4.0 * e.se() => Verdict::Fails,
        None => Verdict::Inconclusive,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCheck {
    pub claim: Claim,
    pub scenario: usize,
    /// Common awareness, characteristic and bidder count of the instance.
    pub setup: String,
    pub hypothesis: bool,
    /// Whether the conclusion holds, regardless of the hypothesis.
    pub holds: bool,
    /// The quantity the conclusion is about: strict claims need it positive,
    /// identities need it zero and the Prop6 bound needs it non-negative.
    pub margin: Rational,
}

impl ClaimCheck {
    pub fn failed(&self) -> bool {
        self.hypothesis && !self.holds
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClaimSummary {
    pub instances: usize,
    pub hypothesis_satisfied: usize,
    pub failures: usize,
    /// Smallest margin over hypothesis-satisfied instances.
    pub min_margin: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub scenarios: usize,
    pub checks: Vec<ClaimCheck>,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &ClaimCheck> {
        self.checks.iter().filter(|c| c.failed())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn summary(&self, claim: Claim) -> ClaimSummary {
        let mut out = ClaimSummary::default();
        for c in self.checks.iter().filter(|c| c.claim == claim) {
            out.instances += 1;
            if c.hypothesis {
                out.hypothesis_satisfied += 1;
                out.failures += usize::from(!c.holds);
                out.min_margin = Some(match out.min_margin.take() {
                    Some(m) if m <= c.margin => m,
                    _ => c.margin.clone(),
                });
            }
        }
        out
    }
}

fn exact(e: &Estimate) -> Rational {
    e.exact.clone().expect("exact backend")
}

fn mean_of(d: &Distribution) -> Rational {
    dist_core::mean_exact(d).expect("discrete law")
}

struct Checker<'a> {
    c: &'a CorpusScenario,
    cfg: EstimatorConfig,
    partition_cap: u128,
    out: Vec<ClaimCheck>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, claim: Claim, setup: &str, hypothesis: bool, holds: bool, margin: Rational) {
        self.out.push(ClaimCheck { claim, scenario: self.c.id, setup: setup.to_string(), hypothesis, holds, margin });
    }

    fn strict(&mut self, claim: Claim, setup: &str, hypothesis: bool, margin: Rational) {
        let holds = margin.is_positive();
        self.push(claim, setup, hypothesis, holds, margin);
    }

    fn paired(&self, s: &Scenario, a: &DisclosurePolicy, b: &DisclosurePolicy) -> Result<PairedBundle, EngineError> {
        engine::estimate_paired(s, a, b, &self.cfg)
    }

    fn cor1(&mut self, setup: &str, b: &EstimateBundle) {
        let rents: Rational = b.bidders.iter().map(|x| rational::abs(&exact(&x.rent))).sum();
        let margin = rents + rational::abs(&(exact(&b.revenue_via_fees) - exact(&b.first_order)));
        let holds = margin.is_zero();
        self.push(Claim::Cor1, setup, true, holds, margin);
    }

    fn run(&mut self) -> Result<(), EngineError> {
        let s = &self.c.scenario;
        let (n, m) = (s.bidders(), s.characteristics());
        let full = s.full_set();
        for common in lattice(m) {
            let setup = format!("M'={common}");
            let base = self.c.policy(vec![common; n]);
            let b = engine::estimate(s, &base, &self.cfg)?;
            self.cor1(&setup, &b);
            if common == full {
                continue;
            }
            for l in (1..m).filter(|&l| !common.contains(l)) {
                self.awareness_step(common, l)?;
                self.public_steps(common, l)?;
            }
        }
        for common in lattice(m) {
            self.prop6(common)?;
        }
        Ok(())
    }

    fn awareness_step(&mut self, common: AwarenessSet, l: usize) -> Result<(), EngineError> {
        let s = &self.c.scenario;
        let n = s.bidders();
        let raised = common.with(l);
        let mu: Vec<Rational> = (0..n).map(|i| mean_of(s.law(i, l))).collect();
        let sets = |k: usize| (0..n).map(|i| if i < k { raised } else { common }).collect::<Vec<_>>();

        let before = self.c.policy(sets(0));
        let after = self.c.policy(sets(1));
        let pair = self.paired(s, &before, &after)?;
        let setup = format!("M'={common} l={}", l + 1);
        let hyp = mu[0].is_positive();
        self.strict(Claim::Prop2, &setup, hyp, exact(&pair.change.revenue_via_fees));
        self.strict(Claim::Lemma3, &setup, hyp, exact(&pair.change.first_order));
        let others: Rational = pair.after.bidders.iter().skip(1).map(|b| exact(&b.rent)).sum();
        self.strict(Claim::Lemma4, &setup, hyp, others);

        for k in 1..n {
            let before = self.c.policy(sets(k));
            let after = self.c.policy(sets(k + 1));
            let pair = self.paired(s, &before, &after)?;
            let t = breakdown(k, l, &pair);
            let setup = format!("M'={common} l={} k={k}", l + 1);

            let change = exact(&pair.change.revenue_via_fees);
            let components = exact(&t.delta_first_order_stat) + exact(&t.delta_rents_remaining_unaware)
                - exact(&t.lost_rent_newly_aware);
            let margin = &change - components;
            let consistent = (t.decision == Decision::Raise) == change.is_positive();
            self.push(Claim::Prop3, &setup, true, margin.is_zero() && consistent, margin);

            let hyp5 = mu[k].is_positive();
            self.strict(Claim::Lemma5, &setup, hyp5, exact(&t.delta_first_order_stat));
            let remaining: Rational = (k + 1..n)
                .map(|i| exact(&pair.before.bidders[i].actual_surplus) - exact(&pair.after.bidders[i].actual_surplus))
                .sum();
            self.strict(Claim::Lemma6, &setup, hyp5 && k + 1 < n, remaining);
            let hyp7 = mu[..k].iter().all(|x| x.is_positive());
            self.strict(Claim::Lemma7, &setup, hyp7, exact(&pair.before.bidders[k].rent));
        }
        Ok(())
    }

    fn public_steps(&mut self, common: AwarenessSet, l: usize) -> Result<(), EngineError> {
        let s = &self.c.scenario;
        let n = s.bidders();
        let raised = common.with(l);
        let setup = format!("M'={common} l={}", l + 1);

        // identical laws for characteristic l, no information on it
        let laws = (0..n)
            .flat_map(|i| (0..s.characteristics()).map(move |j| (i, j)))
            .map(|(i, j)| if j == l { s.law(0, l).clone() } else { s.law(i, j).clone() })
            .collect();
        let iid = Scenario::new(n, s.characteristics(), laws).expect("same shape");
        let level = |_: usize, j: usize| if j == l { InfoLevel::NoInfo } else { self.c.info[j].clone() };
        let before = DisclosurePolicy::with_levels(&iid, vec![common; n], level).expect("levels fit");
        let after = DisclosurePolicy::with_levels(&iid, vec![raised; n], level).expect("levels fit");
        let pair = self.paired(&iid, &before, &after)?;
        let mu = mean_of(s.law(0, l));
        let change = exact(&pair.change.revenue_via_fees);
        let margin = &change - &mu;
        let consistent = change.is_positive() == mu.is_positive();
        self.push(Claim::Prop4, &setup, true, margin.is_zero() && consistent, margin);

        let before = DisclosurePolicy::full_info(s, vec![common; n]).expect("full information");
        let after = DisclosurePolicy::full_info(s, vec![raised; n]).expect("full information");
        let pair = self.paired(s, &before, &after)?;
        let laws = (0..n).map(|i| Law::from(s.law(i, l))).collect();
        let top = orderstats::order_cdf(laws, 1).expect("non-empty").expected_exact().expect("discrete");
        self.strict(Claim::Prop5If, &setup, top.is_negative(), -exact(&pair.change.revenue_via_fees));
        Ok(())
    }

    fn prop6(&mut self, common: AwarenessSet) -> Result<(), EngineError> {
        let s = &self.c.scenario;
        let n = s.bidders();
        let full = DisclosurePolicy::full_info(s, vec![common; n]).expect("full information");
        let space = Space::new(s, &full, PolicyRegime::CommonAwarenessFreeInfo);
        let outcomes = engine::exact_cap_check(s, &full).expect("discrete");
        if space.free_count(common).saturating_mul(outcomes) > self.partition_cap {
            return Ok(());
        }
        let best = exact(&engine::estimate(s, &full, &self.cfg)?.revenue_via_fees);
        let mut margin: Option<Rational> = None;
        for p in space.free_at(common).expect("partitions fit") {
            let gap = &best - exact(&engine::estimate(s, &p, &self.cfg)?.revenue_via_fees);
            if margin.as_ref().map_or(true, |m| gap < *m) {
                margin = Some(gap);
            }
        }
        let margin = margin.unwrap_or_else(Rational::zero);
        self.push(Claim::Prop6, &format!("M'={common}"), true, !margin.is_negative(), margin);
        Ok(())
    }
}

fn check_scenario(c: &CorpusScenario, partition_cap: u128) -> Vec<ClaimCheck> {
    let mut checker = Checker { c, cfg: EstimatorConfig::exact(), partition_cap, out: Vec::new() };
    checker.run().expect("corpus scenarios are small and discrete");
    checker.out
}

/// Exact checks of every claim on every corpus scenario, in corpus order.
pub fn verify_suite(cfg: &CorpusConfig) -> VerificationReport {
    verify_corpus(&corpus(cfg), cfg.partition_work_cap)
}

pub fn verify_corpus(corpus: &[CorpusScenario], partition_cap: u128) -> VerificationReport {
    let checks: Vec<Vec<ClaimCheck>> = corpus.par_iter().map(|c| check_scenario(c, partition_cap)).collect();
    VerificationReport { scenarios: corpus.len(), checks: checks.into_iter().flatten().collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleClaim {
    /// Revenue rises although the disclosed characteristic has negative mean.
    Prop2Converse,
    /// Public full-information disclosure does not raise revenue although the
    /// expected maximum of the characteristic is non-negative.
    Prop5Converse,
}

impl CounterexampleClaim {
    pub fn label(self) -> &'static str {
        match self {
            CounterexampleClaim::Prop2Converse => "prop2-converse",
            CounterexampleClaim::Prop5Converse => "prop5-converse",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        [CounterexampleClaim::Prop2Converse, CounterexampleClaim::Prop5Converse].into_iter().find(|c| c.label() == text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Bidder 1 alone becomes aware.
    FirstBidder,
    /// Every bidder becomes aware with full information.
    PublicFullInfo,
}

impl Move {
    pub fn label(self) -> &'static str {
        match self {
            Move::FirstBidder => "first-bidder",
            Move::PublicFullInfo => "public-full-info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub scenario: usize,
    pub setup: String,
    pub step: Move,
    /// Mean of the disclosed characteristic for bidder 1.
    pub mean: Rational,
    /// Expected maximum of the disclosed characteristic across bidders.
    pub expected_max: Rational,
    pub revenue_change: Rational,
    pub first_order_change: Rational,
}

/// Awareness steps of one discrete scenario whose revenue change contradicts the
/// claim's converse. `Prop2Converse` reports every step whose revenue change and
/// bidder-1 mean differ in sign (`revenue_change > 0` with `mean <= 0`, or
/// `revenue_change <= 0` with `mean > 0`).
pub fn search_scenario(claim: CounterexampleClaim, c: &CorpusScenario) -> Result<Vec<Counterexample>, EngineError> {
    let s = &c.scenario;
    let (n, m) = (s.bidders(), s.characteristics());
    let cfg = EstimatorConfig::exact();
    let mut out = Vec::new();
    for common in lattice(m).into_iter().filter(|a| *a != s.full_set()) {
        for l in (1..m).filter(|&l| !common.contains(l)) {
            let raised = common.with(l);
            let laws = (0..n).map(|i| Law::from(s.law(i, l))).collect();
            let expected_max =
                orderstats::order_cdf(laws, 1).expect("non-empty").expected_exact().expect("discrete law");
            let mean = mean_of(s.law(0, l));
            let steps = match claim {
                CounterexampleClaim::Prop2Converse => vec![Move::FirstBidder, Move::PublicFullInfo],
                CounterexampleClaim::Prop5Converse => vec![Move::PublicFullInfo],
            };
            for step in steps {
                let (before, after) = match step {
                    Move::FirstBidder => {
                        let sets = (0..n).map(|i| if i == 0 { raised } else { common }).collect();
                        (c.policy(vec![common; n]), c.policy(sets))
                    }
                    Move::PublicFullInfo => (
                        DisclosurePolicy::full_info(s, vec![common; n]).expect("full information"),
                        DisclosurePolicy::full_info(s, vec![raised; n]).expect("full information"),
                    ),
                };
                let pair = engine::estimate_paired(s, &before, &after, &cfg)?;
                let revenue_change = exact(&pair.change.revenue_via_fees);
                let found = match claim {
                    CounterexampleClaim::Prop2Converse => revenue_change.is_positive() != mean.is_positive(),
                    CounterexampleClaim::Prop5Converse => !expected_max.is_negative() && !revenue_change.is_positive(),
                };
                if found {
                    out.push(Counterexample {
                        scenario: c.id,
                        setup: format!("M'={common} l={}", l + 1),
                        step,
                        mean: mean.clone(),
                        expected_max: expected_max.clone(),
                        revenue_change,
                        first_order_change: exact(&pair.change.first_order),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// [`search_scenario`] over the seeded corpus, in corpus order.
pub fn counterexample_search(claim: CounterexampleClaim, cfg: &CorpusConfig) -> Vec<Counterexample> {
    let found: Vec<Vec<Counterexample>> = corpus(cfg)
        .par_iter()
        .map(|c| search_scenario(claim, c).expect("corpus scenarios are small and discrete"))
        .collect();
    found.into_iter().flatten().collect()
}

/// Wraps a discrete scenario and policy as a corpus entry. Each characteristic
/// takes the information level of its lowest-index aware bidder, full information
/// when nobody is aware of it.
pub fn as_corpus_entry(id: usize, s: &Scenario, p: &DisclosurePolicy) -> CorpusScenario {
    let info = (0..s.characteristics())
        .map(|j| match (0..s.bidders()).find_map(|i| p.info(i, j).map(|l| (i, l))) {
            Some((_, InfoLevel::NoInfo)) => InfoLevel::NoInfo,
            Some((i, l)) if !l.is_full(s.law(i, j)) => l.clone(),
            _ => InfoLevel::FullInfo,
        })
        .collect();
    CorpusScenario { id, scenario: s.clone(), info }
}
