//! Draws, bids, second-price settlement and expectation estimates.
//!
//! Both backends produce the same per-outcome quantities: the first and second
//! order statistics of the estimated valuations under full awareness, and for each
//! bidder its surplus and win share as it perceives them (view `M^i`) and as they
//! actually are (view `M`). Win shares split ties evenly.

mod exact;
mod montecarlo;
pub mod stats;

use thiserror::Error;

use crate::dist_core::{self, DistError, Rational, SignalMap};
use crate::rng::RandomStream;
use crate::scenario::{perceive, AwarenessSet, DisclosurePolicy, Perspective, Scenario};

/// Draws per Monte Carlo chunk. Fixed so results do not depend on the worker count.
pub const CHUNK: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("a second-price auction needs at least 2 bidders (got {0})")]
    TooFewBidders(usize),
    #[error("policy has {policy} bidders but the scenario has {scenario}")]
    PolicyMismatch { policy: usize, scenario: usize },
    #[error("bidder {bidder}, characteristic {characteristic}: exact enumeration needs a discrete law")]
    NotEnumerable { bidder: usize, characteristic: usize },
    #[error("exact enumeration needs {size} outcomes, above the cap of {cap}")]
    EnumerationCap { size: String, cap: u128 },
    #[error("Monte Carlo needs at least 2 samples")]
    NoSamples,
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    MonteCarlo,
    ExactDiscrete,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::MonteCarlo => "mc",
            Backend::ExactDiscrete => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub backend: Backend,
    pub report_standard_errors: bool,
    /// Largest number of joint outcomes the exact backend will enumerate.
    pub enumeration_cap: u128,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 0,
            backend: Backend::MonteCarlo,
            report_standard_errors: true,
            enumeration_cap: 10_000_000,
        }
    }
}

impl EstimatorConfig {
    pub fn exact() -> Self {
        Self { backend: Backend::ExactDiscrete, ..Self::default() }
    }

    pub fn monte_carlo(n_samples: u64, seed: u64) -> Self {
        Self { n_samples, seed, ..Self::default() }
    }
}

/// One estimated expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Standard error of a Monte Carlo mean.
    pub std_error: Option<f64>,
    /// Exact value from enumeration.
    pub exact: Option<Rational>,
}

impl Estimate {
    pub fn exact(r: Rational) -> Self {
        Self { value: dist_core::rational::to_f64(&r), std_error: None, exact: Some(r) }
    }

    pub fn sampled(value: f64, std_error: Option<f64>) -> Self {
        Self { value, std_error, exact: None }
    }

    /// Standard error, zero for exact values.
    pub fn se(&self) -> f64 {
        self.std_error.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidderEstimates {
    /// Expected surplus under the bidder's own view `M^i`: its entry fee.
    pub perceived_surplus: Estimate,
    /// Expected surplus under the full view `M`.
    pub actual_surplus: Estimate,
    /// `perceived_surplus - actual_surplus`.
    pub rent: Estimate,
    pub perceived_win: Estimate,
    pub actual_win: Estimate,
    /// Expected value of the characteristics outside `M^i`, collected on winning.
    pub hidden_on_win: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateBundle {
    pub backend: Backend,
    /// Draws used by Monte Carlo.
    pub samples: Option<u64>,
    /// Joint outcomes enumerated by the exact backend.
    pub outcomes: Option<u128>,
    pub first_order: Estimate,
    pub second_order: Estimate,
    /// Sum of fees plus the expected price.
    pub revenue_via_fees: Estimate,
    /// Expected first order statistic plus the sum of rents.
    pub revenue_via_rents: Estimate,
    /// Difference of the two revenue routes.
    pub residual: Estimate,
    pub bidders: Vec<BidderEstimates>,
}

/// Two policies evaluated on the same draws, with per-draw differences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedBundle {
    pub before: EstimateBundle,
    pub after: EstimateBundle,
    /// `after - before`, with standard errors of the paired differences.
    pub change: EstimateBundle,
}

// Per-outcome field layout shared by both backends.
pub(crate) const Y1: usize = 0;
pub(crate) const Y2: usize = 1;
pub(crate) const REV_FEES: usize = 2;
pub(crate) const REV_RENTS: usize = 3;
pub(crate) const RESIDUAL: usize = 4;
pub(crate) const HEAD: usize = 5;
pub(crate) const PER_BIDDER: usize = 6;
pub(crate) const PERC_SURPLUS: usize = 0;
pub(crate) const ACT_SURPLUS: usize = 1;
pub(crate) const RENT: usize = 2;
pub(crate) const PERC_WIN: usize = 3;
pub(crate) const ACT_WIN: usize = 4;
pub(crate) const HIDDEN: usize = 5;

pub(crate) fn field_count(n: usize) -> usize {
    HEAD + PER_BIDDER * n
}

pub(crate) fn bidder_field(i: usize, offset: usize) -> usize {
    HEAD + PER_BIDDER * i + offset
}

impl EstimateBundle {
    pub(crate) fn from_fields(
        backend: Backend,
        samples: Option<u64>,
        outcomes: Option<u128>,
        mut fields: Vec<Estimate>,
        n: usize,
        hidden: bool,
    ) -> Self {
        let mut take = |k: usize| std::mem::replace(&mut fields[k], Estimate::sampled(f64::NAN, None));
        let bidders = (0..n)
            .map(|i| BidderEstimates {
                perceived_surplus: take(bidder_field(i, PERC_SURPLUS)),
                actual_surplus: take(bidder_field(i, ACT_SURPLUS)),
                rent: take(bidder_field(i, RENT)),
                perceived_win: take(bidder_field(i, PERC_WIN)),
                actual_win: take(bidder_field(i, ACT_WIN)),
                hidden_on_win: hidden.then(|| take(bidder_field(i, HIDDEN))),
            })
            .collect();
        Self {
            backend,
            samples,
            outcomes,
            first_order: take(Y1),
            second_order: take(Y2),
            revenue_via_fees: take(REV_FEES),
            revenue_via_rents: take(REV_RENTS),
            residual: take(RESIDUAL),
            bidders,
        }
    }
}

/// Realized characteristic values, row-major by bidder.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    m: usize,
    values: Vec<f64>,
}

impl Draw {
    pub fn new(m: usize, values: Vec<f64>) -> Self {
        Self { m, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Uniform variate slot of `(i, j)`; slots past `n * m` are free for tie-breaking.
pub fn slot(s: &Scenario, i: usize, j: usize) -> u64 {
    (i * s.characteristics() + j) as u64
}

/// Samples every characteristic by inverse CDF from the variate keyed by `(seed, index, i, j)`.
pub fn draw_state(s: &Scenario, seed: u64, index: u64) -> Draw {
    let stream = RandomStream::new(seed, index);
    draw_from(s, &stream)
}

fn draw_from(s: &Scenario, stream: &RandomStream) -> Draw {
    let m = s.characteristics();
    let values = (0..s.bidders() * m)
        .map(|k| dist_core::quantile(&s.laws()[k], stream.uniform_at(k as u64)))
        .collect();
    Draw { m, values }
}

/// Estimated valuations under some perspective.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile {
    pub bids: Vec<f64>,
    pub view: Perspective,
}

/// Signal maps of one policy, precomputed for repeated bidding.
#[derive(Debug, Clone)]
pub struct BidPlan {
    awareness: Vec<AwarenessSet>,
    maps: Vec<Vec<Option<SignalMap>>>,
}

impl BidPlan {
    pub fn new(s: &Scenario, p: &DisclosurePolicy) -> Result<Self, EngineError> {
        check_shape(s, p)?;
        let maps = (0..s.bidders())
            .map(|i| {
                (0..s.characteristics())
                    .map(|j| p.info(i, j).map(|level| SignalMap::new(s.law(i, j), level)).transpose())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { awareness: p.awareness_sets().to_vec(), maps })
    }

    pub fn bidders(&self) -> usize {
        self.awareness.len()
    }

    pub fn awareness(&self, i: usize) -> AwarenessSet {
        self.awareness[i]
    }

    pub(crate) fn map(&self, i: usize, j: usize) -> Option<&SignalMap> {
        self.maps[i][j].as_ref()
    }

    /// Per-characteristic estimates, zero where the bidder is unaware.
    pub fn estimates(&self, draw: &Draw) -> Vec<Vec<f64>> {
        self.maps
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, map)| map.as_ref().map_or(0.0, |mp| mp.estimate(draw.get(i, j))))
                    .collect()
            })
            .collect()
    }

    /// Bids under `view`: bidder k sums its estimates over `M^k ∩ view`.
    pub fn bids(&self, draw: &Draw, view: Perspective) -> Vec<f64> {
        let est = self.estimates(draw);
        (0..self.bidders()).map(|k| view_bid(&est[k], self.awareness[k].intersect(view.set()))).collect()
    }
}

pub(crate) fn view_bid(est: &[f64], set: AwarenessSet) -> f64 {
    set.iter().map(|j| est[j]).sum()
}

fn check_shape(s: &Scenario, p: &DisclosurePolicy) -> Result<(), EngineError> {
    if p.bidders() != s.bidders() {
        return Err(EngineError::PolicyMismatch { policy: p.bidders(), scenario: s.bidders() });
    }
    Ok(())
}

/// Bids of every bidder as seen from `view`.
pub fn bids(s: &Scenario, p: &DisclosurePolicy, d: &Draw, view: Perspective) -> Result<BidProfile, EngineError> {
    let seen = perceive(p, view);
    let plan = BidPlan::new(s, &seen)?;
    Ok(BidProfile { bids: plan.bids(d, view), view })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub winner: usize,
    pub price: f64,
    pub tie_set: Vec<usize>,
}

/// Second-price settlement; `tie_u` in `[0, 1)` picks the winner among tied bidders.
pub fn settle(bids: &[f64], tie_u: f64) -> Result<AuctionOutcome, EngineError> {
    if bids.len() < 2 {
        return Err(EngineError::TooFewBidders(bids.len()));
    }
    let top = bids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie_set: Vec<usize> = (0..bids.len()).filter(|&k| bids[k] == top).collect();
    let pick = ((tie_u * tie_set.len() as f64) as usize).min(tie_set.len() - 1);
    let winner = tie_set[pick];
    let price = bids
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != winner)
        .map(|(_, &b)| b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AuctionOutcome { winner, price, tie_set })
}

/// Joint outcomes the exact backend enumerates for this policy, or `None` if a
/// law in scope is continuous.
pub fn exact_cap_check(s: &Scenario, p: &DisclosurePolicy) -> Option<u128> {
    let mut size: u128 = 1;
    for i in 0..s.bidders() {
        for j in p.awareness(i).iter() {
            size = size.saturating_mul(s.law(i, j).support_size()? as u128);
        }
    }
    Some(size)
}

fn check_inputs(s: &Scenario, policies: &[&DisclosurePolicy], cfg: &EstimatorConfig) -> Result<(), EngineError> {
    if s.bidders() < 2 {
        return Err(EngineError::TooFewBidders(s.bidders()));
    }
    for p in policies {
        check_shape(s, p)?;
    }
    if cfg.backend == Backend::MonteCarlo && cfg.n_samples < 2 {
        return Err(EngineError::NoSamples);
    }
    Ok(())
}

fn evaluate(
    s: &Scenario,
    policies: &[&DisclosurePolicy],
    cfg: &EstimatorConfig,
    hidden: bool,
) -> Result<Vec<EstimateBundle>, EngineError> {
    check_inputs(s, policies, cfg)?;
    match cfg.backend {
        Backend::MonteCarlo => montecarlo::run(s, policies, cfg, hidden),
        Backend::ExactDiscrete => exact::run(s, policies, cfg, hidden),
    }
}

/// Order statistics, surpluses and win shares for one policy.
pub fn estimate(s: &Scenario, p: &DisclosurePolicy, cfg: &EstimatorConfig) -> Result<EstimateBundle, EngineError> {
    Ok(evaluate(s, &[p], cfg, false)?.remove(0))
}

/// Like [`estimate`], also collecting each bidder's hidden characteristics on winning.
/// The exact backend then enumerates the hidden laws too.
pub fn estimate_with_hidden(
    s: &Scenario,
    p: &DisclosurePolicy,
    cfg: &EstimatorConfig,
) -> Result<EstimateBundle, EngineError> {
    Ok(evaluate(s, &[p], cfg, true)?.remove(0))
}

/// Two policies on common random numbers (or one joint enumeration).
pub fn estimate_paired(
    s: &Scenario,
    before: &DisclosurePolicy,
    after: &DisclosurePolicy,
    cfg: &EstimatorConfig,
) -> Result<PairedBundle, EngineError> {
    let mut out = evaluate(s, &[before, after], cfg, false)?;
    let change = out.pop().expect("change");
    let after = out.pop().expect("after");
    let before = out.pop().expect("before");
    Ok(PairedBundle { before, after, change })
}
