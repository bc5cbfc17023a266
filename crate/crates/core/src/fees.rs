//! Entry fees, the revenue decomposition into first order statistic plus rents,
//! and the gap between a winner's perceived and actual payoff.

use num_traits::Zero;

use crate::dist_core::{self, Rational};
use crate::engine::{self, Backend, EngineError, Estimate, EstimateBundle, EstimatorConfig};
use crate::scenario::{DisclosurePolicy, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct BidderFee {
    /// Surplus the bidder expects from its own view: the fee it is willing to pay.
    pub fee: Estimate,
    /// The same surplus from the full view.
    pub fee_full_view: Estimate,
    /// `fee - fee_full_view`.
    pub rent: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule {
    pub bidders: Vec<BidderFee>,
}

impl FeeSchedule {
    pub fn from_bundle(b: &EstimateBundle) -> Self {
        Self {
            bidders: b
                .bidders
                .iter()
                .map(|x| BidderFee {
                    fee: x.perceived_surplus.clone(),
                    fee_full_view: x.actual_surplus.clone(),
                    rent: x.rent.clone(),
                })
                .collect(),
        }
    }
}

pub fn entry_fees(s: &Scenario, p: &DisclosurePolicy, cfg: &EstimatorConfig) -> Result<FeeSchedule, EngineError> {
    Ok(FeeSchedule::from_bundle(&engine::estimate(s, p, cfg)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueReport {
    pub backend: Backend,
    pub samples: Option<u64>,
    pub first_order: Estimate,
    pub second_order: Estimate,
    pub fees: FeeSchedule,
    /// Sum of fees plus the expected price.
    pub total_revenue: Estimate,
    /// Expected first order statistic plus the sum of rents.
    pub revenue_via_rents: Estimate,
    /// `total_revenue - revenue_via_rents`.
    pub residual: Estimate,
}

impl RevenueReport {
    pub fn from_bundle(b: &EstimateBundle) -> Self {
        Self {
            backend: b.backend,
            samples: b.samples,
            first_order: b.first_order.clone(),
            second_order: b.second_order.clone(),
            fees: FeeSchedule::from_bundle(b),
            total_revenue: b.revenue_via_fees.clone(),
            revenue_via_rents: b.revenue_via_rents.clone(),
            residual: b.residual.clone(),
        }
    }

    pub fn total_rent(&self) -> Estimate {
        sum(self.fees.bidders.iter().map(|f| &f.rent))
    }
}

pub fn revenue(s: &Scenario, p: &DisclosurePolicy, cfg: &EstimatorConfig) -> Result<RevenueReport, EngineError> {
    Ok(RevenueReport::from_bundle(&engine::estimate(s, p, cfg)?))
}

/// Sum of estimates; standard errors combined as if independent.
fn sum<'a>(items: impl Iterator<Item = &'a Estimate>) -> Estimate {
    let items: Vec<&Estimate> = items.collect();
    if items.iter().all(|e| e.exact.is_some()) {
        return Estimate::exact(items.iter().map(|e| e.exact.clone().expect("exact")).sum());
    }
    let value = items.iter().map(|e| e.value).sum();
    let se = items
        .iter()
        .map(|e| e.std_error)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.iter().map(|s| s * s).sum::<f64>().sqrt());
    Estimate::sampled(value, se)
}

fn difference(a: &Estimate, b: &Estimate) -> Estimate {
    match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => Estimate::exact(x - y),
        _ => Estimate::sampled(
            a.value - b.value,
            a.std_error.zip(b.std_error).map(|(x, y)| (x * x + y * y).sqrt()),
        ),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurseEntry {
    /// Payoff net of the fee as the bidder sees it; zero since the fee takes it all.
    pub perceived_payoff: Estimate,
    /// Payoff net of the fee including the characteristics the bidder is unaware of.
    pub actual_payoff: Estimate,
    /// Expected value of the unaware characteristics collected on winning.
    pub gap: Estimate,
    pub rent: Estimate,
    pub win_probability: Estimate,
    /// Sum of the means of the characteristics outside the bidder's awareness.
    pub hidden_mean: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurseReport {
    pub backend: Backend,
    pub bidders: Vec<CurseEntry>,
}

pub fn curse_gap(s: &Scenario, p: &DisclosurePolicy, cfg: &EstimatorConfig) -> Result<CurseReport, EngineError> {
    let b = engine::estimate_with_hidden(s, p, cfg)?;
    let zero = || if b.backend == Backend::ExactDiscrete {
        Estimate::exact(Rational::zero())
    } else {
        Estimate::sampled(0.0, cfg.report_standard_errors.then_some(0.0))
    };
    let bidders = b
        .bidders
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let gap = x.hidden_on_win.clone().expect("hidden values requested");
            let hidden: Vec<usize> = (0..s.characteristics()).filter(|&j| !p.awareness(i).contains(j)).collect();
            let exact_mean: Option<Rational> =
                hidden.iter().map(|&j| dist_core::mean_exact(s.law(i, j))).sum();
            let hidden_mean = match exact_mean {
                Some(r) => Estimate::exact(r),
                None => Estimate::sampled(hidden.iter().map(|&j| dist_core::mean(s.law(i, j))).sum(), None),
            };
            CurseEntry {
                perceived_payoff: zero(),
                actual_payoff: difference(&gap, &x.rent),
                gap,
                rent: x.rent.clone(),
                win_probability: x.actual_win.clone(),
                hidden_mean,
            }
        })
        .collect();
    Ok(CurseReport { backend: b.backend, bidders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_core::rational::{int, ratio};
    use crate::dist_core::{Distribution, InfoLevel};
    use crate::presets;
    use crate::scenario::AwarenessSet;

    #[test]
    fn d1_fees_and_revenue() {
        let (s, p) = presets::d1();
        let r = revenue(&s, &p, &EstimatorConfig::exact()).unwrap();
        let f = &r.fees.bidders;
        assert_eq!(f[0].fee.exact, Some(ratio(9, 8)));
        assert_eq!(f[1].fee.exact, Some(ratio(1, 4)));
        assert_eq!(f[1].fee_full_view.exact, Some(ratio(1, 8)));
        assert_eq!(f[1].rent.exact, Some(ratio(1, 8)));
        assert_eq!(r.total_revenue.exact, Some(ratio(7, 4)));
        assert_eq!(r.revenue_via_rents.exact, Some(ratio(7, 4)));
        assert_eq!(r.residual.exact, Some(int(0)));
        assert_eq!(r.total_rent().exact, Some(ratio(1, 8)));
        // 13/8 + 1/8 and 9/8 + 1/4 + 3/8
        assert_eq!(r.first_order.exact.clone().unwrap() + ratio(1, 8), ratio(7, 4));
        assert_eq!(ratio(9, 8) + ratio(1, 4) + r.second_order.exact.clone().unwrap(), ratio(7, 4));
    }

    #[test]
    fn symmetric_uniform_fees() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let s = Scenario::new(2, 1, vec![u.clone(), u]).unwrap();
        let p = DisclosurePolicy::full_info(&s, vec![AwarenessSet::base(); 2]).unwrap();
        let f = entry_fees(&s, &p, &EstimatorConfig::monte_carlo(200_000, 4)).unwrap();
        for b in &f.bidders {
            assert!((b.fee.value - 1.0 / 6.0).abs() < 4.0 * b.fee.se());
            assert_eq!(b.rent.value, 0.0);
        }
    }

    #[test]
    fn ties_at_the_mean_cost_nothing() {
        let law = Distribution::discrete_ratios(&[(0, 3, 5), (1, 2, 5)]).unwrap();
        let s = Scenario::new(3, 1, vec![law; 3]).unwrap();
        let p = DisclosurePolicy::with_levels(&s, vec![AwarenessSet::base(); 3], |_, _| InfoLevel::NoInfo).unwrap();
        let f = entry_fees(&s, &p, &EstimatorConfig::exact()).unwrap();
        assert!(f.bidders.iter().all(|b| b.fee.exact == Some(int(0))));
    }

    #[test]
    fn equal_awareness_revenue_is_first_order() {
        let (s, p) = presets::common_awareness();
        let r = revenue(&s, &p, &EstimatorConfig::exact()).unwrap();
        assert_eq!(r.total_revenue.exact, r.first_order.exact);
        assert!(r.fees.bidders.iter().all(|b| b.rent.exact == Some(int(0))));
    }

    #[test]
    fn single_bidder_revenue_is_rejected() {
        let s = Scenario::new(1, 1, vec![Distribution::uniform(0.0, 1.0).unwrap()]).unwrap();
        let p = DisclosurePolicy::full_info(&s, vec![AwarenessSet::base()]).unwrap();
        assert_eq!(revenue(&s, &p, &EstimatorConfig::exact()).unwrap_err(), EngineError::TooFewBidders(1));
    }

    #[test]
    fn hidden_mean_times_win_probability() {
        let (s, p) = presets::hidden_characteristic(-1);
        let c = curse_gap(&s, &p, &EstimatorConfig::exact()).unwrap();
        for b in &c.bidders {
            let win = b.win_probability.exact.clone().unwrap();
            assert_eq!(b.hidden_mean.exact, Some(int(-1)));
            assert_eq!(b.gap.exact, Some(-&win));
            assert_eq!(b.win_probability.exact, Some(ratio(1, 3)));
            assert_eq!(b.perceived_payoff.exact, Some(int(0)));
            assert_eq!(b.actual_payoff.exact, Some(ratio(-1, 3)));
        }
        let (s, p) = presets::d1_extended();
        let c = curse_gap(&s, &p, &EstimatorConfig::exact()).unwrap();
        assert!(c.bidders.iter().all(|b| b.gap.exact == Some(int(0))));

        let (s, p) = presets::hidden_characteristic(0);
        let c = curse_gap(&s, &p, &EstimatorConfig::monte_carlo(50_000, 3)).unwrap();
        for b in &c.bidders {
            assert!(b.gap.value.abs() <= 4.0 * b.gap.se());
        }
    }
}
