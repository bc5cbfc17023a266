//! Monte Carlo backend: chunked parallel draws merged in chunk order.

use rayon::prelude::*;

use super::stats::Moments;
use super::*;

/// Relative tolerance under which two floating bids count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

fn close(top: f64, b: f64) -> bool {
    top - b <= TIE_TOLERANCE * top.abs().max(1.0)
}

/// Surplus and win share of bidder `i`; tied leaders get zero surplus and equal shares.
fn standing(bids: &[f64], i: usize) -> (f64, f64) {
    let top = bids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !close(top, bids[i]) {
        return (0.0, 0.0);
    }
    let tied = bids.iter().filter(|&&b| close(top, b)).count();
    if tied >= 2 {
        return (0.0, 1.0 / tied as f64);
    }
    let others = bids
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, &b)| b)
        .fold(f64::NEG_INFINITY, f64::max);
    (bids[i] - others, 1.0)
}

fn top_two(bids: &[f64]) -> (f64, f64) {
    let top = bids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if bids.iter().filter(|&&b| close(top, b)).count() >= 2 {
        return (top, top);
    }
    let second = bids.iter().copied().filter(|&b| !close(top, b)).fold(f64::NEG_INFINITY, f64::max);
    (top, second)
}

/// Writes the per-draw quantities of one policy into `out`.
pub(crate) fn outcome(plan: &BidPlan, draw: &Draw, m: usize, hidden: bool, out: &mut [f64]) {
    let n = plan.bidders();
    let est = plan.estimates(draw);
    let full: Vec<f64> = (0..n).map(|k| view_bid(&est[k], plan.awareness(k))).collect();
    let (y1, y2) = top_two(&full);
    let mut seen = vec![0.0; n];
    let (mut fees, mut rents) = (0.0, 0.0);
    for i in 0..n {
        let own = plan.awareness(i);
        for k in 0..n {
            seen[k] = if k == i { full[i] } else { view_bid(&est[k], plan.awareness(k).intersect(own)) };
        }
        let (ps, pw) = standing(&seen, i);
        let (act, aw) = standing(&full, i);
        out[bidder_field(i, PERC_SURPLUS)] = ps;
        out[bidder_field(i, ACT_SURPLUS)] = act;
        out[bidder_field(i, RENT)] = ps - act;
        out[bidder_field(i, PERC_WIN)] = pw;
        out[bidder_field(i, ACT_WIN)] = aw;
        out[bidder_field(i, HIDDEN)] = if hidden && aw > 0.0 {
            aw * (0..m).filter(|&j| !own.contains(j)).map(|j| draw.get(i, j)).sum::<f64>()
        } else {
            0.0
        };
        fees += ps;
        rents += ps - act;
    }
    out[Y1] = y1;
    out[Y2] = y2;
    out[REV_FEES] = fees + y2;
    out[REV_RENTS] = y1 + rents;
    out[RESIDUAL] = out[REV_FEES] - out[REV_RENTS];
}

pub(super) fn run(
    s: &Scenario,
    policies: &[&DisclosurePolicy],
    cfg: &EstimatorConfig,
    hidden: bool,
) -> Result<Vec<EstimateBundle>, EngineError> {
    let plans = policies.iter().map(|p| BidPlan::new(s, p)).collect::<Result<Vec<_>, _>>()?;
    let (n, m) = (s.bidders(), s.characteristics());
    let f = field_count(n);
    let paired = plans.len() == 2;
    let width = f * plans.len() + if paired { f } else { 0 };
    let total = cfg.n_samples;
    let chunks = total.div_ceil(CHUNK);

    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut moments = Moments::new(width);
            let mut row = vec![0.0; width];
            for d in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let draw = draw_state(s, cfg.seed, d);
                for (k, plan) in plans.iter().enumerate() {
                    outcome(plan, &draw, m, hidden, &mut row[k * f..(k + 1) * f]);
                }
                if paired {
                    for t in 0..f {
                        row[2 * f + t] = row[f + t] - row[t];
                    }
                }
                moments.push(&row);
            }
            moments
        })
        .collect();
    let mut all = Moments::new(width);
    for part in &parts {
        all.merge(part);
    }

    let groups = width / f;
    Ok((0..groups)
        .map(|g| {
            let fields = (0..f)
                .map(|t| {
                    let k = g * f + t;
                    Estimate::sampled(all.mean(k), cfg.report_standard_errors.then(|| all.std_error(k)))
                })
                .collect();
            EstimateBundle::from_fields(Backend::MonteCarlo, Some(total), None, fields, n, hidden)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standing_and_ties() {
        assert_eq!(standing(&[3.0, 1.0], 0), (2.0, 1.0));
        assert_eq!(standing(&[3.0, 1.0], 1), (0.0, 0.0));
        assert_eq!(standing(&[2.0, 2.0], 1), (0.0, 0.5));
        assert_eq!(standing(&[0.1 + 0.2, 0.3, 0.0], 0), (0.0, 0.5));
        assert_eq!(top_two(&[1.0, 5.0, 4.0]), (5.0, 4.0));
        assert_eq!(top_two(&[5.0, 5.0, 4.0]), (5.0, 5.0));
    }
}
