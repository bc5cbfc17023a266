//! Brute-force rational oracle for discrete scenarios: enumerates every joint
//! outcome and applies the auction definitions directly.

#![allow(dead_code)]

use awareness_auction::dist_core::{Distribution, InfoLevel, Rational};
use awareness_auction::scenario::{AwarenessSet, DisclosurePolicy, Scenario};
use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub perceived: Vec<Rational>,
    pub actual: Vec<Rational>,
    pub first: Rational,
    pub second: Rational,
    pub revenue: Rational,
    /// Expected sum of unaware characteristics collected by each bidder when it wins.
    pub hidden_on_win: Vec<Rational>,
    pub win: Vec<Rational>,
}

fn atoms(d: &Distribution) -> Vec<(Rational, Rational)> {
    let a = d.as_discrete().expect("discrete law");
    a.atoms().map(|(v, p)| (v.clone(), p.clone())).collect()
}

/// Cell label of every atom under `level`.
fn labels(d: &Distribution, level: &InfoLevel) -> Vec<usize> {
    let at = atoms(d);
    match level {
        InfoLevel::NoInfo => vec![0; at.len()],
        InfoLevel::FullInfo => (0..at.len()).collect(),
        InfoLevel::Cells(l) => l.clone(),
        InfoLevel::Cutpoints(cuts) => at
            .iter()
            .map(|(v, _)| {
                let v = awareness_auction::dist_core::rational::to_f64(v);
                cuts.iter().filter(|&&c| c <= v).count()
            })
            .collect(),
    }
}

/// Conditional mean of the atom's cell.
fn estimates(d: &Distribution, level: &InfoLevel) -> Vec<Rational> {
    let at = atoms(d);
    let l = labels(d, level);
    (0..at.len())
        .map(|k| {
            let (mut mass, mut total) = (Rational::zero(), Rational::zero());
            for (q, (v, p)) in at.iter().enumerate() {
                if l[q] == l[k] {
                    mass += p;
                    total += v * p;
                }
            }
            total / mass
        })
        .collect()
}

fn top_two(bids: &[Rational]) -> (Rational, Rational) {
    let mut sorted = bids.to_vec();
    sorted.sort();
    let n = sorted.len();
    (sorted[n - 1].clone(), sorted[n - 2].clone())
}

/// Surplus of `i` against the highest other bid; ties give nothing.
fn surplus(bids: &[Rational], i: usize) -> Rational {
    let best_other = bids.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, b)| b).max().expect("two bidders");
    let gap = &bids[i] - best_other;
    if gap > Rational::zero() { gap } else { Rational::zero() }
}

pub fn oracle(s: &Scenario, p: &DisclosurePolicy) -> Oracle {
    let (n, m) = (s.bidders(), s.characteristics());
    let laws: Vec<Vec<(Rational, Rational)>> = (0..n * m).map(|k| atoms(s.law(k / m, k % m))).collect();
    let est: Vec<Option<Vec<Rational>>> = (0..n * m)
        .map(|k| {
            let (i, j) = (k / m, k % m);
            p.info(i, j).map(|level| estimates(s.law(i, j), level))
        })
        .collect();
    let views: Vec<AwarenessSet> = (0..n).map(|i| p.awareness(i)).chain([s.full_set()]).collect();

    let zero = || vec![Rational::zero(); n];
    let mut out = Oracle {
        perceived: zero(),
        actual: zero(),
        first: Rational::zero(),
        second: Rational::zero(),
        revenue: Rational::zero(),
        hidden_on_win: zero(),
        win: zero(),
    };
    let mut idx = vec![0usize; n * m];
    loop {
        let prob: Rational = idx.iter().enumerate().map(|(k, &a)| laws[k][a].1.clone()).product();
        let estimate = |i: usize, j: usize| est[i * m + j].as_ref().map(|e| e[idx[i * m + j]].clone());
        let bids_in = |view: AwarenessSet| -> Vec<Rational> {
            (0..n)
                .map(|k| p.awareness(k).intersect(view).iter().map(|j| estimate(k, j).expect("aware")).sum())
                .collect()
        };
        for i in 0..n {
            out.perceived[i] += surplus(&bids_in(views[i]), i) * &prob;
        }
        let real = bids_in(views[n]);
        for i in 0..n {
            out.actual[i] += surplus(&real, i) * &prob;
        }
        let (y1, y2) = top_two(&real);
        out.first += &y1 * &prob;
        out.second += &y2 * &prob;
        let winners: Vec<usize> = (0..n).filter(|&i| real[i] == y1).collect();
        let share = Rational::one() / Rational::from_integer((winners.len() as i64).into());
        for &i in &winners {
            let hidden: Rational =
                (0..m).filter(|&j| !p.awareness(i).contains(j)).map(|j| laws[i * m + j][idx[i * m + j]].0.clone()).sum();
            out.win[i] += &prob * &share;
            out.hidden_on_win[i] += hidden * &prob * &share;
        }

        let mut k = 0;
        loop {
            if k == idx.len() {
                out.revenue = out.perceived.iter().sum::<Rational>() + &out.second;
                return out;
            }
            idx[k] += 1;
            if idx[k] < laws[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
