//! Laws of estimated valuations and of their order statistics.
//!
//! Rank 1 is the highest. The rank-`r` CDF is the probability that at least
//! `n + 1 - r` of the independent valuations are `<= y`; ranks 1 and 2 use the
//! product and two-term forms, other ranks the permanent expansion.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::dist_core::{self, convolve, normal, rational, DistError, GridConfig, InfoLevel, Law, Rational};
use crate::scenario::{perceive, DisclosurePolicy, Perspective, Scenario};

/// Largest number of laws accepted by the general permanent path.
pub const MAX_PERMANENT: usize = 12;

/// Absolute tolerance of the adaptive Simpson quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Normal tails are integrated out to this many standard deviations.
const NORMAL_SPAN: f64 = 12.0;

/// Intervals of the trapezoid rule used when a grid law is involved.
const GRID_STEPS: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderStatError {
    #[error("rank {rank} is outside 1..={n}")]
    RankOutOfRange { rank: usize, n: usize },
    #[error("no laws given")]
    Empty,
    #[error("the permanent path handles at most {MAX_PERMANENT} laws (got {0})")]
    TooManyLaws(usize),
    #[error("bidder {bidder}, characteristic {characteristic}: partition information on a continuous law has no valuation law here")]
    ContinuousPartition { bidder: usize, characteristic: usize },
    #[error("discrete laws with several atoms cannot be mixed with continuous laws; use the Monte Carlo engine")]
    MixedLaws,
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Law of bidder `i`'s estimated valuation as seen from `view`.
pub fn valuation_law(
    s: &Scenario,
    p: &DisclosurePolicy,
    i: usize,
    view: Perspective,
    grid: &GridConfig,
) -> Result<Law, OrderStatError> {
    let seen = perceive(p, view);
    let mut acc = Law::point(Rational::zero());
    for j in seen.awareness(i).iter() {
        let d = s.law(i, j);
        let level = seen.info(i, j).expect("aware pairs carry information");
        let term = match level {
            InfoLevel::NoInfo => match dist_core::mean_exact(d) {
                Some(mu) => Law::point(mu),
                None => Law::point_f64(dist_core::mean(d)),
            },
            InfoLevel::FullInfo => Law::from(d),
            InfoLevel::Cells(labels) => {
                let a = d.as_discrete().expect("cells imply a discrete law");
                let map = dist_core::SignalMap::new(d, level)?;
                let atoms = (0..labels.len()).map(|k| (map.estimate_atom(k).expect("atom").clone(), a.probs()[k].clone()));
                Law::Atoms(dist_core::AtomLaw::from_atoms(atoms)?)
            }
            InfoLevel::Cutpoints(_) => {
                return Err(OrderStatError::ContinuousPartition { bidder: i + 1, characteristic: j + 1 })
            }
        };
        acc = convolve(&acc, &term, grid)?;
    }
    Ok(acc)
}

/// Valuation laws of every bidder from `view`.
pub fn valuation_laws(
    s: &Scenario,
    p: &DisclosurePolicy,
    view: Perspective,
    grid: &GridConfig,
) -> Result<Vec<Law>, OrderStatError> {
    (0..s.bidders()).map(|i| valuation_law(s, p, i, view, grid)).collect()
}

/// CDF of the rank-`r` order statistic of independent laws.
#[derive(Debug, Clone)]
pub struct OrderStatLaw {
    rank: usize,
    laws: Vec<Law>,
}

pub fn order_cdf(laws: Vec<Law>, rank: usize) -> Result<OrderStatLaw, OrderStatError> {
    let n = laws.len();
    if n == 0 {
        return Err(OrderStatError::Empty);
    }
    if rank == 0 || rank > n {
        return Err(OrderStatError::RankOutOfRange { rank, n });
    }
    if rank > 2 && n > MAX_PERMANENT {
        return Err(OrderStatError::TooManyLaws(n));
    }
    Ok(OrderStatLaw { rank, laws })
}

/// Product form (rank 1) or two-term form (rank 2).
fn specialized<T>(g: &[T], rank: usize) -> T
where
    T: Clone + One + Zero + std::ops::Sub<Output = T> + std::ops::Mul<Output = T>,
{
    let product = g.iter().cloned().fold(T::one(), |acc, x| acc * x);
    if rank == 1 {
        return product;
    }
    let extra = (0..g.len()).fold(T::zero(), |acc, i| {
        let others = g
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .fold(T::one(), |acc, (_, x)| acc * x.clone());
        acc + (T::one() - g[i].clone()) * others
    });
    product + extra
}

/// Permanent expansion: sum over `k >= n + 1 - rank` of
/// `per[k columns of g, n - k columns of 1 - g] / (k! (n - k)!)`, with each
/// permanent evaluated by grouping permutations by which rows meet a `g` column.
fn by_permanent<T>(g: &[T], rank: usize) -> T
where
    T: Clone + One + Zero + std::ops::Sub<Output = T> + std::ops::Mul<Output = T>,
{
    let n = g.len();
    let mut total = T::zero();
    for mask in 0u32..1 << n {
        let k = mask.count_ones() as usize;
        if k + rank < n + 1 {
            continue;
        }
        let term = (0..n).fold(T::one(), |acc, i| {
            acc * if mask >> i & 1 == 1 { g[i].clone() } else { T::one() - g[i].clone() }
        });
        total = total + term;
    }
    total
}

/// Permanent of a square matrix by enumerating all permutations.
pub fn permanent<T>(a: &[Vec<T>]) -> T
where
    T: Clone + One + Zero + std::ops::Mul<Output = T>,
{
    fn go<T: Clone + One + Zero + std::ops::Mul<Output = T>>(a: &[Vec<T>], row: usize, used: u32, acc: T) -> T {
        if row == a.len() {
            return acc;
        }
        (0..a.len())
            .filter(|&c| used >> c & 1 == 0)
            .fold(T::zero(), |sum, c| sum + go(a, row + 1, used | 1 << c, acc.clone() * a[row][c].clone()))
    }
    go(a, 0, 0, T::one())
}

/// The literal permanent-sum formula with `k!` and `(n - k)!` divisions, for checking.
pub fn order_cdf_literal(g: &[Rational], rank: usize) -> Rational {
    let n = g.len();
    let fact = |k: usize| (1..=k as i64).fold(Rational::one(), |acc, t| acc * rational::int(t));
    let mut total = Rational::zero();
    for k in (n + 1 - rank)..=n {
        let matrix: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|c| if c < k { g[i].clone() } else { Rational::one() - &g[i] }).collect())
            .collect();
        total += permanent(&matrix) / (fact(k) * fact(n - k));
    }
    total
}

impl OrderStatLaw {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn laws(&self) -> &[Law] {
        &self.laws
    }

    fn marginals(&self, y: f64) -> Vec<f64> {
        self.laws.iter().map(|l| l.cdf(y)).collect()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let g = self.marginals(y);
        if self.rank <= 2 { specialized(&g, self.rank) } else { by_permanent(&g, self.rank) }
    }

    /// Always through the permanent expansion.
    pub fn cdf_permanent(&self, y: f64) -> f64 {
        by_permanent(&self.marginals(y), self.rank)
    }

    fn atom_laws(&self) -> Option<Vec<&dist_core::AtomLaw>> {
        self.laws.iter().map(Law::as_atoms).collect()
    }

    /// Exact CDF when every law is discrete.
    pub fn cdf_exact(&self, y: &Rational) -> Option<Rational> {
        let g: Vec<Rational> = self.atom_laws()?.iter().map(|a| a.cdf_exact(y)).collect();
        Some(if self.rank <= 2 { specialized(&g, self.rank) } else { by_permanent(&g, self.rank) })
    }

    pub fn cdf_exact_permanent(&self, y: &Rational) -> Option<Rational> {
        let g: Vec<Rational> = self.atom_laws()?.iter().map(|a| a.cdf_exact(y)).collect();
        Some(by_permanent(&g, self.rank))
    }

    /// Exact expectation when every law is discrete.
    pub fn expected_exact(&self) -> Option<Rational> {
        let atoms = self.atom_laws()?;
        let mut support: Vec<Rational> = atoms.iter().flat_map(|a| a.values().iter().cloned()).collect();
        support.sort();
        support.dedup();
        let mut previous = Rational::zero();
        let mut total = Rational::zero();
        for y in support {
            let g = self.cdf_exact(&y).expect("discrete");
            total += &y * (&g - &previous);
            previous = g;
        }
        Some(total)
    }
}

fn integration_bounds(law: &Law) -> (f64, f64) {
    match law {
        Law::Normal { mean, sd } => (mean - NORMAL_SPAN * sd, mean + NORMAL_SPAN * sd),
        other => other.bounds(GridConfig::default().tail),
    }
}

/// `E = L + ∫_L^H (1 - G(y)) dy` over the combined support `[L, H]`.
pub fn expected_order_stat(law: &OrderStatLaw) -> Result<f64, OrderStatError> {
    if let Some(exact) = law.expected_exact() {
        return Ok(rational::to_f64(&exact));
    }
    let mixed = law.laws.iter().any(|l| matches!(l, Law::Atoms(a) if a.len() > 1));
    if mixed {
        return Err(OrderStatError::MixedLaws);
    }
    let bounds: Vec<(f64, f64)> = law.laws.iter().map(integration_bounds).collect();
    let lo = bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let hi = bounds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let mut cuts: Vec<f64> = law.laws.iter().flat_map(Law::breakpoints).filter(|x| *x > lo && *x < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let survival = |y: f64| 1.0 - law.cdf(y);
    let on_grid = law.laws.iter().any(|l| matches!(l, Law::Grid(_)));
    let span = hi - lo;
    let integral: f64 = cuts
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if on_grid {
                let steps = ((GRID_STEPS as f64 * (b - a) / span).ceil() as usize).max(1);
                trapezoid(&survival, a, b, steps)
            } else {
                adaptive_simpson(&survival, a, b, QUADRATURE_TOLERANCE * (b - a) / span)
            }
        })
        .sum();
    Ok(lo + integral)
}

fn trapezoid(f: &impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|k| f(a + k as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol.max(1e-15), 48)
}

/// Expected maximum of two independent normals.
pub fn clark_normal_max(mu_a: f64, var_a: f64, mu_b: f64, var_b: f64) -> f64 {
    let s = (var_a + var_b).sqrt();
    if s == 0.0 {
        return mu_a.max(mu_b);
    }
    let theta = (mu_a - mu_b) / s;
    mu_a * normal::cdf(theta) + mu_b * normal::cdf(-theta) + s * normal::pdf(theta)
}

/// Expected maximum of two iid `N(mu1, s1^2)` values.
pub fn normal_pair_max(mu1: f64, s1: f64) -> f64 {
    mu1 + s1 / std::f64::consts::PI.sqrt()
}

/// Expected maximum of `N(mu1 + mu2, s1^2 + s2^2)` and an independent `N(mu1, s1^2)`.
pub fn normal_aware_max(mu1: f64, s1: f64, mu2: f64, s2: f64) -> f64 {
    let t = (2.0 * s1 * s1 + s2 * s2).sqrt();
    mu1 + mu2 * normal::cdf(mu2 / t) + t * normal::pdf(mu2 / t)
}

/// Polynomial with rational coefficients, lowest degree first.
type Poly = Vec<Rational>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    (0..a.len().max(b.len()))
        .map(|k| a.get(k).cloned().unwrap_or_else(Rational::zero) + b.get(k).cloned().unwrap_or_else(Rational::zero))
        .collect()
}

fn poly_scale(a: &Poly, c: &Rational) -> Poly {
    a.iter().map(|x| x * c).collect()
}

/// `p(y - c)` as a polynomial in `y`.
fn poly_shift(p: &Poly, c: &Rational) -> Poly {
    let base: Poly = vec![-c.clone(), Rational::one()];
    let mut power: Poly = vec![Rational::one()];
    let mut out: Poly = vec![Rational::zero()];
    for coef in p {
        out = poly_add(&out, &poly_scale(&power, coef));
        power = poly_mul(&power, &base);
    }
    out
}

fn poly_integral(p: &Poly, a: &Rational, b: &Rational) -> Rational {
    let mut total = Rational::zero();
    let (mut pa, mut pb) = (a.clone(), b.clone());
    for (k, coef) in p.iter().enumerate() {
        total += coef * (&pb - &pa) / Rational::from_integer((k as i64 + 1).into());
        pa *= a;
        pb *= b;
    }
    total
}

/// CDF of a point, uniform or uniform-sum law as rational polynomial pieces:
/// `(start, poly)` applies from `start` up to the next start.
fn cdf_pieces(law: &Law) -> Option<Vec<(Rational, Poly)>> {
    let r = |x: f64| rational::from_f64_decimal(x);
    let one = || vec![Rational::one()];
    match law {
        Law::Atoms(_) => {
            let c = law.as_point()?.clone();
            Some(vec![(c, one())])
        }
        Law::Uniform { lo, hi } => {
            let (lo, hi) = (r(*lo)?, r(*hi)?);
            let w = &hi - &lo;
            let ramp = poly_shift(&vec![Rational::zero(), Rational::one() / &w], &lo);
            Some(vec![(lo, ramp), (hi, one())])
        }
        Law::UniformSum { lo, short, long } => {
            let (lo, s, l) = (r(*lo)?, r(*short)?, r(*long)?);
            let two_sl = Rational::from_integer(2.into()) * &s * &l;
            let half = Rational::new(1.into(), 2.into());
            // in t = y - lo
            let rise: Poly = vec![Rational::zero(), Rational::zero(), Rational::one() / &two_sl];
            let flat: Poly = vec![-(&s * &half) / &l, Rational::one() / &l];
            let top = &s + &l;
            let fall: Poly = vec![
                Rational::one() - &top * &top / &two_sl,
                Rational::from_integer(2.into()) * &top / &two_sl,
                -Rational::one() / &two_sl,
            ];
            let mut pieces = vec![(lo.clone(), poly_shift(&rise, &lo))];
            if s < l {
                pieces.push((&lo + &s, poly_shift(&flat, &lo)));
            }
            pieces.push((&lo + &l, poly_shift(&fall, &lo)));
            pieces.push((&lo + &top, one()));
            Some(pieces)
        }
        _ => None,
    }
}

fn piece_at(pieces: &[(Rational, Poly)], y: &Rational) -> Poly {
    match pieces.iter().rposition(|(start, _)| start <= y) {
        Some(k) => pieces[k].1.clone(),
        None => vec![Rational::zero()],
    }
}

/// Exact expectation of a rank-1 or rank-2 order statistic when every law is a
/// point, a uniform or a sum of two uniforms with decimal bounds. Integrates the
/// product and two-term CDF forms piece by piece in rational arithmetic.
pub fn expected_piecewise_exact(law: &OrderStatLaw) -> Option<Rational> {
    if law.rank > 2 {
        return None;
    }
    let pieces: Vec<Vec<(Rational, Poly)>> = law.laws.iter().map(cdf_pieces).collect::<Option<_>>()?;
    let mut cuts: Vec<Rational> = pieces.iter().flat_map(|p| p.iter().map(|(s, _)| s.clone())).collect();
    cuts.sort();
    cuts.dedup();
    let lo = cuts.first()?.clone();
    let one: Poly = vec![Rational::one()];
    let mut total = lo.clone();
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]) / Rational::from_integer(2.into());
        let f: Vec<Poly> = pieces.iter().map(|p| piece_at(p, &mid)).collect();
        let product = f.iter().fold(one.clone(), |acc, g| poly_mul(&acc, g));
        let g = if law.rank == 1 {
            product
        } else {
            let mut g = product;
            for i in 0..f.len() {
                let others = f
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .fold(one.clone(), |acc, (_, h)| poly_mul(&acc, h));
                let miss = poly_add(&one, &poly_scale(&f[i], &-Rational::one()));
                g = poly_add(&g, &poly_mul(&miss, &others));
            }
            g
        };
        let survival = poly_add(&one, &poly_scale(&g, &-Rational::one()));
        total += poly_integral(&survival, &w[0], &w[1]);
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_core::rational::{int, ratio};
    use crate::dist_core::Distribution;
    use crate::presets;
    use proptest::prelude::*;

    fn unif(lo: f64, hi: f64) -> Law {
        Law::Uniform { lo, hi }
    }

    #[test]
    fn uniform_pair_laws() {
        let first = order_cdf(vec![unif(0.0, 1.0), unif(0.0, 1.0)], 1).unwrap();
        let second = order_cdf(vec![unif(0.0, 1.0), unif(0.0, 1.0)], 2).unwrap();
        for k in 0..=20 {
            let y = k as f64 / 20.0;
            assert!((first.cdf(y) - y * y).abs() < 1e-15);
            assert!((second.cdf(y) - (2.0 * y - y * y)).abs() < 1e-15);
            assert!(second.cdf(y) >= first.cdf(y));
        }
        assert!((expected_order_stat(&first).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((expected_order_stat(&second).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(order_cdf(vec![unif(0.0, 1.0)], 2), Err(OrderStatError::RankOutOfRange { .. })));
    }

    #[test]
    fn example_one_closed_forms() {
        let (s, p) = presets::example1();
        let grid = GridConfig::default();
        let full = Perspective::full(2);
        let laws = valuation_laws(&s, &p, full, &grid).unwrap();
        assert_eq!(laws[0], Law::UniformSum { lo: -6.0, short: 5.0, long: 11.0 });
        let aware = expected_order_stat(&order_cdf(laws, 1).unwrap()).unwrap();
        assert!((aware - 505.0 / 132.0).abs() < 1e-9, "{aware}");

        let pair = expected_order_stat(&order_cdf(vec![unif(0.0, 5.0), unif(0.0, 5.0)], 1).unwrap()).unwrap();
        assert!((pair - 10.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn piecewise_exact_expectations() {
        let (s, p) = presets::example1();
        let laws = valuation_laws(&s, &p, Perspective::full(2), &GridConfig::default()).unwrap();
        let first = order_cdf(laws.clone(), 1).unwrap();
        assert_eq!(expected_piecewise_exact(&first), Some(ratio(505, 132)));
        let second = order_cdf(laws, 2).unwrap();
        let exact = expected_piecewise_exact(&second).unwrap();
        assert!((rational::to_f64(&exact) - expected_order_stat(&second).unwrap()).abs() < 1e-9);

        let pair = order_cdf(vec![unif(0.0, 5.0), unif(0.0, 5.0)], 1).unwrap();
        assert_eq!(expected_piecewise_exact(&pair), Some(ratio(10, 3)));
        let low = order_cdf(vec![unif(0.0, 5.0), unif(0.0, 5.0)], 2).unwrap();
        assert_eq!(expected_piecewise_exact(&low), Some(ratio(5, 3)));
        let with_point = order_cdf(vec![unif(0.0, 1.0), Law::point(ratio(1, 2))], 1).unwrap();
        assert_eq!(expected_piecewise_exact(&with_point), Some(ratio(5, 8)));
        assert_eq!(expected_piecewise_exact(&order_cdf(vec![unif(0.0, 1.0); 3], 3).unwrap()), None);
    }

    #[test]
    fn no_information_gives_point_masses() {
        let (s, _) = presets::example1();
        let p = DisclosurePolicy::with_levels(&s, vec![s.full_set(); 2], |_, _| InfoLevel::NoInfo).unwrap();
        let law = valuation_law(&s, &p, 0, Perspective::full(2), &GridConfig::default()).unwrap();
        assert_eq!(law.as_point().map(rational::to_f64), Some(2.0));
        let stat = order_cdf(vec![law.clone(), law], 2).unwrap();
        assert_eq!(expected_order_stat(&stat).unwrap(), 2.0);
    }

    #[test]
    fn normal_components_add() {
        let (s, p) = presets::example2(1.0, 2.0, -0.5, 1.5);
        let law = valuation_law(&s, &p, 0, Perspective::full(2), &GridConfig::default()).unwrap();
        assert_eq!(law, Law::Normal { mean: 0.5, sd: 2.5 });
        let other = valuation_law(&s, &p, 1, Perspective::full(2), &GridConfig::default()).unwrap();
        let e = expected_order_stat(&order_cdf(vec![law, other], 1).unwrap()).unwrap();
        assert!((e - normal_aware_max(1.0, 2.0, -0.5, 1.5)).abs() < 1e-9, "{e}");
    }

    #[test]
    fn partitions_on_discrete_laws_become_atoms() {
        let d = Distribution::discrete_ratios(&[(0, 1, 2), (1, 1, 4), (3, 1, 4)]).unwrap();
        let s = Scenario::new(2, 1, vec![d.clone(), d]).unwrap();
        let p = DisclosurePolicy::with_levels(&s, vec![s.full_set(); 2], |_, _| InfoLevel::Cells(vec![0, 1, 1])).unwrap();
        let law = valuation_law(&s, &p, 0, Perspective::full(1), &GridConfig::default()).unwrap();
        let atoms = law.as_atoms().unwrap();
        assert_eq!(atoms.values(), &[int(0), int(2)]);
        assert_eq!(atoms.probs(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn clark_matches_displays() {
        for &(mu1, s1) in &[(0.0, 1.0), (2.5, 0.5), (-1.0, 2.0)] {
            assert!((clark_normal_max(mu1, s1 * s1, mu1, s1 * s1) - normal_pair_max(mu1, s1)).abs() < 1e-12);
            for &(mu2, s2) in &[(-1.0, 0.5), (0.0, 1.0), (1.0, 2.0)] {
                let general = clark_normal_max(mu1 + mu2, s1 * s1 + s2 * s2, mu1, s1 * s1);
                assert!((general - normal_aware_max(mu1, s1, mu2, s2)).abs() < 1e-12);
            }
            let s2 = 1.3_f64;
            let diff = normal_aware_max(mu1, s1, 0.0, s2) - normal_pair_max(mu1, s1);
            let stated = (2.0 * s1 * s1 + s2 * s2).sqrt() / (2.0 * std::f64::consts::PI).sqrt()
                - s1 / std::f64::consts::PI.sqrt();
            assert!((diff - stated).abs() < 1e-12 && diff >= 0.0);
        }
        assert_eq!(clark_normal_max(1.0, 0.0, 1.0, 0.0), 1.0);
        assert_eq!(clark_normal_max(1.0, 0.0, 3.0, 0.0), 3.0);
    }

    #[test]
    fn clark_is_monotone() {
        let mut last = f64::NEG_INFINITY;
        for k in 0..50 {
            let v = clark_normal_max(-2.0 + 0.1 * k as f64, 1.0, 0.0, 1.0);
            assert!(v > last);
            last = v;
        }
        let mut last = f64::NEG_INFINITY;
        for k in 1..50 {
            let v = normal_aware_max(0.0, 1.0, 0.0, 0.1 * k as f64);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn permanent_of_small_matrices() {
        let m = vec![vec![int(1), int(2)], vec![int(3), int(4)]];
        assert_eq!(permanent(&m), int(10));
        let ones = vec![vec![int(1); 4]; 4];
        assert_eq!(permanent(&ones), int(24));
    }

    fn arb_atoms() -> impl Strategy<Value = Law> {
        proptest::collection::btree_set(-5i64..6, 1..4).prop_flat_map(|values| {
            let k = values.len();
            proptest::collection::vec(1i64..5, k).prop_map(move |weights| {
                let total: i64 = weights.iter().sum();
                let atoms = values.iter().zip(&weights).map(|(v, w)| (int(*v), ratio(*w, total)));
                Law::Atoms(dist_core::AtomLaw::from_atoms(atoms).unwrap())
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn permanent_path_matches_specialized(laws in proptest::collection::vec(arb_atoms(), 1..=6), y in -6i64..7) {
            let n = laws.len();
            let y = int(y);
            for rank in 1..=n {
                let stat = order_cdf(laws.clone(), rank).unwrap();
                let fast = stat.cdf_exact(&y).unwrap();
                prop_assert_eq!(&fast, &stat.cdf_exact_permanent(&y).unwrap());
                let g: Vec<Rational> = laws.iter().map(|l| l.as_atoms().unwrap().cdf_exact(&y)).collect();
                if n <= 5 {
                    prop_assert_eq!(&fast, &order_cdf_literal(&g, rank));
                }
                if rank >= 2 {
                    let above = order_cdf(laws.clone(), rank - 1).unwrap().cdf_exact(&y).unwrap();
                    prop_assert!(fast >= above);
                }
                prop_assert!(order_cdf(laws.clone(), 1).unwrap().cdf_exact(&y).unwrap() <= g.iter().min().unwrap().clone());
            }
        }

        #[test]
        fn exact_expectation_is_a_mean_of_sorted_draws(laws in proptest::collection::vec(arb_atoms(), 2..=3)) {
            // brute-force the joint law
            let atoms: Vec<&dist_core::AtomLaw> = laws.iter().map(|l| l.as_atoms().unwrap()).collect();
            let mut expect = vec![Rational::zero(); laws.len()];
            let mut idx = vec![0usize; laws.len()];
            loop {
                let mut vals: Vec<Rational> = idx.iter().zip(&atoms).map(|(&k, a)| a.values()[k].clone()).collect();
                let w: Rational = idx.iter().zip(&atoms).map(|(&k, a)| a.probs()[k].clone()).product();
                vals.sort_by(|a, b| b.cmp(a));
                for (r, v) in vals.iter().enumerate() {
                    expect[r] += &w * v;
                }
                let mut t = 0;
                loop {
                    if t == idx.len() { break; }
                    idx[t] += 1;
                    if idx[t] < atoms[t].len() { break; }
                    idx[t] = 0;
                    t += 1;
                }
                if t == idx.len() { break; }
            }
            for rank in 1..=laws.len() {
                let stat = order_cdf(laws.clone(), rank).unwrap();
                prop_assert_eq!(stat.expected_exact().unwrap(), expect[rank - 1].clone());
            }
        }
    }
}
