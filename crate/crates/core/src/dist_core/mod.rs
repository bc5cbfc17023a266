//! Per-characteristic value laws and the information a bidder can receive about them.
//!
//! A [`Distribution`] is the law of one characteristic's value for one bidder. An
//! [`InfoLevel`] is a finite measurable partition of its support (or the trivial /
//! discrete extremes), and [`conditional_mean`] turns a realized signal cell into the
//! bidder's estimate of that characteristic.

pub mod law;
pub mod normal;
pub mod rational;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rng::RandomStream;
pub use law::{convolve, GridConfig, GridLaw, Law};
pub use rational::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("uniform bounds must satisfy lo < hi (got lo={lo}, hi={hi})")]
    UniformBounds { lo: f64, hi: f64 },
    #[error("normal standard deviation must be positive and finite (got {0})")]
    NormalScale(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(f64),
    #[error("discrete law needs at least 2 support points (got {0})")]
    TooFewAtoms(usize),
    #[error("discrete support values must be strictly increasing")]
    UnsortedSupport,
    #[error("discrete probability {0} is not positive")]
    NonPositiveProbability(String),
    #[error("discrete probabilities sum to {0}, expected 1")]
    ProbabilitySum(String),
    #[error("cutpoints must be finite and strictly increasing")]
    BadCutpoints,
    #[error("cell labels given for a continuous law")]
    CellsOnContinuous,
    #[error("expected {expected} cell labels, got {got}")]
    CellLabelCount { expected: usize, got: usize },
    #[error("value {0} is outside the support")]
    OutsideSupport(f64),
    #[error("signal cell does not belong to this information level")]
    InvalidCell,
    #[error("{0}")]
    Unsupported(&'static str),
}

/// Finite list of atoms with exact rational values and probabilities.
///
/// Used both as the discrete characteristic law and as the law of sums and
/// estimates (where a single atom, a point mass, is allowed).
#[derive(Debug, Clone)]
pub struct AtomLaw {
    values: Vec<Rational>,
    probs: Vec<Rational>,
    values_f: Vec<f64>,
    cum_f: Vec<f64>,
}

impl PartialEq for AtomLaw {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.probs == other.probs
    }
}

impl AtomLaw {
    /// Sorts by value and merges equal values. Probabilities must be positive and sum to 1.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (Rational, Rational)>) -> Result<Self, DistError> {
        let mut atoms: Vec<(Rational, Rational)> = atoms.into_iter().collect();
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut values: Vec<Rational> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<Rational> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            if p <= Rational::zero() {
                return Err(DistError::NonPositiveProbability(rational::format(&p)));
            }
            match values.last() {
                Some(last) if *last == v => *probs.last_mut().unwrap() += p,
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        Self::from_sorted(values, probs)
    }

    fn from_sorted(values: Vec<Rational>, probs: Vec<Rational>) -> Result<Self, DistError> {
        if values.is_empty() {
            return Err(DistError::TooFewAtoms(0));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(DistError::ProbabilitySum(rational::format(&total)));
        }
        let values_f = values.iter().map(rational::to_f64).collect();
        let mut acc = Rational::zero();
        let mut cum_f = Vec::with_capacity(probs.len());
        for p in &probs {
            acc += p;
            cum_f.push(rational::to_f64(&acc));
        }
        Ok(Self { values, probs, values_f, cum_f })
    }

    pub fn point(value: Rational) -> Self {
        Self::from_sorted(vec![value], vec![Rational::one()]).expect("point mass")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn values_f64(&self) -> &[f64] {
        &self.values_f
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.values.iter().zip(self.probs.iter())
    }

    pub fn mean_exact(&self) -> Rational {
        self.atoms().map(|(v, p)| v * p).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.values_f.iter().rposition(|&v| v <= x) {
            Some(k) => self.cum_f[k],
            None => 0.0,
        }
    }

    pub fn cdf_exact(&self, x: &Rational) -> Rational {
        self.atoms().filter(|(v, _)| *v <= x).map(|(_, p)| p.clone()).sum()
    }

    /// Index of the smallest atom whose cumulative probability reaches `u`.
    pub fn quantile_index(&self, u: f64) -> usize {
        self.cum_f
            .iter()
            .position(|&c| c >= u)
            .unwrap_or(self.cum_f.len() - 1)
    }

    /// Index of the atom equal to `x`, if any.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.values_f.iter().position(|&v| v == x)
    }

    pub fn shift(&self, c: &Rational) -> Self {
        let values = self.values.iter().map(|v| v + c).collect();
        Self::from_sorted(values, self.probs.clone()).expect("shift keeps validity")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    lo: f64,
    hi: f64,
}

impl Uniform {
    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    mean: f64,
    sd: f64,
}

impl Normal {
    pub fn mean(&self) -> f64 {
        self.mean
    }
    pub fn sd(&self) -> f64 {
        self.sd
    }
}

/// Law of one characteristic value `X_j^i`. Never almost-surely constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform(Uniform),
    Normal(Normal),
    Discrete(AtomLaw),
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistError> {
        for v in [lo, hi] {
            if !v.is_finite() {
                return Err(DistError::NonFinite(v));
            }
        }
        if lo >= hi {
            return Err(DistError::UniformBounds { lo, hi });
        }
        Ok(Self::Uniform(Uniform { lo, hi }))
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self, DistError> {
        if !mean.is_finite() {
            return Err(DistError::NonFinite(mean));
        }
        if !(sd.is_finite() && sd > 0.0) {
            return Err(DistError::NormalScale(sd));
        }
        Ok(Self::Normal(Normal { mean, sd }))
    }

    /// Support points must be strictly increasing with positive probabilities summing to 1.
    pub fn discrete(support: Vec<(Rational, Rational)>) -> Result<Self, DistError> {
        if support.len() < 2 {
            return Err(DistError::TooFewAtoms(support.len()));
        }
        if support.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(DistError::UnsortedSupport);
        }
        if let Some((_, p)) = support.iter().find(|(_, p)| *p <= Rational::zero()) {
            return Err(DistError::NonPositiveProbability(rational::format(p)));
        }
        let (values, probs) = support.into_iter().unzip();
        Ok(Self::Discrete(AtomLaw::from_sorted(values, probs)?))
    }

    /// Convenience constructor from `(value, numerator, denominator)` triples.
    pub fn discrete_ratios(support: &[(i64, i64, i64)]) -> Result<Self, DistError> {
        Self::discrete(
            support
                .iter()
                .map(|&(v, n, d)| (rational::int(v), rational::ratio(n, d)))
                .collect(),
        )
    }

    pub fn as_discrete(&self) -> Option<&AtomLaw> {
        match self {
            Self::Discrete(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete(_))
    }

    pub fn support_size(&self) -> Option<usize> {
        self.as_discrete().map(AtomLaw::len)
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Self::Uniform(u) => x >= u.lo && x <= u.hi,
            Self::Normal(_) => x.is_finite(),
            Self::Discrete(a) => a.index_of(x).is_some(),
        }
    }
}

/// Expected value. Exact (as f64 of a rational) for discrete laws.
pub fn mean(d: &Distribution) -> f64 {
    match d {
        Distribution::Uniform(u) => 0.5 * (u.lo + u.hi),
        Distribution::Normal(n) => n.mean,
        Distribution::Discrete(a) => rational::to_f64(&a.mean_exact()),
    }
}

pub fn mean_exact(d: &Distribution) -> Option<Rational> {
    d.as_discrete().map(AtomLaw::mean_exact)
}

pub fn cdf(d: &Distribution, x: f64) -> f64 {
    match d {
        Distribution::Uniform(u) => ((x - u.lo) / (u.hi - u.lo)).clamp(0.0, 1.0),
        Distribution::Normal(n) => normal::cdf((x - n.mean) / n.sd),
        Distribution::Discrete(a) => a.cdf(x),
    }
}

/// Inverse-CDF transform of a uniform variate.
pub fn quantile(d: &Distribution, u: f64) -> f64 {
    match d {
        Distribution::Uniform(un) => un.lo + u * (un.hi - un.lo),
        Distribution::Normal(n) => n.mean + n.sd * normal::quantile(u),
        Distribution::Discrete(a) => a.values_f[a.quantile_index(u)],
    }
}

pub fn sample(d: &Distribution, stream: &mut RandomStream) -> f64 {
    quantile(d, stream.next_uniform())
}

/// Information a bidder receives about one characteristic.
#[derive(Debug, Clone, PartialEq)]
pub enum InfoLevel {
    NoInfo,
    FullInfo,
    /// Interval partition `(-inf, c_1), [c_1, c_2), ..., [c_k, inf)`.
    Cutpoints(Vec<f64>),
    /// One cell label per support point of a discrete law.
    Cells(Vec<usize>),
}

impl InfoLevel {
    /// Canonical form with respect to `d`: single-cell partitions become `NoInfo`,
    /// discrete `FullInfo` becomes the all-singletons `Cells`, cutpoints on discrete
    /// laws become `Cells`, and labels are renumbered by first occurrence.
    pub fn canonical(&self, d: &Distribution) -> Result<InfoLevel, DistError> {
        match (self, d) {
            (InfoLevel::NoInfo, _) => Ok(InfoLevel::NoInfo),
            (InfoLevel::FullInfo, Distribution::Discrete(a)) => {
                Ok(InfoLevel::Cells((0..a.len()).collect()))
            }
            (InfoLevel::FullInfo, _) => Ok(InfoLevel::FullInfo),
            (InfoLevel::Cutpoints(cuts), _) => {
                if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(DistError::BadCutpoints);
                }
                match d {
                    Distribution::Uniform(u) => {
                        let kept: Vec<f64> =
                            cuts.iter().copied().filter(|&c| c > u.lo && c < u.hi).collect();
                        Ok(if kept.is_empty() { InfoLevel::NoInfo } else { InfoLevel::Cutpoints(kept) })
                    }
                    Distribution::Normal(_) => Ok(if cuts.is_empty() {
                        InfoLevel::NoInfo
                    } else {
                        InfoLevel::Cutpoints(cuts.clone())
                    }),
                    Distribution::Discrete(a) => {
                        let labels = a
                            .values_f
                            .iter()
                            .map(|&v| cuts.iter().filter(|&&c| c <= v).count())
                            .collect();
                        InfoLevel::Cells(labels).canonical(d)
                    }
                }
            }
            (InfoLevel::Cells(labels), Distribution::Discrete(a)) => {
                if labels.len() != a.len() {
                    return Err(DistError::CellLabelCount { expected: a.len(), got: labels.len() });
                }
                let mut seen: Vec<usize> = Vec::new();
                let relabeled: Vec<usize> = labels
                    .iter()
                    .map(|l| match seen.iter().position(|s| s == l) {
                        Some(k) => k,
                        None => {
                            seen.push(*l);
                            seen.len() - 1
                        }
                    })
                    .collect();
                Ok(if seen.len() == 1 { InfoLevel::NoInfo } else { InfoLevel::Cells(relabeled) })
            }
            (InfoLevel::Cells(_), _) => Err(DistError::CellsOnContinuous),
        }
    }

    /// True when every support point is its own cell (or the law is continuous and fully revealed).
    pub fn is_full(&self, d: &Distribution) -> bool {
        match (self, d) {
            (InfoLevel::FullInfo, _) => true,
            (InfoLevel::Cells(l), Distribution::Discrete(a)) => {
                let mut sorted = l.clone();
                sorted.sort_unstable();
                sorted.dedup();
                sorted.len() == a.len()
            }
            _ => false,
        }
    }
}

/// Realized element of a bidder's information partition.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalCell {
    /// The whole support (no information).
    Whole,
    /// Interval `[lo, hi)` with its index in the cutpoint partition.
    Interval { index: usize, lo: f64, hi: f64 },
    /// Set of discrete support points sharing a label.
    Atoms { label: usize },
    /// Full information on a continuous law: the value itself.
    Exact(f64),
}

pub fn cell_of(d: &Distribution, level: &InfoLevel, x: f64) -> Result<SignalCell, DistError> {
    if !d.contains(x) {
        return Err(DistError::OutsideSupport(x));
    }
    match level.canonical(d)? {
        InfoLevel::NoInfo => Ok(SignalCell::Whole),
        InfoLevel::FullInfo => Ok(SignalCell::Exact(x)),
        InfoLevel::Cutpoints(cuts) => {
            let index = cuts.iter().filter(|&&c| c <= x).count();
            let (lo, hi) = interval_bounds(d, &cuts, index);
            Ok(SignalCell::Interval { index, lo, hi })
        }
        InfoLevel::Cells(labels) => {
            let a = d.as_discrete().ok_or(DistError::CellsOnContinuous)?;
            let k = a.index_of(x).ok_or(DistError::OutsideSupport(x))?;
            Ok(SignalCell::Atoms { label: labels[k] })
        }
    }
}

fn interval_bounds(d: &Distribution, cuts: &[f64], index: usize) -> (f64, f64) {
    let (s_lo, s_hi) = match d {
        Distribution::Uniform(u) => (u.lo, u.hi),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let lo = if index == 0 { s_lo } else { cuts[index - 1] };
    let hi = if index == cuts.len() { s_hi } else { cuts[index] };
    (lo, hi)
}

/// Probability and conditional mean of `X` on the interval `[lo, hi)`.
fn interval_moments(d: &Distribution, lo: f64, hi: f64) -> (f64, f64) {
    match d {
        Distribution::Uniform(u) => {
            let (a, b) = (lo.max(u.lo), hi.min(u.hi));
            ((b - a) / (u.hi - u.lo), 0.5 * (a + b))
        }
        Distribution::Normal(n) => {
            let (a, b) = ((lo - n.mean) / n.sd, (hi - n.mean) / n.sd);
            let mass = normal::interval_mass(a, b);
            let dens = |z: f64| if z.is_finite() { normal::pdf(z) } else { 0.0 };
            (mass, n.mean + n.sd * (dens(a) - dens(b)) / mass)
        }
        Distribution::Discrete(_) => unreachable!("discrete cells use labels"),
    }
}

/// `E[X | cell]` under the given information level.
pub fn conditional_mean(d: &Distribution, level: &InfoLevel, cell: &SignalCell) -> Result<f64, DistError> {
    match (level.canonical(d)?, cell) {
        (InfoLevel::NoInfo, SignalCell::Whole) => Ok(mean(d)),
        (InfoLevel::FullInfo, SignalCell::Exact(x)) if d.contains(*x) => Ok(*x),
        (InfoLevel::Cutpoints(cuts), SignalCell::Interval { index, .. }) if *index <= cuts.len() => {
            let (lo, hi) = interval_bounds(d, &cuts, *index);
            Ok(interval_moments(d, lo, hi).1)
        }
        (InfoLevel::Cells(_), SignalCell::Atoms { .. }) => {
            conditional_mean_exact(d, level, cell).map(|r| rational::to_f64(&r))
        }
        _ => Err(DistError::InvalidCell),
    }
}

/// Exact `E[X | cell]` for discrete laws.
pub fn conditional_mean_exact(d: &Distribution, level: &InfoLevel, cell: &SignalCell) -> Result<Rational, DistError> {
    let a = d
        .as_discrete()
        .ok_or(DistError::Unsupported("exact conditional means need a discrete law"))?;
    match (level.canonical(d)?, cell) {
        (InfoLevel::NoInfo, SignalCell::Whole) => Ok(a.mean_exact()),
        (InfoLevel::Cells(labels), SignalCell::Atoms { label }) => {
            let (mut mass, mut weighted) = (Rational::zero(), Rational::zero());
            for ((v, p), l) in a.atoms().zip(&labels) {
                if l == label {
                    mass += p;
                    weighted += v * p;
                }
            }
            if mass.is_zero() {
                return Err(DistError::InvalidCell);
            }
            Ok(weighted / mass)
        }
        _ => Err(DistError::InvalidCell),
    }
}

/// All cells of a finite partition with their probabilities (f64).
/// Not available for full information on a continuous law.
pub fn cells(d: &Distribution, level: &InfoLevel) -> Result<Vec<(SignalCell, f64)>, DistError> {
    match level.canonical(d)? {
        InfoLevel::NoInfo => Ok(vec![(SignalCell::Whole, 1.0)]),
        InfoLevel::FullInfo => Err(DistError::Unsupported("full information on a continuous law has no finite cells")),
        InfoLevel::Cutpoints(cuts) => Ok((0..=cuts.len())
            .map(|index| {
                let (lo, hi) = interval_bounds(d, &cuts, index);
                (SignalCell::Interval { index, lo, hi }, interval_moments(d, lo, hi).0)
            })
            .collect()),
        InfoLevel::Cells(labels) => {
            let a = d.as_discrete().expect("cells imply discrete");
            let count = labels.iter().max().map_or(0, |m| m + 1);
            Ok((0..count)
                .map(|label| {
                    let p: Rational = a
                        .probs()
                        .iter()
                        .zip(&labels)
                        .filter(|(_, l)| **l == label)
                        .map(|(p, _)| p.clone())
                        .sum();
                    (SignalCell::Atoms { label }, rational::to_f64(&p))
                })
                .collect())
        }
    }
}

/// Precomputed map from a realized value to the bidder's estimate of it.
#[derive(Debug, Clone)]
pub enum SignalMap {
    Constant(f64),
    Identity,
    Intervals { cuts: Vec<f64>, means: Vec<f64> },
    /// Estimate per discrete support point, exact and as f64.
    Atoms { exact: Vec<Rational>, approx: Vec<f64>, values: Vec<f64> },
}

impl SignalMap {
    pub fn new(d: &Distribution, level: &InfoLevel) -> Result<Self, DistError> {
        let level = level.canonical(d)?;
        match (d, &level) {
            (Distribution::Discrete(a), _) => {
                let labels: Vec<usize> = match &level {
                    InfoLevel::Cells(l) => l.clone(),
                    _ => vec![0; a.len()],
                };
                let exact = labels
                    .iter()
                    .map(|&label| {
                        if matches!(level, InfoLevel::NoInfo) {
                            conditional_mean_exact(d, &level, &SignalCell::Whole)
                        } else {
                            conditional_mean_exact(d, &level, &SignalCell::Atoms { label })
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let approx = exact.iter().map(rational::to_f64).collect();
                Ok(Self::Atoms { exact, approx, values: a.values_f.clone() })
            }
            (_, InfoLevel::NoInfo) => Ok(Self::Constant(mean(d))),
            (_, InfoLevel::FullInfo) => Ok(Self::Identity),
            (_, InfoLevel::Cutpoints(cuts)) => {
                let means = (0..=cuts.len())
                    .map(|index| {
                        let (lo, hi) = interval_bounds(d, cuts, index);
                        interval_moments(d, lo, hi).1
                    })
                    .collect();
                Ok(Self::Intervals { cuts: cuts.clone(), means })
            }
            (_, InfoLevel::Cells(_)) => Err(DistError::CellsOnContinuous),
        }
    }

    pub fn estimate(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Identity => x,
            Self::Intervals { cuts, means } => means[cuts.partition_point(|&c| c <= x)],
            Self::Atoms { approx, values, .. } => {
                let k = values.partition_point(|&v| v < x).min(values.len() - 1);
                approx[k]
            }
        }
    }

    /// Exact estimate for the `k`-th support point of a discrete law.
    pub fn estimate_atom(&self, k: usize) -> Option<&Rational> {
        match self {
            Self::Atoms { exact, .. } => exact.get(k),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::rational::{int, ratio};
    use super::*;

    fn two_point() -> Distribution {
        Distribution::discrete_ratios(&[(0, 1, 2), (1, 1, 2)]).unwrap()
    }

    #[test]
    fn means() {
        assert_eq!(mean(&Distribution::uniform(-6.0, 5.0).unwrap()), -0.5);
        assert_eq!(mean(&Distribution::normal(1.3, 2.0).unwrap()), 1.3);
        let d = Distribution::discrete_ratios(&[(0, 1, 2), (2, 1, 2)]).unwrap();
        assert_eq!(mean_exact(&d), Some(int(1)));
    }

    #[test]
    fn cdf_values() {
        assert_eq!(cdf(&Distribution::uniform(0.0, 5.0).unwrap(), 2.5), 0.5);
        assert_eq!(cdf(&two_point(), 0.0), 0.5);
        assert_eq!(cdf(&two_point(), -0.1), 0.0);
        assert!((cdf(&Distribution::normal(0.0, 1.0).unwrap(), 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_cdf_sampling() {
        assert_eq!(quantile(&Distribution::uniform(0.0, 5.0).unwrap(), 0.2), 1.0);
        assert_eq!(quantile(&two_point(), 0.75), 1.0);
        assert_eq!(quantile(&two_point(), 0.5), 0.0);
        assert!(quantile(&Distribution::normal(0.0, 1.0).unwrap(), 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_laws() {
        assert!(matches!(Distribution::uniform(1.0, 1.0), Err(DistError::UniformBounds { .. })));
        assert!(matches!(Distribution::normal(0.0, 0.0), Err(DistError::NormalScale(_))));
        assert!(matches!(
            Distribution::discrete_ratios(&[(0, 1, 1)]),
            Err(DistError::TooFewAtoms(1))
        ));
        assert!(matches!(
            Distribution::discrete_ratios(&[(1, 1, 2), (0, 1, 2)]),
            Err(DistError::UnsortedSupport)
        ));
        assert!(matches!(
            Distribution::discrete_ratios(&[(0, 1, 2), (1, 2, 5)]),
            Err(DistError::ProbabilitySum(s)) if s == "9/10"
        ));
        assert!(matches!(
            Distribution::discrete_ratios(&[(0, 0, 2), (1, 1, 1)]),
            Err(DistError::NonPositiveProbability(_))
        ));
    }

    #[test]
    fn conditional_means_on_cells() {
        let u = Distribution::uniform(0.0, 5.0).unwrap();
        let cut = InfoLevel::Cutpoints(vec![2.0]);
        let low = cell_of(&u, &cut, 1.0).unwrap();
        assert_eq!(low, SignalCell::Interval { index: 0, lo: 0.0, hi: 2.0 });
        assert_eq!(conditional_mean(&u, &cut, &low).unwrap(), 1.0);
        assert_eq!(
            cell_of(&u, &cut, 3.1).unwrap(),
            SignalCell::Interval { index: 1, lo: 2.0, hi: 5.0 }
        );
        for d in [u.clone(), Distribution::normal(2.0, 3.0).unwrap(), two_point()] {
            let x = if d.is_discrete() { 1.0 } else { 0.7 };
            let c = cell_of(&d, &InfoLevel::NoInfo, x).unwrap();
            assert_eq!(c, SignalCell::Whole);
            assert_eq!(conditional_mean(&d, &InfoLevel::NoInfo, &c).unwrap(), mean(&d));
        }
        let d = Distribution::discrete_ratios(&[(0, 1, 2), (1, 1, 4), (3, 1, 4)]).unwrap();
        let part = InfoLevel::Cells(vec![0, 1, 1]);
        let c = cell_of(&d, &part, 3.0).unwrap();
        assert_eq!(conditional_mean_exact(&d, &part, &c).unwrap(), int(2));
        let full = cell_of(&two_point(), &InfoLevel::FullInfo, 1.0).unwrap();
        assert_eq!(full, SignalCell::Atoms { label: 1 });
        assert_eq!(conditional_mean(&two_point(), &InfoLevel::FullInfo, &full).unwrap(), 1.0);
    }

    #[test]
    fn cell_errors() {
        let u = Distribution::uniform(0.0, 5.0).unwrap();
        assert!(matches!(cell_of(&u, &InfoLevel::NoInfo, 6.0), Err(DistError::OutsideSupport(_))));
        assert!(matches!(
            cell_of(&two_point(), &InfoLevel::FullInfo, 0.5),
            Err(DistError::OutsideSupport(_))
        ));
        assert!(matches!(
            conditional_mean(&u, &InfoLevel::NoInfo, &SignalCell::Atoms { label: 0 }),
            Err(DistError::InvalidCell)
        ));
        assert!(matches!(
            InfoLevel::Cells(vec![0, 1]).canonical(&u),
            Err(DistError::CellsOnContinuous)
        ));
    }

    #[test]
    fn canonical_forms() {
        let d = Distribution::discrete_ratios(&[(0, 1, 3), (1, 1, 3), (2, 1, 3)]).unwrap();
        assert_eq!(InfoLevel::FullInfo.canonical(&d).unwrap(), InfoLevel::Cells(vec![0, 1, 2]));
        assert_eq!(InfoLevel::Cells(vec![4, 4, 4]).canonical(&d).unwrap(), InfoLevel::NoInfo);
        assert_eq!(InfoLevel::Cells(vec![7, 2, 7]).canonical(&d).unwrap(), InfoLevel::Cells(vec![0, 1, 0]));
        assert_eq!(
            InfoLevel::Cutpoints(vec![0.5]).canonical(&d).unwrap(),
            InfoLevel::Cells(vec![0, 1, 1])
        );
        let u = Distribution::uniform(0.0, 5.0).unwrap();
        assert_eq!(InfoLevel::Cutpoints(vec![-1.0, 7.0]).canonical(&u).unwrap(), InfoLevel::NoInfo);
        assert!(InfoLevel::FullInfo.is_full(&d));
        assert!(InfoLevel::Cells(vec![2, 0, 1]).is_full(&d));
    }

    #[test]
    fn iterated_expectations_on_partitions() {
        let d = Distribution::discrete_ratios(&[(-2, 1, 6), (1, 1, 3), (5, 1, 2)]).unwrap();
        let level = InfoLevel::Cells(vec![0, 1, 0]);
        let total: Rational = cells(&d, &level)
            .unwrap()
            .iter()
            .map(|(c, _)| {
                let p: Rational = d
                    .as_discrete()
                    .unwrap()
                    .probs()
                    .iter()
                    .zip([0usize, 1, 0])
                    .filter(|(_, l)| matches!(c, SignalCell::Atoms { label } if label == l))
                    .map(|(p, _)| p.clone())
                    .sum();
                p * conditional_mean_exact(&d, &level, c).unwrap()
            })
            .sum();
        assert_eq!(total, mean_exact(&d).unwrap());

        for d in [Distribution::uniform(-1.0, 4.0).unwrap(), Distribution::normal(0.3, 1.7).unwrap()] {
            let level = InfoLevel::Cutpoints(vec![-0.4, 0.9, 2.5]);
            let total: f64 = cells(&d, &level)
                .unwrap()
                .iter()
                .map(|(c, p)| p * conditional_mean(&d, &level, c).unwrap())
                .sum();
            assert!((total - mean(&d)).abs() < 1e-9, "{total} vs {}", mean(&d));
        }
    }

    #[test]
    fn signal_maps_match_conditional_means() {
        let d = Distribution::discrete_ratios(&[(0, 1, 2), (1, 1, 4), (3, 1, 4)]).unwrap();
        let m = SignalMap::new(&d, &InfoLevel::Cells(vec![0, 1, 1])).unwrap();
        assert_eq!(m.estimate(3.0), 2.0);
        assert_eq!(m.estimate_atom(0), Some(&int(0)));
        assert_eq!(m.estimate_atom(1), Some(&int(2)));
        let n = SignalMap::new(&d, &InfoLevel::NoInfo).unwrap();
        assert_eq!(n.estimate_atom(2), Some(&ratio(1, 1)));
        let u = Distribution::uniform(0.0, 5.0).unwrap();
        let iv = SignalMap::new(&u, &InfoLevel::Cutpoints(vec![2.0])).unwrap();
        assert_eq!(iv.estimate(1.9), 1.0);
        assert_eq!(iv.estimate(2.0), 3.5);
    }
}
