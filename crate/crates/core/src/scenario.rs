//! Bidders, characteristics, awareness sets and disclosure policies.
//!
//! Characteristics are 0-based in code (`j = 0` is the mandatory default
//! characteristic) and 1-based in every message and file.

use std::fmt;

use thiserror::Error;

use crate::dist_core::{DistError, Distribution, InfoLevel};

/// Largest number of characteristics an [`AwarenessSet`] can hold.
pub const MAX_CHARACTERISTICS: usize = 31;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("a scenario needs at least one bidder")]
    NoBidders,
    #[error("a scenario needs between 1 and {MAX_CHARACTERISTICS} characteristics (got {0})")]
    CharacteristicCount(usize),
    #[error("expected {expected} laws for the bidder-by-characteristic matrix, got {got}")]
    LawCount { expected: usize, got: usize },
    #[error("expected {expected} per-bidder entries, got {got}")]
    BidderCount { expected: usize, got: usize },
    #[error("characteristic {0} does not exist")]
    UnknownCharacteristic(usize),
    #[error("bidder {bidder}: awareness set must contain characteristic 1")]
    MissingDefault { bidder: usize },
    #[error("bidder {bidder}: information on unaware characteristic {characteristic}")]
    InfoOnUnaware { bidder: usize, characteristic: usize },
    #[error("bidder {bidder}: no information level for characteristic {characteristic}")]
    MissingInfo { bidder: usize, characteristic: usize },
    #[error("bidder {bidder}, characteristic {characteristic}: {source}")]
    Info { bidder: usize, characteristic: usize, source: DistError },
}

/// A set of characteristics, stored as a bitmask (bit `j` is characteristic `j + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AwarenessSet(u32);

impl AwarenessSet {
    /// The least element of the lattice: only characteristic 1.
    pub fn base() -> Self {
        Self(1)
    }

    pub fn full(m: usize) -> Self {
        Self(((1u64 << m) - 1) as u32)
    }

    pub fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    /// From 1-based characteristic ids.
    pub fn from_ids(ids: &[usize]) -> Self {
        Self(ids.iter().fold(0, |acc, &id| acc | 1 << (id - 1)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, j: usize) -> bool {
        j < 32 && self.0 >> j & 1 == 1
    }

    pub fn with(self, j: usize) -> Self {
        Self(self.0 | 1 << j)
    }

    pub fn without(self, j: usize) -> Self {
        Self(self.0 & !(1 << j))
    }

    pub fn intersect(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Member of the lattice: contains characteristic 1.
    pub fn is_admissible(self) -> bool {
        self.contains(0)
    }

    /// 0-based members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&j| self.contains(j))
    }

    /// 1-based members in increasing order.
    pub fn ids(self) -> Vec<usize> {
        self.iter().map(|j| j + 1).collect()
    }
}

impl fmt::Display for AwarenessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.ids().iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

/// All lattice members for `m` characteristics, by cardinality then lexicographically.
pub fn lattice(m: usize) -> Vec<AwarenessSet> {
    assert!((1..=MAX_CHARACTERISTICS).contains(&m), "lattice needs 1..={MAX_CHARACTERISTICS} characteristics");
    let mut sets: Vec<AwarenessSet> = (0..1u32 << (m - 1)).map(|rest| AwarenessSet(1 | rest << 1)).collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.ids().cmp(&b.ids())));
    sets
}

/// The n-by-m matrix of characteristic laws.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    n: usize,
    m: usize,
    laws: Vec<Distribution>,
}

impl Scenario {
    /// `laws` is row-major: entry `i * m + j` is bidder `i`'s law for characteristic `j`.
    pub fn new(n: usize, m: usize, laws: Vec<Distribution>) -> Result<Self, ScenarioError> {
        if n == 0 {
            return Err(ScenarioError::NoBidders);
        }
        if m == 0 || m > MAX_CHARACTERISTICS {
            return Err(ScenarioError::CharacteristicCount(m));
        }
        if laws.len() != n * m {
            return Err(ScenarioError::LawCount { expected: n * m, got: laws.len() });
        }
        Ok(Self { n, m, laws })
    }

    pub fn bidders(&self) -> usize {
        self.n
    }

    pub fn characteristics(&self) -> usize {
        self.m
    }

    pub fn law(&self, i: usize, j: usize) -> &Distribution {
        &self.laws[i * self.m + j]
    }

    pub fn laws(&self) -> &[Distribution] {
        &self.laws
    }

    pub fn full_set(&self) -> AwarenessSet {
        AwarenessSet::full(self.m)
    }

    pub fn is_all_discrete(&self) -> bool {
        self.laws.iter().all(Distribution::is_discrete)
    }
}

/// Awareness per bidder and information per aware (bidder, characteristic) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DisclosurePolicy {
    awareness: Vec<AwarenessSet>,
    /// `info[i][j]` is `Some` exactly when `j` is in bidder `i`'s awareness set.
    info: Vec<Vec<Option<InfoLevel>>>,
}

impl DisclosurePolicy {
    /// Checks every invariant and canonicalizes the information levels.
    pub fn validate(
        s: &Scenario,
        awareness: Vec<AwarenessSet>,
        info: Vec<Vec<Option<InfoLevel>>>,
    ) -> Result<Self, ScenarioError> {
        if awareness.len() != s.n {
            return Err(ScenarioError::BidderCount { expected: s.n, got: awareness.len() });
        }
        if info.len() != s.n {
            return Err(ScenarioError::BidderCount { expected: s.n, got: info.len() });
        }
        let full = s.full_set();
        let mut canonical = Vec::with_capacity(s.n);
        for (i, (set, row)) in awareness.iter().zip(info).enumerate() {
            if let Some(j) = set.iter().find(|&j| !full.contains(j)) {
                return Err(ScenarioError::UnknownCharacteristic(j + 1));
            }
            if !set.is_admissible() {
                return Err(ScenarioError::MissingDefault { bidder: i + 1 });
            }
            if row.len() > s.m {
                return Err(ScenarioError::UnknownCharacteristic(row.len()));
            }
            let mut out = vec![None; s.m];
            for j in 0..s.m {
                let level = row.get(j).cloned().flatten();
                match (set.contains(j), level) {
                    (true, Some(level)) => {
                        let c = level.canonical(s.law(i, j)).map_err(|source| ScenarioError::Info {
                            bidder: i + 1,
                            characteristic: j + 1,
                            source,
                        })?;
                        out[j] = Some(c);
                    }
                    (true, None) => {
                        return Err(ScenarioError::MissingInfo { bidder: i + 1, characteristic: j + 1 })
                    }
                    (false, Some(_)) => {
                        return Err(ScenarioError::InfoOnUnaware { bidder: i + 1, characteristic: j + 1 })
                    }
                    (false, None) => {}
                }
            }
            canonical.push(out);
        }
        Ok(Self { awareness, info: canonical })
    }

    /// Every aware pair gets the level returned by `level(i, j)`.
    pub fn with_levels(
        s: &Scenario,
        awareness: Vec<AwarenessSet>,
        mut level: impl FnMut(usize, usize) -> InfoLevel,
    ) -> Result<Self, ScenarioError> {
        let info = awareness
            .iter()
            .enumerate()
            .map(|(i, set)| (0..s.m).map(|j| set.contains(j).then(|| level(i, j))).collect())
            .collect();
        Self::validate(s, awareness, info)
    }

    /// Full information on every aware pair.
    pub fn full_info(s: &Scenario, awareness: Vec<AwarenessSet>) -> Result<Self, ScenarioError> {
        Self::with_levels(s, awareness, |_, _| InfoLevel::FullInfo)
    }

    pub fn bidders(&self) -> usize {
        self.awareness.len()
    }

    pub fn awareness(&self, i: usize) -> AwarenessSet {
        self.awareness[i]
    }

    pub fn awareness_sets(&self) -> &[AwarenessSet] {
        &self.awareness
    }

    pub fn info(&self, i: usize, j: usize) -> Option<&InfoLevel> {
        self.info[i].get(j).and_then(Option::as_ref)
    }

    /// Number of aware (bidder, characteristic) pairs.
    pub fn aware_pairs(&self) -> usize {
        self.awareness.iter().map(|a| a.len()).sum()
    }

    pub fn all_equal_awareness(&self) -> bool {
        self.awareness.windows(2).all(|w| w[0] == w[1])
    }

    /// Union of all bidders' awareness sets.
    pub fn union_awareness(&self) -> AwarenessSet {
        self.awareness.iter().fold(AwarenessSet(0), |acc, a| acc.union(*a))
    }
}

/// Awareness level from which expectations are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Perspective(AwarenessSet);

impl Perspective {
    pub fn new(view: AwarenessSet) -> Option<Self> {
        view.is_admissible().then_some(Self(view))
    }

    pub fn full(m: usize) -> Self {
        Self(AwarenessSet::full(m))
    }

    pub fn of_bidder(p: &DisclosurePolicy, i: usize) -> Self {
        Self(p.awareness(i))
    }

    pub fn set(self) -> AwarenessSet {
        self.0
    }
}

/// The policy as seen from `view`: bidder k is perceived as aware of `M^k ∩ view`
/// and keeps its information only on those characteristics.
pub fn perceive(p: &DisclosurePolicy, view: Perspective) -> DisclosurePolicy {
    let awareness: Vec<AwarenessSet> = p.awareness.iter().map(|a| a.intersect(view.0)).collect();
    let info = p
        .info
        .iter()
        .zip(&awareness)
        .map(|(row, set)| {
            row.iter()
                .enumerate()
                .map(|(j, level)| if set.contains(j) { level.clone() } else { None })
                .collect()
        })
        .collect();
    DisclosurePolicy { awareness, info }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_core::Distribution;
    use proptest::prelude::*;

    fn coin() -> Distribution {
        Distribution::discrete_ratios(&[(0, 1, 2), (1, 1, 2)]).unwrap()
    }

    fn scenario(n: usize, m: usize) -> Scenario {
        Scenario::new(n, m, vec![coin(); n * m]).unwrap()
    }

    fn sets(ids: &[&[usize]]) -> Vec<AwarenessSet> {
        ids.iter().map(|s| AwarenessSet::from_ids(s)).collect()
    }

    #[test]
    fn validation_errors() {
        let s = scenario(2, 2);
        assert!(DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1]])).is_ok());

        let err = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[2]])).unwrap_err();
        assert_eq!(err, ScenarioError::MissingDefault { bidder: 2 });
        assert!(err.to_string().contains("awareness set must contain characteristic 1"));

        let info = vec![
            vec![Some(InfoLevel::FullInfo), Some(InfoLevel::FullInfo)],
            vec![Some(InfoLevel::FullInfo), Some(InfoLevel::FullInfo)],
        ];
        let err = DisclosurePolicy::validate(&s, sets(&[&[1, 2], &[1]]), info).unwrap_err();
        assert_eq!(err, ScenarioError::InfoOnUnaware { bidder: 2, characteristic: 2 });
        assert!(err.to_string().contains("information on unaware characteristic"));

        let err = DisclosurePolicy::full_info(&s, sets(&[&[1, 3], &[1]])).unwrap_err();
        assert_eq!(err, ScenarioError::UnknownCharacteristic(3));

        assert_eq!(Scenario::new(2, 2, vec![coin(); 3]).unwrap_err(), ScenarioError::LawCount { expected: 4, got: 3 });
    }

    #[test]
    fn info_levels_are_canonical() {
        let s = scenario(2, 1);
        let p = DisclosurePolicy::with_levels(&s, sets(&[&[1], &[1]]), |i, _| {
            if i == 0 { InfoLevel::Cells(vec![4, 4]) } else { InfoLevel::FullInfo }
        })
        .unwrap();
        assert_eq!(p.info(0, 0), Some(&InfoLevel::NoInfo));
        assert_eq!(p.info(1, 0), Some(&InfoLevel::Cells(vec![0, 1])));
    }

    #[test]
    fn lattice_order() {
        let show = |m| lattice(m).iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(show(1), ["{1}"]);
        assert_eq!(show(2), ["{1}", "{1,2}"]);
        assert_eq!(show(3), ["{1}", "{1,2}", "{1,3}", "{1,2,3}"]);
        assert_eq!(lattice(5).len(), 16);
    }

    #[test]
    fn perceive_examples() {
        let s = scenario(2, 3);
        let p = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1]])).unwrap();
        let seen = perceive(&p, Perspective::new(AwarenessSet::base()).unwrap());
        assert_eq!(seen.awareness_sets(), sets(&[&[1], &[1]]).as_slice());
        assert_eq!(seen.info(0, 1), None);
        assert_eq!(perceive(&p, Perspective::full(3)), p);

        let q = DisclosurePolicy::full_info(&s, sets(&[&[1, 2], &[1, 3]])).unwrap();
        let seen = perceive(&q, Perspective::new(AwarenessSet::from_ids(&[1, 3])).unwrap());
        assert_eq!(seen.awareness_sets(), sets(&[&[1], &[1, 3]]).as_slice());
    }

    fn arb_policy() -> impl Strategy<Value = (Scenario, DisclosurePolicy)> {
        (2usize..=4, 1usize..=4).prop_flat_map(|(n, m)| {
            let half = 1u32 << (m - 1);
            (
                proptest::collection::vec(0..half, n),
                proptest::collection::vec(proptest::bool::ANY, n * m),
            )
                .prop_map(move |(rest, full)| {
                    let s = scenario(n, m);
                    let awareness = rest.iter().map(|r| AwarenessSet::from_bits(1 | r << 1)).collect();
                    let p = DisclosurePolicy::with_levels(&s, awareness, |i, j| {
                        if full[i * m + j] { InfoLevel::FullInfo } else { InfoLevel::NoInfo }
                    })
                    .unwrap();
                    (s, p)
                })
        })
    }

    proptest! {
        #[test]
        fn perceive_is_idempotent((s, p) in arb_policy(), pick in 0usize..64) {
            let all = lattice(s.characteristics());
            let v = Perspective::new(all[pick % all.len()]).unwrap();
            let once = perceive(&p, v);
            prop_assert_eq!(perceive(&once, v), once);
        }

        #[test]
        fn perceive_composes((s, p) in arb_policy(), a in 0usize..64, b in 0usize..64) {
            let all = lattice(s.characteristics());
            let (x, y) = (all[a % all.len()], all[b % all.len()]);
            let outer = Perspective::new(x.union(y)).unwrap();
            let inner = Perspective::new(x).unwrap();
            prop_assert_eq!(perceive(&p, inner), perceive(&perceive(&p, outer), inner));
        }

        #[test]
        fn own_view_keeps_own_row((_s, p) in arb_policy()) {
            for i in 0..p.bidders() {
                let seen = perceive(&p, Perspective::of_bidder(&p, i));
                prop_assert_eq!(seen.awareness(i), p.awareness(i));
                for j in 0..32 {
                    prop_assert_eq!(seen.info(i, j), p.info(i, j));
                }
            }
        }

        #[test]
        fn lattice_closed_under_intersection(m in 1usize..=6) {
            let all = lattice(m);
            prop_assert_eq!(all.len(), 1 << (m - 1));
            prop_assert_eq!(all[0], AwarenessSet::base());
            prop_assert_eq!(*all.last().unwrap(), AwarenessSet::full(m));
            for a in &all {
                prop_assert!(a.is_admissible());
                prop_assert!(AwarenessSet::base().is_subset(*a) && a.is_subset(AwarenessSet::full(m)));
                for b in &all {
                    prop_assert!(all.contains(&a.intersect(*b)));
                }
            }
        }
    }
}
