//! Instances, allocations, partitions, thresholds and priority ranks.
//!
//! Agents and goods are 0-indexed. Good `k` here is good `k+1` in the usual
//! 1-indexed notation, so the "first" (most valuable) good of an ordered
//! instance is index 0.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numeric::{is_nonnegative, Rational};

/// A set of good indices.
pub type Bundle = BTreeSet<usize>;

/// `n` agents with exact additive valuations over `m` goods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    goods: usize,
    valuations: Vec<Vec<Rational>>,
}

impl Instance {
    pub fn new(goods: usize, valuations: Vec<Vec<Rational>>) -> Result<Self> {
        if valuations.is_empty() {
            return Err(Error::NoAgents);
        }
        for (agent, row) in valuations.iter().enumerate() {
            if row.len() != goods {
                return Err(Error::DimensionMismatch {
                    what: "valuation row length",
                    expected: goods,
                    found: row.len(),
                });
            }
            if let Some(good) = row.iter().position(|v| !is_nonnegative(v)) {
                return Err(Error::NegativeValue { agent, good });
            }
        }
        Ok(Self { goods, valuations })
    }

    /// Builds an instance from rows of equal length.
    pub fn from_rows(valuations: Vec<Vec<Rational>>) -> Result<Self> {
        let goods = valuations.first().map_or(0, Vec::len);
        Self::new(goods, valuations)
    }

    pub fn from_integers<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| crate::numeric::int(v)).collect())
                .collect(),
        )
    }

    pub fn agents(&self) -> usize {
        self.valuations.len()
    }

    pub fn goods(&self) -> usize {
        self.goods
    }

    pub fn value(&self, agent: usize, good: usize) -> &Rational {
        &self.valuations[agent][good]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.valuations[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.valuations
    }

    pub fn into_rows(self) -> Vec<Vec<Rational>> {
        self.valuations
    }

    pub fn all_goods(&self) -> Bundle {
        (0..self.goods).collect()
    }

    pub fn total_value(&self, agent: usize) -> Rational {
        self.valuations[agent].iter().sum()
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent < self.agents() {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange {
                agent,
                agents: self.agents(),
            })
        }
    }

    pub fn check_goods<'a>(&self, goods: impl IntoIterator<Item = &'a usize>) -> Result<()> {
        match goods.into_iter().find(|&&g| g >= self.goods) {
            Some(&good) => Err(Error::GoodOutOfRange {
                good,
                goods: self.goods,
            }),
            None => Ok(()),
        }
    }

    /// True when every agent's values are non-increasing in good index.
    pub fn is_ordered(&self) -> bool {
        self.valuations
            .iter()
            .all(|row| row.windows(2).all(|w| w[0] >= w[1]))
    }

    /// Instance restricted to the given agents, in the given order.
    pub fn select_agents(&self, agents: &[usize]) -> Result<Self> {
        for &a in agents {
            self.check_agent(a)?;
        }
        Self::new(
            self.goods,
            agents.iter().map(|&a| self.valuations[a].clone()).collect(),
        )
    }
}

/// Exact value of `bundle` to `agent`.
pub fn bundle_value<'a>(
    inst: &Instance,
    agent: usize,
    bundle: impl IntoIterator<Item = &'a usize>,
) -> Result<Rational> {
    inst.check_agent(agent)?;
    let row = inst.row(agent);
    let mut total = Rational::zero();
    for &g in bundle {
        let v = row.get(g).ok_or(Error::GoodOutOfRange {
            good: g,
            goods: inst.goods(),
        })?;
        total += v;
    }
    Ok(total)
}

/// Disjoint bundles, one per agent, plus the goods nobody received.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    pub bundles: Vec<Bundle>,
    pub unallocated: Bundle,
}

impl Allocation {
    pub fn empty(agents: usize) -> Self {
        Self {
            bundles: alloc::vec![Bundle::new(); agents],
            unallocated: Bundle::new(),
        }
    }

    /// Checks bundle count, index range and pairwise disjointness.
    pub fn validate(&self, agents: usize, goods: usize) -> Result<()> {
        if self.bundles.len() != agents {
            return Err(Error::DimensionMismatch {
                what: "bundle count",
                expected: agents,
                found: self.bundles.len(),
            });
        }
        let mut seen = Bundle::new();
        for &g in self.bundles.iter().flatten().chain(self.unallocated.iter()) {
            if g >= goods {
                return Err(Error::GoodOutOfRange { good: g, goods });
            }
            if !seen.insert(g) {
                return Err(Error::DuplicateGood { good: g });
            }
        }
        Ok(())
    }

    /// Every good of `[0, goods)` is either in a bundle or unallocated.
    pub fn is_complete(&self, goods: usize) -> bool {
        let covered = self.bundles.iter().map(Bundle::len).sum::<usize>() + self.unallocated.len();
        covered == goods
    }

    pub fn values(&self, inst: &Instance) -> Result<Vec<Rational>> {
        self.bundles
            .iter()
            .enumerate()
            .map(|(a, b)| bundle_value(inst, a, b))
            .collect()
    }
}

/// A partition of a ground set into exactly `d` (possibly empty) parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<Bundle>,
}

impl Partition {
    pub fn new(parts: Vec<Bundle>, ground: &Bundle) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::ZeroBundles);
        }
        let mut seen = Bundle::new();
        for &g in parts.iter().flatten() {
            if !seen.insert(g) {
                return Err(Error::InvalidPartition(format!("good {g} in two parts")));
            }
        }
        if &seen != ground {
            return Err(Error::InvalidPartition(
                "union of parts differs from the ground set".to_string(),
            ));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[Bundle] {
        &self.parts
    }

    pub fn d(&self) -> usize {
        self.parts.len()
    }

    pub fn ground(&self) -> Bundle {
        self.parts.iter().flatten().copied().collect()
    }

    pub fn part_values(&self, inst: &Instance, agent: usize) -> Result<Vec<Rational>> {
        self.parts
            .iter()
            .map(|p| bundle_value(inst, agent, p))
            .collect()
    }

    /// Relabels every good through `map` (`new = map[old]`).
    pub fn relabel(&self, map: &[usize]) -> Self {
        Self {
            parts: self
                .parts
                .iter()
                .map(|p| p.iter().map(|&g| map[g]).collect())
                .collect(),
        }
    }
}

/// Per-rank targets `1 ≥ τ_1 ≥ … ≥ τ_n ≥ 0`; index 0 is rank 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdList(Vec<Rational>);

impl ThresholdList {
    pub fn new(taus: Vec<Rational>) -> Result<Self> {
        let one = Rational::one();
        for (r, t) in taus.iter().enumerate() {
            if !is_nonnegative(t) || t > &one {
                return Err(Error::InvalidThresholds(format!(
                    "τ at rank {} is {t}, outside [0, 1]",
                    r + 1
                )));
            }
        }
        if let Some(r) = taus.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::InvalidThresholds(format!(
                "τ increases from rank {} to rank {}",
                r + 1,
                r + 2
            )));
        }
        Ok(Self(taus))
    }

    pub fn constant(n: usize, tau: Rational) -> Result<Self> {
        Self::new(alloc::vec![tau; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Threshold of a 0-indexed rank.
    pub fn at_rank(&self, rank: usize) -> &Rational {
        &self.0[rank]
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    /// The smallest (last-rank) threshold.
    pub fn last(&self) -> Option<&Rational> {
        self.0.last()
    }

    pub fn mean(&self) -> Rational {
        let n = self.0.len().max(1);
        self.0.iter().sum::<Rational>() / crate::numeric::from_usize(n)
    }
}

/// Bijection agent → rank (both 0-indexed; rank 0 has top priority).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityRanking {
    rank_of: Vec<usize>,
}

impl PriorityRanking {
    pub fn new(rank_of: Vec<usize>) -> Result<Self> {
        let n = rank_of.len();
        let mut seen = alloc::vec![false; n];
        for (agent, &r) in rank_of.iter().enumerate() {
            if r >= n || seen[r] {
                return Err(Error::InvalidRanking(format!(
                    "agent {agent} has rank {r}, which is out of range or repeated"
                )));
            }
            seen[r] = true;
        }
        Ok(Self { rank_of })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rank_of: (0..n).collect(),
        }
    }

    /// The `k`-th cyclic rotation: agent `i` gets rank `(i + k) mod n`.
    pub fn rotation(n: usize, k: usize) -> Self {
        Self {
            rank_of: (0..n).map(|i| (i + k) % n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rank_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank_of.is_empty()
    }

    pub fn rank_of(&self, agent: usize) -> usize {
        self.rank_of[agent]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank_of
    }

    /// Agents listed from highest priority (rank 0) to lowest.
    pub fn agents_by_rank(&self) -> Vec<usize> {
        let mut order = alloc::vec![0; self.rank_of.len()];
        for (agent, &r) in self.rank_of.iter().enumerate() {
            order[r] = agent;
        }
        order
    }
}

/// True iff every agent `i` receives at least `τ_{rank(i)} · mms[i]`.
pub fn is_t_mms(
    inst: &Instance,
    alloc: &Allocation,
    ranking: &PriorityRanking,
    thresholds: &ThresholdList,
    mms_values: &[Rational],
) -> Result<bool> {
    let n = inst.agents();
    for (what, found) in [
        ("bundle count", alloc.bundles.len()),
        ("ranking length", ranking.len()),
        ("threshold count", thresholds.len()),
        ("MMS value count", mms_values.len()),
    ] {
        if found != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found,
            });
        }
    }
    for (agent, bundle) in alloc.bundles.iter().enumerate() {
        let value = bundle_value(inst, agent, bundle)?;
        let target = thresholds.at_rank(ranking.rank_of(agent)) * &mms_values[agent];
        if value < target {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, rat};
    use alloc::vec;

    fn set(items: &[usize]) -> Bundle {
        items.iter().copied().collect()
    }

    #[test]
    fn bundle_value_basics() {
        let inst = Instance::from_rows(vec![vec![rat(1, 2), rat(1, 3)]]).unwrap();
        assert_eq!(bundle_value(&inst, 0, &set(&[])).unwrap(), int(0));
        assert_eq!(bundle_value(&inst, 0, &set(&[0, 1])).unwrap(), rat(5, 6));
        assert!(matches!(
            bundle_value(&inst, 1, &set(&[0])),
            Err(Error::AgentOutOfRange { .. })
        ));
        assert!(matches!(
            bundle_value(&inst, 0, &set(&[2])),
            Err(Error::GoodOutOfRange { good: 2, .. })
        ));
    }

    #[test]
    fn instance_rejects_bad_input() {
        assert_eq!(Instance::from_rows(vec![]), Err(Error::NoAgents));
        assert!(matches!(
            Instance::from_rows(vec![vec![int(1)], vec![int(1), int(2)]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            Instance::from_rows(vec![vec![int(1), int(-1)]]),
            Err(Error::NegativeValue { agent: 0, good: 1 })
        );
    }

    #[test]
    fn thresholds_validation() {
        assert!(ThresholdList::new(vec![int(1), rat(3, 4), rat(3, 4), int(0)]).is_ok());
        assert!(ThresholdList::new(vec![rat(3, 4), int(1)]).is_err());
        assert!(ThresholdList::new(vec![rat(5, 4)]).is_err());
        assert!(ThresholdList::new(vec![rat(-1, 4)]).is_err());
    }

    #[test]
    fn ranking_validation_and_rotation() {
        assert!(PriorityRanking::new(vec![1, 1]).is_err());
        assert!(PriorityRanking::new(vec![0, 2]).is_err());
        let rot = PriorityRanking::rotation(4, 1);
        assert_eq!(rot.ranks(), &[1, 2, 3, 0]);
        assert_eq!(rot.agents_by_rank(), vec![3, 0, 1, 2]);
    }

    #[test]
    fn partition_validation() {
        let ground = set(&[0, 1, 2]);
        assert!(Partition::new(vec![set(&[0]), set(&[1, 2])], &ground).is_ok());
        assert!(Partition::new(vec![set(&[0]), set(&[0, 1, 2])], &ground).is_err());
        assert!(Partition::new(vec![set(&[0]), set(&[1])], &ground).is_err());
        assert!(Partition::new(vec![set(&[0, 1, 2]), set(&[])], &ground).is_ok());
    }

    #[test]
    fn allocation_validation() {
        let a = Allocation {
            bundles: vec![set(&[0]), set(&[1])],
            unallocated: set(&[2]),
        };
        assert!(a.validate(2, 3).is_ok());
        assert!(a.is_complete(3));
        let b = Allocation {
            bundles: vec![set(&[0]), set(&[0])],
            unallocated: set(&[]),
        };
        assert_eq!(b.validate(2, 3), Err(Error::DuplicateGood { good: 0 }));
    }

    #[test]
    fn t_mms_examples() {
        // identical agents, goods {1, 1}: MMS^2 is 1 each
        let inst = Instance::from_integers(&[[1, 1], [1, 1]]).unwrap();
        let alloc = Allocation {
            bundles: vec![set(&[0]), set(&[1])],
            unallocated: set(&[]),
        };
        let id = PriorityRanking::identity(2);
        let ones = ThresholdList::constant(2, int(1)).unwrap();
        assert!(is_t_mms(&inst, &alloc, &id, &ones, &[int(1), int(1)]).unwrap());

        let zeros = ThresholdList::constant(2, int(0)).unwrap();
        assert!(is_t_mms(&inst, &Allocation::empty(2), &id, &zeros, &[int(1), int(1)]).unwrap());

        // boundary: value exactly τ · MMS counts as satisfied
        let single = Instance::from_rows(vec![vec![rat(3, 4)]]).unwrap();
        let one_bundle = Allocation {
            bundles: vec![set(&[0])],
            unallocated: set(&[]),
        };
        let t = ThresholdList::new(vec![rat(3, 4)]).unwrap();
        let id1 = PriorityRanking::identity(1);
        assert!(is_t_mms(&single, &one_bundle, &id1, &t, &[int(1)]).unwrap());
        assert!(matches!(
            is_t_mms(&single, &one_bundle, &id1, &t, &[]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
