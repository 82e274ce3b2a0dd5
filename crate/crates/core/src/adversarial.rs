//! Explicit hard instances and the scripted adversary.
//!
//! * `ordinal_tight`: identical agents on which ordinal bag filling leaves
//!   someone below 1 for `d = ⌊(4n-2)/3⌋`.
//! * `hard1`: agents `1..=i` share a valuation whose reduction bundles and
//!   initial bags are all worth at most `α_i = 3n/(3n+i-2)`; everyone else
//!   values every good at `ε`. Any `τ_i > α_i` fails.
//! * `hard2`: one truthful agent against scripted agents answering value
//!   queries however suits them; the truthful agent cannot be promised more
//!   than `α + 2ε`.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{bundle_value, Bundle, Instance, Partition, PriorityRanking, ThresholdList};
use crate::numeric::{from_usize, rat, Rational};
use crate::ordinal::{run_ordinal, GuaranteeCheck, OrdinalConfig, OrdinalRun};
use crate::rbf::{
    run_rbf, BagChoice, Query, QueryKind, RbfConfig, RbfOutcome, Truthful, ValueResponder,
};

fn q(a: usize, b: usize) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

fn set<const N: usize>(items: [usize; N]) -> Bundle {
    items.into_iter().collect()
}

/// Identical-valuation instance on which ordinal bag filling fails for
/// `d = ⌊(4n-2)/3⌋`.
#[derive(Debug, Clone)]
pub struct OrdinalTight {
    pub instance: Instance,
    pub d: usize,
    /// `d`-partition with every part worth exactly 1.
    pub partition: Partition,
}

/// `u(j) = 2/3 - ⌈j/2⌉/(3n)` for `j ≤ 2n` and `1/3` after that, on
/// `m = 2n+1+3(d-n)` goods (1-indexed `j`).
pub fn gen_ordinal_tight(n: usize) -> Result<OrdinalTight> {
    if n < 2 {
        return Err(Error::InvalidParameters(format!(
            "n = {n}, at least 2 needed"
        )));
    }
    let d = (4 * n - 2) / 3;
    let m = 2 * n + 1 + 3 * (d - n);
    let row: Vec<Rational> = (1..=m)
        .map(|j| {
            if j <= 2 * n {
                rat(2, 3) - q(j.div_ceil(2), 3 * n)
            } else {
                rat(1, 3)
            }
        })
        .collect();
    let instance = Instance::new(m, alloc::vec![row; n])?;
    // 1-indexed: {i, 2n-1-i} for i < n, {i+n-1, 2d+n-i, 2d-n+i+1} for n ≤ i ≤ d
    let parts = (1..=d)
        .map(|i| {
            if i < n {
                set([i - 1, 2 * n - 2 - i])
            } else {
                set([i + n - 2, 2 * d + n - i - 1, 2 * d + i - n])
            }
        })
        .collect();
    let partition = Partition::new(parts, &instance.all_goods())?;
    Ok(OrdinalTight {
        instance,
        d,
        partition,
    })
}

/// The first hard family for one target rank `i`.
#[derive(Debug, Clone)]
pub struct Hard1 {
    pub instance: Instance,
    pub i: usize,
    /// `1/(3n+i-2)`.
    pub delta: Rational,
    /// `3n/(3n+i-2)`.
    pub alpha: Rational,
    pub epsilon: Rational,
    /// `n`-partition of the shared valuation of agents `1..=i`, parts worth 1.
    pub partition_u: Partition,
    /// `n`-partition of the constant valuation, parts worth 1.
    pub partition_w: Partition,
}

/// Smallest `q` with `1/q < τ/3`.
pub fn hard1_epsilon_inv(tau_n: &Rational) -> Result<usize> {
    if tau_n.is_zero() {
        return Err(Error::InvalidParameters("τ_n must be positive".into()));
    }
    let three_over = rat(3, 1) / tau_n;
    let floor = three_over.floor().to_integer();
    usize::try_from(floor + BigInt::one())
        .map_err(|_| Error::InvalidParameters("τ_n is too small".into()))
}

/// Agents `1..=i` value good `j` (1-indexed) at `(2n-⌈j/2⌉)δ` for `j ≤ 2n`,
/// `nδ` for `2n < j < 2n+i` and 0 after; agents `i+1..=n` value every good at
/// `ε = 1/epsilon_inv`. There are `n·epsilon_inv` goods.
pub fn gen_hard1(n: usize, i: usize, epsilon_inv: usize) -> Result<Hard1> {
    if n < 3 || i < 3 || i > n {
        return Err(Error::InvalidParameters(format!(
            "need n ≥ 3 and 3 ≤ i ≤ n, got n = {n}, i = {i}"
        )));
    }
    let m = n * epsilon_inv;
    if epsilon_inv < 2 || m < 2 * n + i - 1 {
        return Err(Error::InvalidParameters(format!(
            "1/ε = {epsilon_inv} leaves too few goods"
        )));
    }
    let delta = q(1, 3 * n + i - 2);
    let alpha = q(3 * n, 3 * n + i - 2);
    let epsilon = q(1, epsilon_inv);
    let u: Vec<Rational> = (1..=m)
        .map(|j| {
            if j <= 2 * n {
                from_usize(2 * n - j.div_ceil(2)) * &delta
            } else if j < 2 * n + i {
                from_usize(n) * &delta
            } else {
                Rational::zero()
            }
        })
        .collect();
    let w = alloc::vec![epsilon.clone(); m];
    let mut rows = alloc::vec![u; i];
    rows.extend(core::iter::repeat_n(w, n - i));
    let instance = Instance::new(m, rows)?;

    // 1-indexed, k = n-i+1: {j, 2k+1-j} for j ≤ k, {k+j, 2n+k+1-j, 2n+j-k} after
    let k = n - i + 1;
    let mut parts: Vec<Bundle> = (1..=n)
        .map(|j| {
            if j <= k {
                set([j - 1, 2 * k - j])
            } else {
                set([k + j - 1, 2 * n + k - j, 2 * n + j - k - 1])
            }
        })
        .collect();
    parts[n - 1].extend(2 * n + i - 1..m);
    let all = instance.all_goods();
    let partition_u = Partition::new(parts, &all)?;
    let partition_w = Partition::new(
        (0..n)
            .map(|p| (p * epsilon_inv..(p + 1) * epsilon_inv).collect())
            .collect(),
        &all,
    )?;
    Ok(Hard1 {
        instance,
        i,
        delta,
        alpha,
        epsilon,
        partition_u,
        partition_w,
    })
}

/// The truthful agent's side of the oblivious construction.
#[derive(Debug, Clone)]
pub struct Hard2 {
    pub n: usize,
    /// 1-indexed rank (and agent number) of the truthful agent.
    pub i: usize,
    pub k1: usize,
    pub k2: usize,
    pub t: usize,
    /// `1 - k1/(3(n-k2))`.
    pub alpha: Rational,
    /// `1/(3t(n-k2))`.
    pub epsilon: Rational,
    pub goods: usize,
    /// The truthful agent's values: `k1+k2` goods of `α`, `2n-k1-2k2` of
    /// `1/3`, `k2` of `1-α`, `(n-k1-k2)²t` of `ε`.
    pub row: Vec<Rational>,
    /// Four-group `n`-partition with every part worth 1 under `row`.
    pub partition: Partition,
}

impl Hard2 {
    fn rich(&self) -> usize {
        self.k1 + self.k2
    }

    fn first_eps(&self) -> usize {
        2 * self.n
    }

    /// Single-agent instance carrying the truthful valuation.
    pub fn target_instance(&self) -> Instance {
        Instance::new(self.goods, alloc::vec![self.row.clone()]).expect("valid row")
    }

    /// Responders for all `n` agents; agents are numbered by rank.
    pub fn responder(&self) -> Hard2Responder {
        Hard2Responder {
            target: self.i - 1,
            row: self.row.clone(),
            rich: (0..self.rich()).collect(),
            rich_claimers: self.rich(),
            first_eps: self.first_eps(),
            claim_above: (self.n - self.rich()) * self.t + 2,
        }
    }

    /// Thresholds strictly between `α + 2ε` and 1 for every rank.
    pub fn default_thresholds(&self) -> ThresholdList {
        let tau = (&self.alpha + &self.epsilon * from_usize(2) + Rational::one()) / from_usize(2);
        ThresholdList::constant(self.n, tau).expect("τ lies in (0, 1]")
    }
}

/// Builds the truthful valuation. Requires `2 ≤ i ≤ n`, `k1 ≥ 1`,
/// `k1 + k2 < i`, `2k1 + k2 ≤ n` and `t ≥ 3`.
pub fn gen_hard2(n: usize, i: usize, k1: usize, k2: usize, t: usize) -> Result<Hard2> {
    if i < 2 || i > n || k1 < 1 || k1 + k2 >= i || 2 * k1 + k2 > n || t < 3 {
        return Err(Error::InvalidParameters(format!(
            "need 2 ≤ i ≤ n, k1 ≥ 1, k1+k2 < i, 2k1+k2 ≤ n, t ≥ 3; got n = {n}, i = {i}, k1 = {k1}, k2 = {k2}, t = {t}"
        )));
    }
    let rest = n - k2;
    let alpha = Rational::one() - q(k1, 3 * rest);
    let epsilon = q(1, 3 * t * rest);
    let free = n - k1 - k2;
    let eps_goods = free * free * t;
    let thirds = 2 * n - k1 - 2 * k2;
    let goods = 2 * n + eps_goods;
    let mut row = Vec::with_capacity(goods);
    row.extend(core::iter::repeat_n(alpha.clone(), k1 + k2));
    row.extend(core::iter::repeat_n(rat(1, 3), thirds));
    row.extend(core::iter::repeat_n(Rational::one() - &alpha, k2));
    row.extend(core::iter::repeat_n(epsilon.clone(), eps_goods));

    let first_third = k1 + k2;
    let first_small = first_third + thirds;
    let mut next_third = first_third;
    let mut next_eps = 2 * n;
    let mut take_eps = |count: usize| -> Bundle {
        let out = (next_eps..next_eps + count).collect();
        next_eps += count;
        out
    };
    let mut parts = Vec::with_capacity(n);
    for a in 0..k1 {
        let mut part = take_eps(k1 * t);
        part.insert(a);
        parts.push(part);
    }
    for b in 0..k2 {
        parts.push(set([k1 + b, first_small + b]));
    }
    for _ in 0..k1 {
        parts.push((next_third..next_third + 3).collect());
        next_third += 3;
    }
    for _ in 0..n - 2 * k1 - k2 {
        let mut part = take_eps(t * rest);
        part.extend(next_third..next_third + 2);
        next_third += 2;
        parts.push(part);
    }
    let ground: Bundle = (0..goods).collect();
    let partition = Partition::new(parts, &ground)?;
    Ok(Hard2 {
        n,
        i,
        k1,
        k2,
        t,
        alpha,
        epsilon,
        goods,
        row,
        partition,
    })
}

/// Admissible `(i, k1, k2)` for `n` agents.
pub fn hard2_parameters(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 2..=n {
        for k1 in 1..i {
            for k2 in 0..i - k1 {
                if 2 * k1 + k2 <= n {
                    out.push((i, k1, k2));
                }
            }
        }
    }
    out
}

/// Scripted answers: the truthful agent reports her real values; the others
/// decline every reduction bundle, agents ranked before the truthful agent
/// claim any bag holding a rich good, and the rest claim a bag only once it
/// holds more than `claim_above` small goods.
#[derive(Debug, Clone)]
pub struct Hard2Responder {
    pub target: usize,
    pub row: Vec<Rational>,
    pub rich: Bundle,
    pub rich_claimers: usize,
    pub first_eps: usize,
    pub claim_above: usize,
}

impl ValueResponder for Hard2Responder {
    fn value(&mut self, query: &Query<'_>) -> Rational {
        if query.agent == self.target {
            return query.goods.iter().map(|&g| &self.row[g]).sum();
        }
        let claim = match query.kind {
            QueryKind::Reduction(_) => false,
            QueryKind::Bag(_) if query.agent < self.rich_claimers => {
                query.goods.iter().any(|g| self.rich.contains(g))
            }
            QueryKind::Bag(_) => {
                query.goods.iter().filter(|&&g| g >= self.first_eps).count() > self.claim_above
            }
        };
        if claim {
            Rational::one()
        } else {
            Rational::zero()
        }
    }
}

/// Which family and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardInstanceSpec {
    OrdinalTight {
        n: usize,
    },
    /// `i` is the 1-indexed target rank.
    Hard1 {
        n: usize,
        i: usize,
    },
    Hard2 {
        n: usize,
        i: usize,
        k1: usize,
        k2: usize,
        t: usize,
    },
}

impl HardInstanceSpec {
    pub fn n(self) -> usize {
        match self {
            HardInstanceSpec::OrdinalTight { n }
            | HardInstanceSpec::Hard1 { n, .. }
            | HardInstanceSpec::Hard2 { n, .. } => n,
        }
    }
}

/// Evidence that an algorithm left an agent below her target.
#[derive(Debug, Clone)]
pub struct FailureReport {
    pub spec: HardInstanceSpec,
    /// The agent who ended up short (0-indexed).
    pub agent: usize,
    pub value: Rational,
    pub target: Rational,
    /// Family bound the target exceeds (`1 - 1/(3n)`, `α_i`, or `α + 2ε`).
    pub bound: Rational,
    pub ordinal: Option<OrdinalRun>,
    pub rbf: Option<RbfOutcome>,
}

/// Runs the algorithm the family is built against and returns the agent who
/// falls short. `thresholds` defaults to `α_i + 1/1000` for hard1 and the
/// midpoint of `(α + 2ε, 1]` for hard2; ordinal_tight ignores it.
pub fn demonstrate_failure(
    spec: HardInstanceSpec,
    thresholds: Option<&ThresholdList>,
) -> Result<FailureReport> {
    match spec {
        HardInstanceSpec::OrdinalTight { n } => {
            let tight = gen_ordinal_tight(n)?;
            let config = OrdinalConfig {
                d: Some(tight.d),
                check: GuaranteeCheck::Warn,
            };
            let (alloc, run) = run_ordinal(&tight.instance, config)?;
            let one = Rational::one();
            let (agent, value) = (0..n)
                .map(|a| {
                    (
                        a,
                        bundle_value(&tight.instance, a, &alloc.bundles[a]).expect("valid"),
                    )
                })
                .find(|(_, v)| v < &one)
                .ok_or_else(|| Error::NoFailure(format!("every agent reached 1 for n = {n}")))?;
            Ok(FailureReport {
                spec,
                agent,
                value,
                target: one,
                bound: Rational::one() - q(1, 3 * n),
                ordinal: Some(run),
                rbf: None,
            })
        }
        HardInstanceSpec::Hard1 { n, i } => {
            let alpha = q(3 * n, 3 * n + i - 2);
            let default;
            let thresholds = match thresholds {
                Some(t) => t,
                None => {
                    default = ThresholdList::constant(n, &alpha + rat(1, 1000))?;
                    &default
                }
            };
            let tau_n = thresholds
                .last()
                .ok_or_else(|| Error::InvalidThresholds("empty".into()))?;
            let hard = gen_hard1(n, i, hard1_epsilon_inv(tau_n)?)?;
            let out = run_rbf(
                &mut Truthful::new(&hard.instance),
                n,
                hard.instance.goods(),
                thresholds,
                &PriorityRanking::identity(n),
                RbfConfig::default(),
            )?;
            let short = (0..i).find_map(|a| {
                let v = bundle_value(&hard.instance, a, &out.allocation.bundles[a]).expect("valid");
                (&v < thresholds.at_rank(a)).then_some((a, v))
            });
            let (agent, value) = short.ok_or_else(|| {
                Error::NoFailure(format!(
                    "all of agents 1..={i} met their thresholds (n = {n})"
                ))
            })?;
            Ok(FailureReport {
                spec,
                agent,
                value,
                target: thresholds.at_rank(agent).clone(),
                bound: alpha,
                ordinal: None,
                rbf: Some(out),
            })
        }
        HardInstanceSpec::Hard2 { n, i, k1, k2, t } => {
            let hard = gen_hard2(n, i, k1, k2, t)?;
            let default = hard.default_thresholds();
            let thresholds = thresholds.unwrap_or(&default);
            let config = RbfConfig {
                bag_choice: BagChoice::RoundRobin,
                strict: false,
            };
            let mut responder = hard.responder();
            let out = run_rbf(
                &mut responder,
                n,
                hard.goods,
                thresholds,
                &PriorityRanking::identity(n),
                config,
            )?;
            let agent = i - 1;
            let value: Rational = out.allocation.bundles[agent]
                .iter()
                .map(|&g| &hard.row[g])
                .sum();
            let target = thresholds.at_rank(agent).clone();
            if value >= target {
                return Err(Error::NoFailure(format!(
                    "agent {i} received {value}, reaching her threshold {target}"
                )));
            }
            Ok(FailureReport {
                spec,
                agent,
                value,
                target,
                bound: &hard.alpha + &hard.epsilon * from_usize(2),
                ordinal: None,
                rbf: Some(out),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::int;

    fn all_parts_one(inst: &Instance, agent: usize, p: &Partition) -> bool {
        p.part_values(inst, agent)
            .unwrap()
            .iter()
            .all(|v| v == &int(1))
    }

    #[test]
    fn ordinal_tight_shape() {
        let t = gen_ordinal_tight(5).unwrap();
        assert_eq!(t.d, 6);
        assert_eq!(t.instance.goods(), 14);
        assert_eq!(t.instance.value(0, 0), &rat(3, 5));
        assert_eq!(t.instance.value(0, 9), &rat(1, 3));
        assert_eq!(t.instance.value(0, 10), &rat(1, 3));
        assert!(t.instance.is_ordered());
        assert!(all_parts_one(&t.instance, 0, &t.partition));
        assert_eq!(t.partition.parts()[4], set([8, 11, 12]));
        assert_eq!(t.partition.parts()[5], set([9, 10, 13]));
        for n in 2..=20 {
            let t = gen_ordinal_tight(n).unwrap();
            assert!(t.instance.goods() < 3 * n);
            assert!(all_parts_one(&t.instance, 0, &t.partition));
        }
    }

    #[test]
    fn ordinal_tight_failure() {
        let r = demonstrate_failure(HardInstanceSpec::OrdinalTight { n: 5 }, None).unwrap();
        assert_eq!(r.value, rat(14, 15));
        let run = r.ordinal.unwrap();
        assert!(run.terminated_early);
        assert_eq!(run.fill_order.len(), 4);
    }

    #[test]
    fn hard1_shape() {
        let h = gen_hard1(5, 5, 4).unwrap();
        assert_eq!(h.alpha, rat(5, 6));
        assert_eq!(h.instance.goods(), 20);
        for n in 3..=9 {
            for i in 3..=n {
                let h = gen_hard1(n, i, 4).unwrap();
                assert!(h.instance.is_ordered());
                assert!(
                    all_parts_one(&h.instance, 0, &h.partition_u),
                    "n = {n}, i = {i}"
                );
                assert!(all_parts_one(&h.instance, n - 1, &h.partition_w) || i == n);
                let s4 = bundle_value(&h.instance, 0, &set([0, 2 * n])).unwrap();
                assert_eq!(s4, from_usize(3 * n - 1) * &h.delta);
                assert!(s4 <= h.alpha);
            }
        }
    }

    #[test]
    fn hard1_failure() {
        let r = demonstrate_failure(HardInstanceSpec::Hard1 { n: 6, i: 4 }, None).unwrap();
        assert!(r.agent < 4);
        assert!(r.value < r.target);
        assert!(r.rbf.unwrap().transcript.reductions.is_empty());
    }

    #[test]
    fn hard2_shape_and_failure() {
        for n in 4..=7 {
            for (i, k1, k2) in hard2_parameters(n) {
                let h = gen_hard2(n, i, k1, k2, 3).unwrap();
                let inst = h.target_instance();
                assert!(inst.is_ordered());
                assert!(all_parts_one(&inst, 0, &h.partition));
                assert!(h.alpha >= rat(5, 6) && h.alpha < int(1) - &h.epsilon);
                let spec = HardInstanceSpec::Hard2 { n, i, k1, k2, t: 3 };
                let r = demonstrate_failure(spec, None).unwrap();
                assert!(r.value < r.bound);
                assert!(r.rbf.unwrap().transcript.reductions.is_empty());
            }
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(gen_ordinal_tight(1).is_err());
        assert!(gen_hard1(5, 2, 4).is_err());
        assert!(gen_hard1(5, 6, 4).is_err());
        assert!(gen_hard2(5, 2, 1, 1, 3).is_err());
        assert!(gen_hard2(5, 4, 1, 1, 2).is_err());
    }
}
