//! Reductions and bag filling with per-rank thresholds.
//!
//! Phase 1 repeatedly hands out one of four order-statistic bundles
//! `S_1..S_4` to the highest-priority agent who values it at her threshold.
//! Phase 2 pairs the surviving goods into bags and fills them one good at a
//! time. The engine only sees valuations through [`ValueResponder`], so a
//! scripted adversary can stand in for real agents.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{bundle_value, Allocation, Bundle, Instance, PriorityRanking, ThresholdList};
use crate::numeric::{from_usize, rat, Rational};
use crate::transform::{check_lifted, lift, prepare, PipelineRecord, Target};

/// `{j-th smallest element of set : j ∈ positions, j ≤ |set|}` with
/// 1-indexed positions.
pub fn ord_st(set: &Bundle, positions: &[usize]) -> Bundle {
    let sorted: Vec<usize> = set.iter().copied().collect();
    positions
        .iter()
        .filter(|&&j| j >= 1 && j <= sorted.len())
        .map(|&j| sorted[j - 1])
        .collect()
}

/// Where a value query comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    /// Bundle `S_k` of a phase-1 reduction, `k ∈ 1..=4`.
    Reduction(u8),
    /// Current contents of a phase-2 bag.
    Bag(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub agent: usize,
    pub goods: &'a Bundle,
    pub kind: QueryKind,
}

/// Answers value queries. Truthful responders read an instance; scripted
/// ones may answer anything but must be deterministic.
pub trait ValueResponder {
    fn value(&mut self, query: &Query<'_>) -> Rational;
}

/// Answers with the additive valuation of an instance.
#[derive(Debug, Clone, Copy)]
pub struct Truthful<'a> {
    pub instance: &'a Instance,
}

impl<'a> Truthful<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        Self { instance }
    }
}

impl ValueResponder for Truthful<'_> {
    fn value(&mut self, query: &Query<'_>) -> Rational {
        bundle_value(self.instance, query.agent, query.goods).expect("engine queries valid goods")
    }
}

/// Which open bag receives the next good when nobody likes any bag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BagChoice {
    #[default]
    LowestIndex,
    /// Cycle through the open bags.
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbfConfig {
    pub bag_choice: BagChoice,
    /// Fail with [`Error::GuaranteeViolated`] as soon as fewer than `2|N|`
    /// goods remain after the type-1 reductions.
    pub strict: bool,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self {
            bag_choice: BagChoice::LowestIndex,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionEvent {
    /// 1 to 4.
    pub kind: u8,
    pub bundle: Bundle,
    pub agent: usize,
    pub rank: usize,
    pub agents_before: usize,
    pub goods_before: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BagEvent {
    Fill {
        bag: usize,
        good: usize,
    },
    /// `liked` is false only for bags handed out after goods ran out.
    Assign {
        bag: usize,
        agent: usize,
        rank: usize,
        liked: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub agents: usize,
    pub goods: usize,
    pub reductions: Vec<ReductionEvent>,
    pub bag_events: Vec<BagEvent>,
    pub ran_out_of_goods: bool,
    /// Goods left when phase 1 ended (original indices).
    pub final_goods: Bundle,
    /// Agents left when phase 1 ended, in rank order.
    pub final_agents: Vec<usize>,
    /// Phase-2 bags before any filling.
    pub initial_bags: Vec<Bundle>,
}

impl Transcript {
    /// Reduction types as a string over `1234`.
    pub fn reduction_word(&self) -> alloc::string::String {
        self.reductions
            .iter()
            .map(|r| char::from(b'0' + r.kind))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RbfOutcome {
    pub allocation: Allocation,
    pub transcript: Transcript,
    /// Per agent: received a bundle she answered at least her threshold for.
    pub satisfied: Vec<bool>,
}

/// Runs both phases for `n` agents over goods `0..m`.
///
/// `thresholds` is indexed by rank and every threshold must be positive.
/// Running out of goods in phase 2 is not an error: the open bags go to the
/// open agents in rank order and those agents are flagged unsatisfied.
pub fn run_rbf<R: ValueResponder + ?Sized>(
    responder: &mut R,
    n: usize,
    m: usize,
    thresholds: &ThresholdList,
    ranking: &PriorityRanking,
    config: RbfConfig,
) -> Result<RbfOutcome> {
    if n == 0 {
        return Err(Error::NoAgents);
    }
    if thresholds.len() != n {
        return Err(Error::DimensionMismatch {
            what: "threshold count",
            expected: n,
            found: thresholds.len(),
        });
    }
    if ranking.len() != n {
        return Err(Error::DimensionMismatch {
            what: "ranking length",
            expected: n,
            found: ranking.len(),
        });
    }
    if let Some(r) = thresholds.as_slice().iter().position(|t| t.is_zero()) {
        return Err(Error::InvalidThresholds(format!(
            "τ at rank {} is 0",
            r + 1
        )));
    }

    let mut allocation = Allocation::empty(n);
    let mut satisfied = alloc::vec![false; n];
    let mut agents: Vec<usize> = ranking.agents_by_rank();
    let mut goods: Bundle = (0..m).collect();
    let mut reductions = Vec::new();

    while !agents.is_empty() && !goods.is_empty() {
        let a = agents.len();
        let bundles = [
            ord_st(&goods, &[1]),
            ord_st(&goods, &[a, a + 1]),
            ord_st(&goods, &[2 * a - 1, 2 * a, 2 * a + 1]),
            ord_st(&goods, &[1, 2 * a + 1]),
        ];
        let mut choice = None;
        'search: for (k, bundle) in bundles.iter().enumerate() {
            for (pos, &agent) in agents.iter().enumerate() {
                let rank = ranking.rank_of(agent);
                let query = Query {
                    agent,
                    goods: bundle,
                    kind: QueryKind::Reduction(k as u8 + 1),
                };
                if &responder.value(&query) >= thresholds.at_rank(rank) {
                    choice = Some((k, pos));
                    break 'search;
                }
            }
        }
        let Some((k, pos)) = choice else { break };
        if k > 0 {
            check_enough_goods(config, goods.len(), a)?;
        }
        let agent = agents.remove(pos);
        let bundle = bundles[k].clone();
        for g in &bundle {
            goods.remove(g);
        }
        reductions.push(ReductionEvent {
            kind: k as u8 + 1,
            bundle: bundle.clone(),
            agent,
            rank: ranking.rank_of(agent),
            agents_before: a,
            goods_before: goods.len() + bundle.len(),
        });
        allocation.bundles[agent] = bundle;
        satisfied[agent] = true;
    }
    check_enough_goods(config, goods.len(), agents.len())?;

    let final_goods = goods.clone();
    let final_agents = agents.clone();
    let (initial_bags, bag_events, ran_out_of_goods, leftover) = bag_fill(
        responder,
        &agents,
        &goods,
        thresholds,
        ranking,
        config,
        &mut allocation,
        &mut satisfied,
    );
    allocation.unallocated = leftover;

    Ok(RbfOutcome {
        allocation,
        transcript: Transcript {
            agents: n,
            goods: m,
            reductions,
            bag_events,
            ran_out_of_goods,
            final_goods,
            final_agents,
            initial_bags,
        },
        satisfied,
    })
}

fn check_enough_goods(config: RbfConfig, goods: usize, agents: usize) -> Result<()> {
    if config.strict && goods < 2 * agents {
        return Err(Error::GuaranteeViolated(format!(
            "{goods} goods left for {agents} agents after the type-1 reductions"
        )));
    }
    Ok(())
}

type BagFillResult = (Vec<Bundle>, Vec<BagEvent>, bool, Bundle);

#[allow(clippy::too_many_arguments)]
fn bag_fill<R: ValueResponder + ?Sized>(
    responder: &mut R,
    agents: &[usize],
    goods: &Bundle,
    thresholds: &ThresholdList,
    ranking: &PriorityRanking,
    config: RbfConfig,
    allocation: &mut Allocation,
    satisfied: &mut [bool],
) -> BagFillResult {
    let nf = agents.len();
    let sorted: Vec<usize> = goods.iter().copied().collect();
    let mut bags: Vec<Bundle> = (0..nf)
        .map(|k| {
            [k, 2 * nf - 1 - k]
                .into_iter()
                .filter_map(|j| sorted.get(j).copied())
                .collect()
        })
        .collect();
    let initial_bags = bags.clone();
    let mut remaining: Vec<usize> = sorted.iter().skip(2 * nf).copied().collect();
    remaining.reverse(); // pop() yields the most valuable good
    let mut open_agents: Vec<usize> = agents.to_vec();
    let mut open_bags: Vec<usize> = (0..nf).collect();
    let mut events = Vec::new();
    let mut cursor = 0usize;

    while !open_agents.is_empty() {
        debug_assert_eq!(open_agents.len(), open_bags.len());
        let mut found = None;
        'agents: for (ai, &agent) in open_agents.iter().enumerate() {
            let tau = thresholds.at_rank(ranking.rank_of(agent));
            for (bi, &bag) in open_bags.iter().enumerate() {
                let query = Query {
                    agent,
                    goods: &bags[bag],
                    kind: QueryKind::Bag(bag),
                };
                if &responder.value(&query) >= tau {
                    found = Some((ai, bi));
                    break 'agents;
                }
            }
        }
        if let Some((ai, bi)) = found {
            let agent = open_agents.remove(ai);
            let bag = open_bags.remove(bi);
            allocation.bundles[agent] = bags[bag].clone();
            satisfied[agent] = true;
            events.push(BagEvent::Assign {
                bag,
                agent,
                rank: ranking.rank_of(agent),
                liked: true,
            });
            continue;
        }
        let Some(good) = remaining.pop() else {
            for (&agent, &bag) in open_agents.iter().zip(open_bags.iter()) {
                allocation.bundles[agent] = bags[bag].clone();
                events.push(BagEvent::Assign {
                    bag,
                    agent,
                    rank: ranking.rank_of(agent),
                    liked: false,
                });
            }
            return (initial_bags, events, true, Bundle::new());
        };
        let bag = match config.bag_choice {
            BagChoice::LowestIndex => open_bags[0],
            BagChoice::RoundRobin => {
                let bag = open_bags
                    .iter()
                    .copied()
                    .find(|&b| b >= cursor)
                    .unwrap_or(open_bags[0]);
                cursor = bag + 1;
                bag
            }
        };
        bags[bag].insert(good);
        events.push(BagEvent::Fill { bag, good });
    }
    let leftover = remaining.into_iter().collect();
    (initial_bags, events, false, leftover)
}

/// Runs with a truthful responder after checking that the instance is
/// ordered and every agent's total value is `n`.
pub fn run_rbf_truthful(
    inst: &Instance,
    thresholds: &ThresholdList,
    ranking: &PriorityRanking,
    config: RbfConfig,
) -> Result<RbfOutcome> {
    let n = inst.agents();
    if !inst.is_ordered() {
        return Err(Error::Precondition("instance is not ordered".into()));
    }
    let total = from_usize(n);
    if let Some(agent) = (0..n).find(|&a| inst.total_value(a) != total) {
        return Err(Error::Precondition(format!(
            "agent {agent} has total value {}, an {n}-normalized instance has {n}",
            inst.total_value(agent)
        )));
    }
    run_rbf(
        &mut Truthful::new(inst),
        n,
        inst.goods(),
        thresholds,
        ranking,
        config,
    )
}

/// Result of running on an arbitrary instance through the reduction pipeline.
#[derive(Debug, Clone)]
pub struct RbfPipelineOutcome {
    /// Allocation of the original instance.
    pub allocation: Allocation,
    /// `None` when every agent has a zero share and goods were dealt out.
    pub run: Option<RbfOutcome>,
    /// Ranking of the working agents (survivors keep their relative order).
    pub working_ranking: Option<PriorityRanking>,
}

/// Runs on the working instance of a [`Target::Proportional`] pipeline and
/// maps the result back. Every original agent is checked to receive at least
/// `τ_{rank} · MMS^n`.
pub fn run_rbf_prepared(
    record: &PipelineRecord,
    thresholds: &ThresholdList,
    ranking: &PriorityRanking,
    config: RbfConfig,
) -> Result<RbfPipelineOutcome> {
    let n = record.original.agents();
    if thresholds.len() != n || ranking.len() != n {
        return Err(Error::DimensionMismatch {
            what: "thresholds and ranking",
            expected: n,
            found: thresholds.len().min(ranking.len()),
        });
    }
    let Some(working) = &record.working else {
        let mut allocation = Allocation::empty(n);
        for g in 0..record.original.goods() {
            allocation.bundles[g % n].insert(g);
        }
        return Ok(RbfPipelineOutcome {
            allocation,
            run: None,
            working_ranking: None,
        });
    };
    let w = working.owner.len();
    let mut by_rank: Vec<usize> = (0..w).collect();
    by_rank.sort_by_key(|&a| ranking.rank_of(working.owner[a]));
    let mut rank_of = alloc::vec![0; w];
    for (r, &a) in by_rank.iter().enumerate() {
        rank_of[a] = r;
    }
    let working_ranking = PriorityRanking::new(rank_of)?;
    let working_thresholds = ThresholdList::new(thresholds.as_slice()[..w].to_vec())?;
    let run = run_rbf_truthful(
        &working.ordered,
        &working_thresholds,
        &working_ranking,
        config,
    )?;
    let allocation = lift(&run.allocation, record)?;
    check_lifted(&allocation, record, |a| {
        thresholds.at_rank(ranking.rank_of(a)).clone()
    })?;
    Ok(RbfPipelineOutcome {
        allocation,
        run: Some(run),
        working_ranking: Some(working_ranking),
    })
}

/// [`prepare`] followed by [`run_rbf_prepared`].
pub fn run_rbf_pipeline(
    inst: &Instance,
    thresholds: &ThresholdList,
    ranking: &PriorityRanking,
    config: RbfConfig,
    budget: u64,
) -> Result<(PipelineRecord, RbfPipelineOutcome)> {
    let record = prepare(inst, Target::Proportional, budget)?;
    let outcome = run_rbf_prepared(&record, thresholds, ranking, config)?;
    Ok((record, outcome))
}

/// `τ_i = max(2n/(2n+i-1), 3/4 + 1/(12n))` for ranks `i = 1..=n`.
pub fn guaranteed_thresholds(n: usize) -> ThresholdList {
    let flat = flat_threshold(n);
    let taus = (1..=n)
        .map(|i| {
            let decay = rank_threshold(n, i);
            if decay > flat {
                decay
            } else {
                flat.clone()
            }
        })
        .collect();
    ThresholdList::new(taus).expect("thresholds lie in (0, 1] and never increase")
}

/// `2n/(2n+i-1)` for a 1-indexed rank `i`.
pub fn rank_threshold(n: usize, i: usize) -> Rational {
    from_usize(2 * n) / from_usize(2 * n + i - 1)
}

/// `3/4 + 1/(12n)`.
pub fn flat_threshold(n: usize) -> Rational {
    rat(3, 4) + Rational::new(1.into(), (12 * n).into())
}
