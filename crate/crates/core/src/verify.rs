//! Checkers shared by tests and the command line: guarantees against the
//! oracle, structural properties of normalized instances and of reduction
//! transcripts, and the 1-out-of-`d` to threshold-MMS expansion.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{
    bundle_value, is_t_mms, Allocation, Bundle, Instance, PriorityRanking, ThresholdList,
};
use crate::numeric::{from_usize, rat, Rational};
use crate::oracle::mms;
use crate::rbf::{ord_st, Transcript};

/// One agent's bundle value against her share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentCheck {
    pub agent: usize,
    pub value: Rational,
    pub share: Rational,
    pub pass: bool,
}

/// Compares every agent's bundle with her exact `MMS^d`.
pub fn check_1_out_of_d(
    inst: &Instance,
    alloc: &Allocation,
    d: usize,
    budget: u64,
) -> Result<Vec<AgentCheck>> {
    alloc.validate(inst.agents(), inst.goods())?;
    let all = inst.all_goods();
    (0..inst.agents())
        .map(|agent| {
            let share = mms(inst, agent, d, &all, budget)?.value;
            let value = bundle_value(inst, agent, &alloc.bundles[agent])?;
            Ok(AgentCheck {
                agent,
                pass: value >= share,
                value,
                share,
            })
        })
        .collect()
}

/// Compares every agent's bundle with `τ_{rank} · share`.
pub fn check_thresholds(
    inst: &Instance,
    alloc: &Allocation,
    ranking: &PriorityRanking,
    thresholds: &ThresholdList,
    shares: &[Rational],
) -> Result<Vec<AgentCheck>> {
    alloc.validate(inst.agents(), inst.goods())?;
    if ranking.len() != inst.agents()
        || thresholds.len() != inst.agents()
        || shares.len() != inst.agents()
    {
        return Err(Error::DimensionMismatch {
            what: "ranking, thresholds and shares",
            expected: inst.agents(),
            found: ranking.len().min(thresholds.len()).min(shares.len()),
        });
    }
    (0..inst.agents())
        .map(|agent| {
            let share = thresholds.at_rank(ranking.rank_of(agent)) * &shares[agent];
            let value = bundle_value(inst, agent, &alloc.bundles[agent])?;
            Ok(AgentCheck {
                agent,
                pass: value >= share,
                value,
                share,
            })
        })
        .collect()
}

/// What a transcript violation is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranscriptRule {
    /// Reduction types must follow `(1*2*4*)(32*4*)*`.
    ReductionOrder,
    /// At least `2|N|` goods once the type-1 reductions are over.
    EnoughGoods,
    /// Type-2 goods lie after `ordSt(M_f, |N_f|)`, type-3 goods after
    /// `ordSt(M_f, 2|N_f|)`.
    ReductionGoodsAfterBags,
    /// A bundle is not the order statistic its type prescribes, or the
    /// recorded counts do not replay.
    BundleShape,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptViolation {
    pub rule: TranscriptRule,
    pub detail: String,
}

/// `true` iff the word over `{1,2,3,4}` matches `(1*2*4*)(32*4*)*`.
pub fn matches_reduction_order(word: &[u8]) -> bool {
    #[derive(Clone, Copy)]
    enum State {
        Ones,
        Twos,
        Fours,
    }
    let mut state = State::Ones;
    for &c in word {
        state = match (state, c) {
            (State::Ones, 1) => State::Ones,
            (State::Ones | State::Twos, 2) => State::Twos,
            (_, 3) => State::Twos,
            (_, 4) => State::Fours,
            _ => return false,
        };
    }
    true
}

/// Replays a transcript and reports every violated rule. An empty list means
/// the transcript is consistent.
pub fn check_transcript(tr: &Transcript) -> Vec<TranscriptViolation> {
    let mut out = Vec::new();
    let word: Vec<u8> = tr.reductions.iter().map(|r| r.kind).collect();
    if !matches_reduction_order(&word) {
        out.push(TranscriptViolation {
            rule: TranscriptRule::ReductionOrder,
            detail: format!("reduction sequence {}", tr.reduction_word()),
        });
    }

    let mut goods: Bundle = (0..tr.goods).collect();
    let mut agents = tr.agents;
    let mut past_type1 = false;
    for (step, event) in tr.reductions.iter().enumerate() {
        if event.goods_before != goods.len() || event.agents_before != agents {
            out.push(TranscriptViolation {
                rule: TranscriptRule::BundleShape,
                detail: format!(
                    "reduction {step}: recorded {} goods and {} agents, replay has {} and {agents}",
                    event.goods_before,
                    event.agents_before,
                    goods.len()
                ),
            });
        }
        let a = agents;
        let positions: Vec<usize> = match event.kind {
            1 => alloc::vec![1],
            2 => alloc::vec![a, a + 1],
            3 => alloc::vec![2 * a - 1, 2 * a, 2 * a + 1],
            4 => alloc::vec![1, 2 * a + 1],
            _ => Vec::new(),
        };
        if positions.is_empty() || ord_st(&goods, &positions) != event.bundle {
            out.push(TranscriptViolation {
                rule: TranscriptRule::BundleShape,
                detail: format!(
                    "reduction {step} of type {} took {:?}",
                    event.kind, event.bundle
                ),
            });
        }
        if event.kind != 1 {
            past_type1 = true;
        }
        if past_type1 && goods.len() < 2 * agents {
            out.push(TranscriptViolation {
                rule: TranscriptRule::EnoughGoods,
                detail: format!(
                    "reduction {step}: {} goods for {agents} agents",
                    goods.len()
                ),
            });
        }
        for g in &event.bundle {
            goods.remove(g);
        }
        agents = agents.saturating_sub(1);
    }
    if goods != tr.final_goods || agents != tr.final_agents.len() {
        out.push(TranscriptViolation {
            rule: TranscriptRule::BundleShape,
            detail: "replayed remainder differs from the recorded one".into(),
        });
    }
    let nf = tr.final_agents.len();
    if tr.final_goods.len() < 2 * nf {
        out.push(TranscriptViolation {
            rule: TranscriptRule::EnoughGoods,
            detail: format!("{} goods left for {nf} agents", tr.final_goods.len()),
        });
    }
    let bar2 = ord_st(&tr.final_goods, &[nf]).into_iter().next();
    let bar3 = ord_st(&tr.final_goods, &[2 * nf]).into_iter().next();
    for event in &tr.reductions {
        let bar = match event.kind {
            2 => bar2,
            3 => bar3,
            _ => continue,
        };
        let Some(bar) = bar else { continue };
        if let Some(g) = event.bundle.iter().find(|&&g| g <= bar) {
            out.push(TranscriptViolation {
                rule: TranscriptRule::ReductionGoodsAfterBags,
                detail: format!("type-{} good {g} is not after good {bar}", event.kind),
            });
        }
    }
    out
}

/// Structural property of an ordered, `d`-normalized valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureRule {
    /// `v(M) = d`.
    Total,
    /// `v(1) ≤ 1`, `v(C_d) ≤ 1` and `v(d+1) ≤ 1/2`.
    Pairs,
    /// `Σ_{j≥k} v(C_j) ≤ d-k+1` for every `k`.
    PairSuffix,
    /// `v(C_k) > 1` forces `v(2d+1-k) ≤ 1/3` and `v(k) > 2/3`.
    HeavyPair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureViolation {
    pub agent: usize,
    pub rule: StructureRule,
    pub detail: String,
}

/// Checks the pair structure `C_k = {k, 2d+1-k}` (1-indexed; missing goods
/// count as 0) of every agent of an ordered, `d`-normalized instance.
pub fn check_structure(inst: &Instance, d: usize) -> Vec<StructureViolation> {
    let mut out = Vec::new();
    let one = Rational::one();
    let zero = Rational::zero();
    let half = rat(1, 2);
    let third = rat(1, 3);
    let two_thirds = rat(2, 3);
    let m = inst.goods();
    for agent in 0..inst.agents() {
        let v = |pos: usize| -> &Rational {
            if pos >= 1 && pos <= m {
                inst.value(agent, pos - 1)
            } else {
                &zero
            }
        };
        let pair = |k: usize| v(k) + v(2 * d + 1 - k);
        let mut push = |rule, detail: String| {
            out.push(StructureViolation {
                agent,
                rule,
                detail,
            })
        };
        let total = inst.total_value(agent);
        if total != from_usize(d) {
            push(StructureRule::Total, format!("total value {total}"));
        }
        if d == 0 {
            continue;
        }
        if v(1) > &one {
            push(StructureRule::Pairs, format!("top good worth {}", v(1)));
        }
        if pair(d) > one {
            push(StructureRule::Pairs, format!("C_d worth {}", pair(d)));
        }
        if v(d + 1) > &half {
            push(StructureRule::Pairs, format!("good d+1 worth {}", v(d + 1)));
        }
        let mut suffix = Rational::zero();
        for k in (1..=d).rev() {
            let c = pair(k);
            suffix += &c;
            if suffix > from_usize(d - k + 1) {
                push(
                    StructureRule::PairSuffix,
                    format!("pairs {k}..d worth {suffix}"),
                );
            }
            if c > one && (v(2 * d + 1 - k) > &third || v(k) <= &two_thirds) {
                push(
                    StructureRule::HeavyPair,
                    format!(
                        "C_{k} worth {c} with goods {} and {}",
                        v(k),
                        v(2 * d + 1 - k)
                    ),
                );
            }
        }
    }
    out
}

/// Appends `d - n` agents valuing everything at 0 and returns the thresholds
/// `(1,…,1,0,…,0)` with `n` ones.
pub fn equivalence_expand(inst: &Instance, d: usize) -> Result<(Instance, ThresholdList)> {
    let n = inst.agents();
    if d < n {
        return Err(Error::InvalidParameters(format!(
            "d = {d} is below n = {n}"
        )));
    }
    let mut rows = inst.rows().to_vec();
    rows.resize(d, alloc::vec![Rational::zero(); inst.goods()]);
    let expanded = Instance::new(inst.goods(), rows)?;
    let mut taus = alloc::vec![Rational::one(); n];
    taus.resize(d, Rational::zero());
    Ok((expanded, ThresholdList::new(taus)?))
}

/// Verdicts of both sides of the expansion for one allocation of the
/// expanded instance: `(threshold-MMS on the expansion, 1-out-of-d on the
/// restriction to the original agents)`. They always agree.
pub fn equivalence_verdicts(
    inst: &Instance,
    expanded_alloc: &Allocation,
    d: usize,
    budget: u64,
) -> Result<(bool, bool)> {
    let (expanded, thresholds) = equivalence_expand(inst, d)?;
    expanded_alloc.validate(d, inst.goods())?;
    let all = inst.all_goods();
    let shares = (0..d)
        .map(|a| Ok(mms(&expanded, a, d, &all, budget)?.value))
        .collect::<Result<Vec<_>>>()?;
    let tmms = is_t_mms(
        &expanded,
        expanded_alloc,
        &PriorityRanking::identity(d),
        &thresholds,
        &shares,
    )?;
    let n = inst.agents();
    let mut restricted = Allocation::empty(n);
    for (a, bundle) in expanded_alloc.bundles.iter().take(n).enumerate() {
        restricted.bundles[a] = bundle.clone();
    }
    restricted.unallocated = all
        .iter()
        .copied()
        .filter(|g| !restricted.bundles.iter().any(|b| b.contains(g)))
        .collect();
    let ood = check_1_out_of_d(inst, &restricted, d, budget)?
        .iter()
        .all(|c| c.pass);
    Ok((tmms, ood))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::int;
    use crate::oracle::DEFAULT_NODE_BUDGET;
    use crate::rbf::ReductionEvent;
    use alloc::vec;

    fn set(items: &[usize]) -> Bundle {
        items.iter().copied().collect()
    }

    #[test]
    fn reduction_order_language() {
        assert!(matches_reduction_order(&[]));
        assert!(matches_reduction_order(&[1, 2, 2, 4, 3, 2, 4]));
        assert!(matches_reduction_order(&[3, 3, 4, 4, 3]));
        assert!(!matches_reduction_order(&[4, 1]));
        assert!(!matches_reduction_order(&[4, 2]));
        assert!(!matches_reduction_order(&[3, 1]));
    }

    #[test]
    fn empty_transcript_passes() {
        let tr = Transcript {
            agents: 2,
            goods: 4,
            reductions: vec![],
            bag_events: vec![],
            ran_out_of_goods: false,
            final_goods: (0..4).collect(),
            final_agents: vec![0, 1],
            initial_bags: vec![],
        };
        assert!(check_transcript(&tr).is_empty());
    }

    #[test]
    fn bad_order_is_reported() {
        let tr = Transcript {
            agents: 2,
            goods: 6,
            reductions: vec![
                ReductionEvent {
                    kind: 4,
                    bundle: set(&[0, 4]),
                    agent: 0,
                    rank: 0,
                    agents_before: 2,
                    goods_before: 6,
                },
                ReductionEvent {
                    kind: 1,
                    bundle: set(&[1]),
                    agent: 1,
                    rank: 1,
                    agents_before: 1,
                    goods_before: 4,
                },
            ],
            bag_events: vec![],
            ran_out_of_goods: false,
            final_goods: set(&[2, 3, 5]),
            final_agents: vec![],
            initial_bags: vec![],
        };
        let v = check_transcript(&tr);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, TranscriptRule::ReductionOrder);
    }

    #[test]
    fn structure_of_a_normalized_instance() {
        let inst = Instance::from_rows(vec![vec![rat(1, 2); 4]]).unwrap();
        assert!(check_structure(&inst, 2).is_empty());
        let bad = Instance::from_rows(vec![vec![int(2), int(0)]]).unwrap();
        let rules: Vec<_> = check_structure(&bad, 2)
            .into_iter()
            .map(|v| v.rule)
            .collect();
        assert!(rules.contains(&StructureRule::Pairs));
    }

    #[test]
    fn expansion_shapes() {
        let inst = Instance::from_integers(&[[1, 2], [3, 4]]).unwrap();
        let (same, t) = equivalence_expand(&inst, 2).unwrap();
        assert_eq!(same, inst);
        assert_eq!(t.as_slice(), &[int(1), int(1)]);
        let (big, t) = equivalence_expand(&inst, 3).unwrap();
        assert_eq!(big.agents(), 3);
        assert_eq!(t.as_slice(), &[int(1), int(1), int(0)]);
        assert!(equivalence_expand(&inst, 1).is_err());
    }

    #[test]
    fn too_many_bundles_pass_trivially() {
        let inst = Instance::from_integers(&[[5, 5], [1, 9]]).unwrap();
        let mut alloc = Allocation::empty(2);
        alloc.unallocated = set(&[0, 1]);
        assert!(check_1_out_of_d(&inst, &alloc, 3, DEFAULT_NODE_BUDGET)
            .unwrap()
            .iter()
            .all(|c| c.pass));
    }

    #[test]
    fn verdicts_agree() {
        let inst = Instance::from_integers(&[[3, 2, 2, 1, 1], [1, 1, 4, 2, 2]]).unwrap();
        let mut alloc = Allocation::empty(3);
        alloc.bundles[0] = set(&[0]);
        alloc.bundles[1] = set(&[2]);
        alloc.bundles[2] = set(&[1, 3, 4]);
        let (a, b) = equivalence_verdicts(&inst, &alloc, 3, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(a, b);
        assert!(a);
        alloc.bundles[0] = set(&[3]);
        alloc.bundles[2] = set(&[0, 1, 4]);
        let (a, b) = equivalence_verdicts(&inst, &alloc, 3, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(a, b);
        assert!(!a);
    }
}
