//! Ordinal bag filling: every agent receives at least her 1-out-of-`4⌈n/3⌉`
//! maximin share.
//!
//! On an ordered, `d`-normalized instance with `m ≥ 2n` goods, bag `k`
//! starts as `{k, 2n-1-k}` (0-indexed) and the bags are filled one after the
//! other with the remaining goods in index order until some agent without a
//! bag values the current one at 1 or more.

use alloc::format;
use alloc::vec::Vec;

use num_traits::One;

use crate::error::{Error, Result};
use crate::model::{bundle_value, Allocation, Bundle, Instance};
use crate::numeric::{from_usize, Rational};
use crate::transform::{check_lifted, lift, prepare, PipelineRecord, Target};

/// What to do when the run ends with an agent left without a bag worth 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuaranteeCheck {
    /// Report it as [`Error::GuaranteeViolated`].
    #[default]
    Enforce,
    /// Return the run with `terminated_early` set.
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OrdinalConfig {
    /// Normalization the input is checked against; `4⌈n/3⌉` when `None`.
    pub d: Option<usize>,
    pub check: GuaranteeCheck,
}

/// One good appended to one bag during filling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillEvent {
    pub bag: usize,
    pub good: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalRun {
    /// `{k, 2n-1-k}` for each bag `k`.
    pub initial_bags: Vec<Bundle>,
    /// Bag contents when the run ends (leftovers included).
    pub final_bags: Vec<Bundle>,
    /// Bag → agent who received it.
    pub assignment: Vec<usize>,
    /// Some bag needed a good after all goods were used.
    pub terminated_early: bool,
    /// Every fill, in order.
    pub fill_order: Vec<FillEvent>,
    /// Goods never used for filling, appended to the last bag.
    pub leftover: Bundle,
    /// The single good a literal `M \ [j]` reading of the leftover step would
    /// leave unallocated (the first never-consumed good), if any.
    pub literal_gap: Option<usize>,
}

/// Runs ordinal bag filling on an ordered, normalized instance.
///
/// The input must be ordered, have `m ≥ 2n`, and give every agent total value
/// `d` (with `d = 4⌈n/3⌉` unless configured otherwise). A bag goes to the
/// lowest-index agent without a bag who values it at least 1.
pub fn run_ordinal(inst: &Instance, config: OrdinalConfig) -> Result<(Allocation, OrdinalRun)> {
    let n = inst.agents();
    let m = inst.goods();
    let d = config.d.unwrap_or(4 * n.div_ceil(3));
    if !inst.is_ordered() {
        return Err(Error::Precondition("instance is not ordered".into()));
    }
    if m < 2 * n {
        return Err(Error::Precondition(format!(
            "{m} goods, at least 2n = {} needed",
            2 * n
        )));
    }
    let target_total = from_usize(d);
    if let Some(agent) = (0..n).find(|&a| inst.total_value(a) != target_total) {
        return Err(Error::Precondition(format!(
            "agent {agent} has total value {}, a {d}-normalized instance has {d}",
            inst.total_value(agent)
        )));
    }

    let one = Rational::one();
    let initial_bags: Vec<Bundle> = (0..n)
        .map(|k| [k, 2 * n - 1 - k].into_iter().collect())
        .collect();
    let mut bags = initial_bags.clone();
    let mut assignment = alloc::vec![usize::MAX; n];
    let mut has_bag = alloc::vec![false; n];
    let mut fill_order = Vec::new();
    let mut next = 2 * n;
    let mut terminated_early = false;

    'rounds: for k in 0..n {
        loop {
            let liker = (0..n).find(|&i| {
                !has_bag[i] && bundle_value(inst, i, &bags[k]).expect("indices in range") >= one
            });
            if let Some(i) = liker {
                assignment[k] = i;
                has_bag[i] = true;
                break;
            }
            if next >= m {
                terminated_early = true;
                // remaining bags go to remaining agents in index order
                let free: Vec<usize> = (0..n).filter(|&i| !has_bag[i]).collect();
                for (bag, agent) in (k..n).zip(free) {
                    assignment[bag] = agent;
                    has_bag[agent] = true;
                }
                break 'rounds;
            }
            bags[k].insert(next);
            fill_order.push(FillEvent { bag: k, good: next });
            next += 1;
        }
    }

    let leftover: Bundle = (next..m).collect();
    let literal_gap = (next < m).then_some(next);
    if let Some(last) = bags.last_mut() {
        last.extend(leftover.iter().copied());
    }

    let mut allocation = Allocation::empty(n);
    for (bag, &agent) in assignment.iter().enumerate() {
        allocation.bundles[agent] = bags[bag].clone();
    }

    if terminated_early && config.check == GuaranteeCheck::Enforce {
        return Err(Error::GuaranteeViolated(
            "ordinal bag filling ran out of goods before every agent had a bag".into(),
        ));
    }
    let run = OrdinalRun {
        initial_bags,
        final_bags: bags,
        assignment,
        terminated_early,
        fill_order,
        leftover,
        literal_gap,
    };
    Ok((allocation, run))
}

/// Result of [`run_1_out_of_d`].
#[derive(Debug, Clone)]
pub struct OrdinalOutcome {
    /// Allocation of the original instance.
    pub allocation: Allocation,
    /// `4⌈n/3⌉`.
    pub d: usize,
    /// `None` for the shortcuts (single agent, every MMS zero).
    pub record: Option<PipelineRecord>,
    pub run: Option<OrdinalRun>,
    /// Working-instance allocation before it was mapped back.
    pub working_allocation: Option<Allocation>,
}

/// Full pipeline on an arbitrary instance: every agent receives at least her
/// `MMS^{4⌈n/3⌉}`. The guarantee is checked against the exact MMS values and
/// a failure is reported as [`Error::GuaranteeViolated`].
pub fn run_1_out_of_d(inst: &Instance, budget: u64) -> Result<OrdinalOutcome> {
    let n = inst.agents();
    let m = inst.goods();
    let d = 4 * n.div_ceil(3);
    if n == 1 {
        let mut allocation = Allocation::empty(1);
        allocation.bundles[0] = inst.all_goods();
        return Ok(OrdinalOutcome {
            allocation,
            d,
            record: None,
            run: None,
            working_allocation: None,
        });
    }
    let record = prepare(inst, Target::Ordinal, budget)?;
    let Some(working) = &record.working else {
        // every MMS is zero, so any allocation works; deal goods round-robin
        let mut allocation = Allocation::empty(n);
        for g in 0..m {
            allocation.bundles[g % n].insert(g);
        }
        return Ok(OrdinalOutcome {
            allocation,
            d,
            record: Some(record),
            run: None,
            working_allocation: None,
        });
    };
    let config = OrdinalConfig {
        d: Some(working.d),
        check: GuaranteeCheck::Enforce,
    };
    let (ordered_alloc, run) = run_ordinal(&working.ordered, config)?;
    let allocation = lift(&ordered_alloc, &record)?;
    check_lifted(&allocation, &record, |_| Rational::one())?;
    Ok(OrdinalOutcome {
        allocation,
        d,
        record: Some(record),
        run: Some(run),
        working_allocation: Some(ordered_alloc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;
    use crate::oracle::{mms, DEFAULT_NODE_BUDGET};
    use alloc::vec;

    #[test]
    fn initial_bags_already_liked_need_no_filling() {
        // 3 identical agents, 6 goods of 1/2 each plus filler: 4-normalized
        let mut row = vec![rat(1, 2); 6];
        row.extend(vec![rat(1, 2); 2]);
        let inst = Instance::from_rows(vec![row.clone(), row.clone(), row]).unwrap();
        let (alloc, run) = run_ordinal(&inst, OrdinalConfig::default()).unwrap();
        assert!(run.fill_order.is_empty());
        assert!(!run.terminated_early);
        assert_eq!(run.assignment, vec![0, 1, 2]);
        assert_eq!(run.initial_bags[0], [0, 5].into_iter().collect());
        // the two unused goods land in the last bag
        assert_eq!(run.leftover, [6, 7].into_iter().collect());
        assert_eq!(run.literal_gap, Some(6));
        assert_eq!(alloc.bundles[2], [2, 3, 6, 7].into_iter().collect());
    }

    #[test]
    fn rejects_invalid_input() {
        let unordered = Instance::from_integers(&[[1, 3]]).unwrap();
        assert!(matches!(
            run_ordinal(&unordered, OrdinalConfig::default()),
            Err(Error::Precondition(_))
        ));
        let too_few = Instance::from_integers(&[[4, 0, 0], [4, 0, 0]]).unwrap();
        assert!(matches!(
            run_ordinal(&too_few, OrdinalConfig::default()),
            Err(Error::Precondition(_))
        ));
        let wrong_total = Instance::from_integers(&[[2, 1]]).unwrap();
        assert!(matches!(
            run_ordinal(&wrong_total, OrdinalConfig::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn single_agent_gets_everything() {
        let inst = Instance::from_integers(&[[3, 1, 4]]).unwrap();
        let out = run_1_out_of_d(&inst, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(out.allocation.bundles[0].len(), 3);
    }

    #[test]
    fn two_goods_two_agents() {
        let inst = Instance::from_integers(&[[1, 1], [1, 1]]).unwrap();
        let out = run_1_out_of_d(&inst, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(out.d, 4);
        assert_eq!(out.allocation.bundles[0].len(), 1);
        assert_eq!(out.allocation.bundles[1].len(), 1);
    }

    #[test]
    fn three_agents_meet_their_share() {
        let inst = Instance::from_integers(&[
            [7, 3, 9, 1, 4, 4, 8, 2],
            [1, 10, 2, 6, 6, 3, 5, 5],
            [5, 5, 5, 5, 1, 2, 3, 9],
        ])
        .unwrap();
        let out = run_1_out_of_d(&inst, DEFAULT_NODE_BUDGET).unwrap();
        for a in 0..3 {
            let share = mms(&inst, a, 4, &inst.all_goods(), DEFAULT_NODE_BUDGET)
                .unwrap()
                .value;
            let got = bundle_value(&inst, a, &out.allocation.bundles[a]).unwrap();
            assert!(got >= share, "agent {a}: {got} < {share}");
        }
        assert!(!out.run.unwrap().terminated_early);
    }
}
