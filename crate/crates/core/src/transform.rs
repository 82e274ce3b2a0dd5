//! Reduction of an arbitrary instance to an ordered, `d`-normalized one, and
//! the way back.
//!
//! Going forward: agents whose `MMS^d` is zero are dropped, agents are cloned
//! up to a multiple of three when the ordinal algorithm needs it, every agent's
//! values are rescaled part-by-part against her own MMS partition so each part
//! is worth exactly 1, each row is sorted non-increasingly, and zero-valued
//! dummy goods are appended. Going back, [`unpick`] runs the picking
//! procedure to turn an allocation of the ordered instance into one of the
//! normalized instance that is at least as good for every agent, and
//! [`reinstate`] maps working agents back onto the original ones.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{bundle_value, Allocation, Bundle, Instance, Partition};
use crate::numeric::Rational;
use crate::oracle::{mms, MmsResult};

/// Original agent → indices of the clones appended for it.
pub type DuplicationMap = BTreeMap<usize, Vec<usize>>;

/// Appends clones of agent 0 until the agent count is `3⌈n/3⌉`.
pub fn pad_agents_to_multiple_of_3(inst: &Instance) -> (Instance, DuplicationMap) {
    let n = inst.agents();
    let target = n.div_ceil(3) * 3;
    let mut rows = inst.rows().to_vec();
    let mut map = DuplicationMap::new();
    for clone in n..target {
        rows.push(inst.row(0).to_vec());
        map.entry(0).or_default().push(clone);
    }
    let padded = Instance::new(inst.goods(), rows).expect("clones keep the shape");
    (padded, map)
}

/// Appends zero-valued goods until there are at least `min_goods`.
pub fn pad_goods(inst: &Instance, min_goods: usize) -> (Instance, Bundle) {
    let m = inst.goods();
    if min_goods <= m {
        return (inst.clone(), Bundle::new());
    }
    let rows = inst
        .rows()
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.resize(min_goods, Rational::zero());
            r
        })
        .collect();
    let padded = Instance::new(min_goods, rows).expect("padding keeps rows rectangular");
    (padded, (m..min_goods).collect())
}

/// Output of [`normalize`].
#[derive(Debug, Clone)]
pub struct Normalized {
    /// Surviving agents only, in their original relative order.
    pub instance: Option<Instance>,
    /// One MMS partition per surviving agent; every part is worth 1 under the
    /// normalized valuation.
    pub partitions: Vec<Partition>,
    /// Input index of each surviving agent.
    pub survivors: Vec<usize>,
    /// Input agents whose `MMS^d` is zero.
    pub dropped: Bundle,
    /// `MMS^d` of every input agent under the input valuation.
    pub mms_values: Vec<Rational>,
}

/// Rescales each agent's values part-by-part against her `d`-MMS partition:
/// `v'(g) = v(g) / v(P_j)` for the part `P_j` containing `g`.
pub fn normalize(inst: &Instance, d: usize, budget: u64) -> Result<Normalized> {
    let mut cache = MmsCache::default();
    normalize_cached(inst, d, budget, &mut cache)
}

#[derive(Default)]
struct MmsCache(BTreeMap<(Vec<Rational>, usize), MmsResult>);

impl MmsCache {
    fn get(&mut self, inst: &Instance, agent: usize, d: usize, budget: u64) -> Result<MmsResult> {
        let key = (inst.row(agent).to_vec(), d);
        if let Some(hit) = self.0.get(&key) {
            return Ok(hit.clone());
        }
        let result = mms(inst, agent, d, &inst.all_goods(), budget)?;
        self.0.insert(key, result.clone());
        Ok(result)
    }
}

fn normalize_cached(
    inst: &Instance,
    d: usize,
    budget: u64,
    cache: &mut MmsCache,
) -> Result<Normalized> {
    let mut rows = Vec::new();
    let mut partitions = Vec::new();
    let mut survivors = Vec::new();
    let mut dropped = Bundle::new();
    let mut mms_values = Vec::with_capacity(inst.agents());
    for agent in 0..inst.agents() {
        let result = cache.get(inst, agent, d, budget)?;
        mms_values.push(result.value.clone());
        if result.value.is_zero() {
            dropped.insert(agent);
            continue;
        }
        let row = inst.row(agent);
        let mut scaled = vec![Rational::zero(); inst.goods()];
        for part in result.witness.parts() {
            let part_value = bundle_value(inst, agent, part)?;
            for &g in part {
                scaled[g] = &row[g] / &part_value;
            }
        }
        rows.push(scaled);
        partitions.push(result.witness);
        survivors.push(agent);
    }
    let instance = if rows.is_empty() {
        None
    } else {
        Some(Instance::new(inst.goods(), rows)?)
    };
    Ok(Normalized {
        instance,
        partitions,
        survivors,
        dropped,
        mms_values,
    })
}

/// Sorts every agent's row non-increasingly (stable, so equal values keep
/// their original index order). `perms[i][t]` is the original good that agent
/// `i` sees at position `t`.
pub fn order(inst: &Instance) -> (Instance, Vec<Vec<usize>>) {
    let mut rows = Vec::with_capacity(inst.agents());
    let mut perms = Vec::with_capacity(inst.agents());
    for row in inst.rows() {
        let mut perm: Vec<usize> = (0..row.len()).collect();
        perm.sort_by(|&a, &b| row[b].cmp(&row[a]));
        rows.push(perm.iter().map(|&g| row[g].clone()).collect());
        perms.push(perm);
    }
    let ordered = Instance::new(inst.goods(), rows).expect("sorting keeps the shape");
    (ordered, perms)
}

/// Which reduction a pipeline prepares for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Ordinal bag filling: agents padded to `n' = 3⌈n/3⌉`, `d = 4n'/3`,
    /// goods padded to `2n'`.
    Ordinal,
    /// Priority-ranked bag filling: `d = n`, no padding.
    Proportional,
}

impl Target {
    /// Bundle count whose MMS the original agents are promised.
    pub fn original_d(self, n: usize) -> usize {
        match self {
            Target::Ordinal => 4 * n.div_ceil(3),
            Target::Proportional => n,
        }
    }
}

/// The working (normalized, ordered, padded) side of a pipeline.
#[derive(Debug, Clone)]
pub struct Working {
    /// Original agent behind each working agent (clones share their source).
    pub owner: Vec<usize>,
    /// Original agent → working indices of its clones.
    pub duplicated: DuplicationMap,
    /// `d` the working instance is normalized for.
    pub d: usize,
    /// Normalized valuations, working agents × original goods.
    pub normalized: Instance,
    /// Ordered valuations, working agents × positions (dummies included).
    pub ordered: Instance,
    /// Per working agent, position → original good (positions `< m` only).
    pub sort_perms: Vec<Vec<usize>>,
    /// Positions of the appended zero-valued goods.
    pub dummy_goods: Bundle,
    /// Normalized MMS partition of each working agent (original goods).
    pub partitions: Vec<Partition>,
}

/// Everything needed to map an allocation of the working instance back.
#[derive(Debug, Clone)]
pub struct PipelineRecord {
    pub target: Target,
    pub original: Instance,
    /// `d` of the promise made to original agents.
    pub original_d: usize,
    /// `MMS^{original_d}` of every original agent.
    pub original_mms: Vec<Rational>,
    /// Original agents with zero MMS; they receive nothing.
    pub dropped: Bundle,
    /// `None` when every agent was dropped.
    pub working: Option<Working>,
}

/// Runs the forward reduction.
///
/// Surviving agents are re-normalized for the `d` matching their own count,
/// which is never larger than the original one, so their MMS can only grow and
/// nobody else is dropped on the way.
pub fn prepare(inst: &Instance, target: Target, budget: u64) -> Result<PipelineRecord> {
    let n = inst.agents();
    let original_d = target.original_d(n);
    let mut cache = MmsCache::default();
    let first = normalize_cached(inst, original_d, budget, &mut cache)?;
    let survivors = first.survivors.clone();
    let mut record = PipelineRecord {
        target,
        original: inst.clone(),
        original_d,
        original_mms: first.mms_values,
        dropped: first.dropped,
        working: None,
    };
    if survivors.is_empty() {
        return Ok(record);
    }

    let sub = inst.select_agents(&survivors)?;
    let (padded, clones, d) = match target {
        Target::Ordinal => {
            let (padded, clones) = pad_agents_to_multiple_of_3(&sub);
            let d = 4 * padded.agents() / 3;
            (padded, clones, d)
        }
        Target::Proportional => {
            let d = sub.agents();
            (sub, DuplicationMap::new(), d)
        }
    };
    let mut owner: Vec<usize> = survivors.clone();
    owner.resize(padded.agents(), survivors[0]);
    let duplicated: DuplicationMap = clones
        .into_iter()
        .map(|(src, list)| (survivors[src], list))
        .collect();

    let normalized = normalize_cached(&padded, d, budget, &mut cache)?;
    if !normalized.dropped.is_empty() {
        return Err(Error::GuaranteeViolated(format!(
            "agents {:?} lost their MMS when moving to d = {d}",
            normalized.dropped
        )));
    }
    let normalized_inst = normalized.instance.expect("nobody dropped");
    let (ordered, sort_perms) = order(&normalized_inst);
    let min_goods = match target {
        Target::Ordinal => 2 * padded.agents(),
        Target::Proportional => 0,
    };
    let (ordered, dummy_goods) = pad_goods(&ordered, min_goods);
    record.working = Some(Working {
        owner,
        duplicated,
        d,
        normalized: normalized_inst,
        ordered,
        sort_perms,
        dummy_goods,
        partitions: normalized.partitions,
    });
    Ok(record)
}

/// Picking procedure: walk the ordered positions from most to least valuable;
/// the working agent owning position `t` takes her most valuable remaining
/// real good under her normalized valuation (lowest index on ties).
///
/// Every agent ends up with `v'_i(Y_i) ≥ v''_i(X_i)`; this is checked and a
/// violation is reported as [`Error::GuaranteeViolated`].
pub fn unpick(ordered_alloc: &Allocation, record: &PipelineRecord) -> Result<Allocation> {
    let working = record
        .working
        .as_ref()
        .ok_or_else(|| Error::Precondition("pipeline has no working agents".into()))?;
    let agents = working.ordered.agents();
    let positions = working.ordered.goods();
    let m = working.normalized.goods();
    ordered_alloc.validate(agents, positions)?;

    let mut owner_of = vec![None; positions];
    for (agent, bundle) in ordered_alloc.bundles.iter().enumerate() {
        for &t in bundle {
            owner_of[t] = Some(agent);
        }
    }
    let mut remaining: Bundle = (0..m).collect();
    let mut picked = Allocation::empty(agents);
    for owner in owner_of.iter().take(m) {
        let Some(agent) = *owner else { continue };
        let row = working.normalized.row(agent);
        let mut best: Option<usize> = None;
        for &g in &remaining {
            if best.is_none_or(|b| row[g] > row[b]) {
                best = Some(g);
            }
        }
        if let Some(g) = best {
            remaining.remove(&g);
            picked.bundles[agent].insert(g);
        }
    }
    picked.unallocated = remaining;

    for agent in 0..agents {
        let got = bundle_value(&working.normalized, agent, &picked.bundles[agent])?;
        let had = bundle_value(&working.ordered, agent, &ordered_alloc.bundles[agent])?;
        if got < had {
            return Err(Error::GuaranteeViolated(format!(
                "picking gave agent {agent} value {got} below her ordered value {had}"
            )));
        }
    }
    Ok(picked)
}

/// Maps an allocation over working agents back to the original agents.
///
/// Goods outside the original range are dropped, a clone's bundle goes to
/// `unallocated`, and dropped agents receive nothing.
pub fn reinstate(alloc: &Allocation, record: &PipelineRecord) -> Allocation {
    let n = record.original.agents();
    let m = record.original.goods();
    let mut out = Allocation::empty(n);
    if let Some(working) = &record.working {
        let mut seen = vec![false; n];
        for (w, bundle) in alloc.bundles.iter().enumerate() {
            let Some(&orig) = working.owner.get(w) else {
                continue;
            };
            let real: Bundle = bundle.iter().copied().filter(|&g| g < m).collect();
            if seen[orig] {
                out.unallocated.extend(real);
            } else {
                seen[orig] = true;
                out.bundles[orig] = real;
            }
        }
    }
    let given: Bundle = out.bundles.iter().flatten().copied().collect();
    out.unallocated = (0..m).filter(|g| !given.contains(g)).collect();
    out
}

/// `reinstate(unpick(..))`.
pub fn lift(ordered_alloc: &Allocation, record: &PipelineRecord) -> Result<Allocation> {
    let picked = unpick(ordered_alloc, record)?;
    Ok(reinstate(&picked, record))
}

/// Checks that the lifted allocation gives every original agent at least her
/// `MMS^{original_d}` times `factor(agent)`.
pub fn check_lifted(
    alloc: &Allocation,
    record: &PipelineRecord,
    factor: impl Fn(usize) -> Rational,
) -> Result<()> {
    for agent in 0..record.original.agents() {
        let value = bundle_value(&record.original, agent, &alloc.bundles[agent])?;
        let target = factor(agent) * &record.original_mms[agent];
        if value < target {
            return Err(Error::GuaranteeViolated(format!(
                "agent {agent} received {value}, below her target {target}"
            )));
        }
    }
    Ok(())
}

/// True iff every part of every working agent's partition is worth exactly 1
/// and every dummy good is worth 0 to everyone.
pub fn is_normalized_witnessed(working: &Working) -> bool {
    let one = Rational::one();
    let parts_ok = working.partitions.iter().enumerate().all(|(a, p)| {
        p.part_values(&working.normalized, a)
            .map(|vals| vals.iter().all(|v| v == &one))
            .unwrap_or(false)
    });
    let dummies_ok = working
        .dummy_goods
        .iter()
        .all(|&g| (0..working.ordered.agents()).all(|a| working.ordered.value(a, g).is_zero()));
    parts_ok && dummies_ok
}
