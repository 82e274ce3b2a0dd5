//! Exact maximin share `MMS_i^d(S) = max over d-partitions P of S of min_j v_i(P_j)`.
//!
//! [`mms`] is a branch-and-bound search over assignments of goods to parts;
//! [`mms_naive`] enumerates every set partition and exists to cross-check it.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{Bundle, Instance, Partition};
use crate::numeric::Rational;

/// Default node budget for [`mms`].
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Largest ground set [`mms_naive`] accepts.
pub const NAIVE_CAP: usize = 12;

/// The maximin value together with a `d`-partition achieving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MmsResult {
    pub value: Rational,
    pub witness: Partition,
}

/// Exact `MMS^d` of `agent` over `goods`.
///
/// Goods are assigned in non-increasing value order (ties by index). Each good
/// is tried in the parts in non-decreasing order of their current value, with
/// parts of equal value tried only once; the first optimum reached in that
/// order is returned, so the result is deterministic. Zero-valued goods are
/// placed in the first part of the witness.
pub fn mms(
    inst: &Instance,
    agent: usize,
    d: usize,
    goods: &Bundle,
    budget: u64,
) -> Result<MmsResult> {
    inst.check_agent(agent)?;
    inst.check_goods(goods)?;
    if d == 0 {
        return Err(Error::ZeroBundles);
    }
    let row = inst.row(agent);
    let positive: Vec<usize> = {
        let mut p: Vec<usize> = goods
            .iter()
            .copied()
            .filter(|&g| !row[g].is_zero())
            .collect();
        p.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
        p
    };
    let zeros: Vec<usize> = goods
        .iter()
        .copied()
        .filter(|&g| row[g].is_zero())
        .collect();

    let (value, assignment) = if d == 1 || positive.len() < d {
        // One bundle, or too few valuable goods for every part: all in part 0.
        let value = if d == 1 {
            positive.iter().map(|&g| &row[g]).sum()
        } else {
            Rational::zero()
        };
        (value, vec![0; positive.len()])
    } else {
        let values: Vec<Rational> = positive.iter().map(|&g| row[g].clone()).collect();
        let (scaled, scale) = to_integers(&values);
        let total: BigUint = scaled.iter().sum();
        if total.bits() < 120 {
            let w: Vec<u128> = scaled.iter().map(|x| x.to_u128().unwrap()).collect();
            let (best, assign) = Search::run(&w, d, budget)?;
            (Rational::new(BigInt::from(best), scale), assign)
        } else {
            let (best, assign) = Search::run(&scaled, d, budget)?;
            (Rational::new(BigInt::from(best), scale), assign)
        }
    };

    let mut parts = vec![Bundle::new(); d];
    for (&g, &p) in positive.iter().zip(&assignment) {
        parts[p].insert(g);
    }
    parts[0].extend(zeros);
    let witness = Partition::new(parts, goods)?;
    Ok(MmsResult { value, witness })
}

/// Reference enumerator over all set partitions of `goods` into at most `d`
/// blocks (missing blocks are empty). Limited to [`NAIVE_CAP`] goods.
pub fn mms_naive(inst: &Instance, agent: usize, d: usize, goods: &Bundle) -> Result<MmsResult> {
    inst.check_agent(agent)?;
    inst.check_goods(goods)?;
    if d == 0 {
        return Err(Error::ZeroBundles);
    }
    if goods.len() > NAIVE_CAP {
        return Err(Error::TooLarge {
            size: goods.len(),
            cap: NAIVE_CAP,
        });
    }
    let items: Vec<usize> = goods.iter().copied().collect();
    let values: Vec<Rational> = items
        .iter()
        .map(|&g| inst.value(agent, g).clone())
        .collect();

    struct Enum<'a> {
        values: &'a [Rational],
        d: usize,
        sums: Vec<Rational>,
        blocks: Vec<usize>,
        best: Option<(Rational, Vec<usize>)>,
    }
    impl Enum<'_> {
        fn go(&mut self, j: usize, used: usize) {
            if j == self.values.len() {
                let min = if used < self.d {
                    Rational::zero()
                } else {
                    self.sums
                        .iter()
                        .min()
                        .cloned()
                        .unwrap_or_else(Rational::zero)
                };
                if self.best.as_ref().is_none_or(|(b, _)| &min > b) {
                    self.best = Some((min, self.blocks.clone()));
                }
                return;
            }
            let limit = if used < self.d { used + 1 } else { used };
            for b in 0..limit {
                self.sums[b] += &self.values[j];
                self.blocks[j] = b;
                self.go(j + 1, used.max(b + 1));
                self.sums[b] -= &self.values[j];
            }
        }
    }
    let mut e = Enum {
        values: &values,
        d,
        sums: vec![Rational::zero(); d],
        blocks: vec![0; items.len()],
        best: None,
    };
    e.go(0, 0);
    let (value, blocks) = e.best.expect("enumeration visits at least one partition");
    let mut parts = vec![Bundle::new(); d];
    for (&g, &b) in items.iter().zip(&blocks) {
        parts[b].insert(g);
    }
    Ok(MmsResult {
        value,
        witness: Partition::new(parts, goods)?,
    })
}

/// Scales non-negative rationals to integers by the lcm of their denominators.
fn to_integers(values: &[Rational]) -> (Vec<BigUint>, BigInt) {
    let lcm = values
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled = values
        .iter()
        .map(|v| {
            let n = v.numer() * (&lcm / v.denom());
            n.to_biguint().expect("values are non-negative")
        })
        .collect();
    (scaled, lcm)
}

trait Weight:
    Clone + Ord + Zero + One + Add<Output = Self> + Sub<Output = Self> + Into<BigUint>
{
    fn from_big(x: &BigUint) -> Self;
}

impl Weight for u128 {
    fn from_big(x: &BigUint) -> Self {
        x.to_u128().expect("value fits the narrow search type")
    }
}

impl Weight for BigUint {
    fn from_big(x: &BigUint) -> Self {
        x.clone()
    }
}

struct Search<'a, W> {
    weights: &'a [W],
    suffix: Vec<W>,
    sums: Vec<W>,
    assign: Vec<usize>,
    best: Option<W>,
    best_assign: Vec<usize>,
    ceiling: W,
    nodes: u64,
    budget: u64,
}

impl<'a, W: Weight> Search<'a, W> {
    fn run(weights: &'a [W], d: usize, budget: u64) -> Result<(BigUint, Vec<usize>)> {
        let k = weights.len();
        let mut suffix = vec![W::zero(); k + 1];
        for j in (0..k).rev() {
            suffix[j] = suffix[j + 1].clone() + weights[j].clone();
        }
        let total: BigUint = suffix[0].clone().into();
        let ceiling = W::from_big(&(total / BigUint::from(d)));
        let mut s = Search {
            weights,
            suffix,
            sums: vec![W::zero(); d],
            assign: vec![0; k],
            best: None,
            best_assign: vec![0; k],
            ceiling,
            nodes: 0,
            budget,
        };
        s.dfs(0)?;
        let best = s.best.expect("search reaches at least one leaf");
        Ok((best.into(), s.best_assign))
    }

    /// Returns `Ok(true)` once the global ceiling is reached.
    fn dfs(&mut self, j: usize) -> Result<bool> {
        if j == self.weights.len() {
            let min = self.sums.iter().min().cloned().expect("d ≥ 1");
            if self.best.as_ref().is_none_or(|b| &min > b) {
                self.best = Some(min.clone());
                self.best_assign.copy_from_slice(&self.assign);
                if min >= self.ceiling {
                    return Ok(true);
                }
            }
            return Ok(false);
        }
        if let Some(best) = &self.best {
            // Beating the incumbent needs every part to reach best + 1.
            let target = best.clone() + W::one();
            let mut deficit = W::zero();
            for s in &self.sums {
                if s < &target {
                    deficit = deficit + (target.clone() - s.clone());
                    if deficit > self.suffix[j] {
                        return Ok(false);
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..self.sums.len()).collect();
        order.sort_by(|&a, &b| self.sums[a].cmp(&self.sums[b]).then(a.cmp(&b)));
        let w = self.weights[j].clone();
        let mut previous: Option<W> = None;
        for p in order {
            if previous.as_ref() == Some(&self.sums[p]) {
                continue;
            }
            previous = Some(self.sums[p].clone());
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::BudgetExhausted {
                    budget: self.budget,
                });
            }
            self.sums[p] = self.sums[p].clone() + w.clone();
            self.assign[j] = p;
            let done = self.dfs(j + 1)?;
            self.sums[p] = self.sums[p].clone() - w.clone();
            if done {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bundle_value;
    use crate::numeric::{int, rat};

    fn all(n: usize) -> Bundle {
        (0..n).collect()
    }

    #[test]
    fn single_bundle_is_total() {
        let inst = Instance::from_integers(&[[3, 2, 1]]).unwrap();
        let r = mms(&inst, 0, 1, &all(3), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.value, int(6));
        assert_eq!(r.witness.d(), 1);
    }

    #[test]
    fn three_two_one_into_two() {
        let inst = Instance::from_integers(&[[3, 2, 1]]).unwrap();
        let r = mms(&inst, 0, 2, &all(3), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.value, int(3));
        let parts = r.witness.parts();
        assert_eq!(parts[0], [0].into_iter().collect());
        assert_eq!(parts[1], [1, 2].into_iter().collect());
        assert_eq!(mms_naive(&inst, 0, 2, &all(3)).unwrap().value, int(3));
    }

    #[test]
    fn naive_edge_cases() {
        let one = Instance::from_integers(&[[5]]).unwrap();
        assert_eq!(mms_naive(&one, 0, 2, &all(1)).unwrap().value, int(0));
        let three = Instance::from_integers(&[[1, 1, 1]]).unwrap();
        assert_eq!(mms_naive(&three, 0, 3, &all(3)).unwrap().value, int(1));
        let mixed = Instance::from_integers(&[[4, 7, 2]]).unwrap();
        assert_eq!(mms_naive(&mixed, 0, 3, &all(3)).unwrap().value, int(2));
        assert_eq!(mms_naive(&mixed, 0, 4, &all(3)).unwrap().value, int(0));
        let big = Instance::from_integers(&[[1; 13]]).unwrap();
        assert_eq!(
            mms_naive(&big, 0, 2, &all(13)),
            Err(Error::TooLarge { size: 13, cap: 12 })
        );
    }

    #[test]
    fn zero_mms_witness_puts_everything_in_first_part() {
        let inst = Instance::from_integers(&[[5, 0, 0]]).unwrap();
        let r = mms(&inst, 0, 2, &all(3), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.value, int(0));
        assert_eq!(r.witness.parts()[0].len(), 3);
        assert!(r.witness.parts()[1].is_empty());
    }

    #[test]
    fn rational_values_and_subsets() {
        let inst = Instance::from_rows(vec![vec![
            rat(1, 2),
            rat(1, 3),
            rat(1, 6),
            rat(1, 2),
            rat(1, 2),
        ]])
        .unwrap();
        let r = mms(&inst, 0, 2, &all(5), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.value, int(1));
        let vals = r.witness.part_values(&inst, 0).unwrap();
        assert!(vals.iter().all(|v| v >= &int(1)));
        let subset: Bundle = [0, 1, 2].into_iter().collect();
        let s = mms(&inst, 0, 2, &subset, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(s.value, rat(1, 2));
        assert_eq!(s.witness.ground(), subset);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let inst =
            Instance::from_integers(&[[97, 89, 83, 79, 73, 71, 67, 61, 59, 53, 47, 43, 41, 37]])
                .unwrap();
        assert_eq!(
            mms(&inst, 0, 5, &all(14), 10),
            Err(Error::BudgetExhausted { budget: 10 })
        );
        assert!(mms(&inst, 0, 5, &all(14), DEFAULT_NODE_BUDGET).is_ok());
    }

    #[test]
    fn huge_values_take_the_bignum_path() {
        let big = Rational::from_integer(BigInt::from(10).pow(40));
        let inst = Instance::from_rows(vec![vec![big.clone(), big.clone(), big.clone() * int(2)]])
            .unwrap();
        let r = mms(&inst, 0, 2, &all(3), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.value, big * int(2));
        let v: Vec<Rational> = r
            .witness
            .parts()
            .iter()
            .map(|p| bundle_value(&inst, 0, p).unwrap())
            .collect();
        assert_eq!(v.iter().min().unwrap(), &r.value);
    }
}
