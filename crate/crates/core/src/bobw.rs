//! Cyclic rank rotations and the bound calculus behind them.
//!
//! Running the priority-ranked algorithm once per cyclic shift of the ranking
//! and picking one run uniformly at random gives every agent each rank with
//! probability `1/n`: ex post she gets at least `τ_n`, ex ante at least the
//! mean threshold. The second half of the module evaluates the averages that
//! appear in the lower and upper bounds exactly and compares them with their
//! logarithmic closed forms.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{bundle_value, Allocation, Instance, PriorityRanking, ThresholdList};
use crate::numeric::{from_usize, ln, rat, Interval, Rational, LN_DIGITS};
use crate::rbf::{run_rbf_prepared, run_rbf_truthful, RbfConfig, Transcript};
use crate::transform::{prepare, Target};

/// One rotation of the lottery.
#[derive(Debug, Clone)]
pub struct SupportPoint {
    pub ranking: PriorityRanking,
    pub allocation: Allocation,
    /// Value of each agent's bundle.
    pub values: Vec<Rational>,
    pub transcript: Option<Transcript>,
}

/// Uniform distribution over `n` allocations.
#[derive(Debug, Clone)]
pub struct AllocationDistribution {
    pub support: Vec<SupportPoint>,
    /// Exact expected value per agent.
    pub ex_ante: Vec<Rational>,
    /// Smallest value per agent over the support.
    pub ex_post_min: Vec<Rational>,
    /// `MMS^n` of each agent (1 for normalized input).
    pub shares: Vec<Rational>,
}

impl AllocationDistribution {
    pub fn probability(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(self.support.len()))
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &SupportPoint {
        &self.support[rng.gen_range(0..self.support.len())]
    }

    fn from_support(support: Vec<SupportPoint>, shares: Vec<Rational>) -> Self {
        let n = shares.len();
        let k = from_usize(support.len());
        let ex_ante = (0..n)
            .map(|a| support.iter().map(|p| &p.values[a]).sum::<Rational>() / &k)
            .collect();
        let ex_post_min = (0..n)
            .map(|a| {
                support
                    .iter()
                    .map(|p| p.values[a].clone())
                    .min()
                    .unwrap_or_else(Rational::zero)
            })
            .collect();
        Self {
            support,
            ex_ante,
            ex_post_min,
            shares,
        }
    }
}

/// Runs on an ordered, `n`-normalized instance once per rotation
/// `rank(i) = (i + k) mod n`.
pub fn cyclic_rotation_distribution(
    inst: &Instance,
    thresholds: &ThresholdList,
) -> Result<AllocationDistribution> {
    let n = inst.agents();
    let mut support = Vec::with_capacity(n);
    for k in 0..n {
        let ranking = PriorityRanking::rotation(n, k);
        let out = run_rbf_truthful(inst, thresholds, &ranking, RbfConfig::default())?;
        let values = out.allocation.values(inst)?;
        support.push(SupportPoint {
            ranking,
            allocation: out.allocation,
            values,
            transcript: Some(out.transcript),
        });
    }
    Ok(AllocationDistribution::from_support(
        support,
        alloc::vec![Rational::one(); n],
    ))
}

/// Same lottery for an arbitrary instance, going through the reduction
/// pipeline once and mapping every run back.
pub fn cyclic_rotation_distribution_general(
    inst: &Instance,
    thresholds: &ThresholdList,
    budget: u64,
) -> Result<AllocationDistribution> {
    let n = inst.agents();
    let record = prepare(inst, Target::Proportional, budget)?;
    let mut support = Vec::with_capacity(n);
    for k in 0..n {
        let ranking = PriorityRanking::rotation(n, k);
        let out = run_rbf_prepared(&record, thresholds, &ranking, RbfConfig::default())?;
        let values = (0..n)
            .map(|a| bundle_value(inst, a, &out.allocation.bundles[a]))
            .collect::<Result<Vec<_>>>()?;
        support.push(SupportPoint {
            ranking,
            allocation: out.allocation,
            values,
            transcript: out.run.map(|r| r.transcript),
        });
    }
    Ok(AllocationDistribution::from_support(
        support,
        record.original_mms.clone(),
    ))
}

/// Which average a bound is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundFamily {
    /// `(1/n) Σ max(2n/(2n+i-1), 3/4 + 1/(12n)) ≥ 2 ln(4/3) + 1/4 + 1/(36n)`.
    Gamma,
    /// `(1/n)(2 + Σ_{i≥3} 3n/(3n+i-2)) ≤ 3 ln(4/3) + 1/(2n)`.
    Hard1,
    /// `(1/n) Σ min(3n/(3n+i-2), max(5/6, 1-(i-1)/(3n))) ≤ 13/24 + 3 ln(10/9) + 1/(3n)`.
    Hard2,
}

/// Outcome of comparing an average with its closed-form bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub family: BoundFamily,
    pub n: usize,
    /// Exact average, when computed by rational summation.
    pub exact: Option<Rational>,
    /// Enclosure of the average (a point when `exact` is set).
    pub average: Interval,
    /// Enclosure of the closed-form bound.
    pub bound: Interval,
    /// The inequality is proven by the enclosures.
    pub holds: bool,
}

const FIXED_DIGITS: u32 = 30;
const FIXED_SCALE: u128 = 1_000_000_000_000_000_000_000_000_000_000;

fn floor_ceil(num: u128, den: u128) -> (u128, u128) {
    let scaled = num * FIXED_SCALE;
    let q = scaled / den;
    (q, if scaled.is_multiple_of(den) { q } else { q + 1 })
}

impl BoundFamily {
    pub fn is_lower(self) -> bool {
        matches!(self, BoundFamily::Gamma)
    }

    /// Term `i` (1-indexed) of the sum.
    pub fn term(self, n: usize, i: usize) -> Rational {
        let q = |a: usize, b: usize| Rational::new(BigInt::from(a), BigInt::from(b));
        match self {
            BoundFamily::Gamma => q(2 * n, 2 * n + i - 1).max(q(9 * n + 1, 12 * n)),
            BoundFamily::Hard1 if i <= 2 => Rational::one(),
            BoundFamily::Hard1 => q(3 * n, 3 * n + i - 2),
            BoundFamily::Hard2 => {
                let linear = q(3 * n + 1 - i, 3 * n);
                let floor = rat(5, 6).max(linear);
                if i == 1 {
                    floor
                } else {
                    q(3 * n, 3 * n + i - 2).min(floor)
                }
            }
        }
    }

    /// Floor and ceiling of `term · 10^30`.
    fn term_fixed(self, n: usize, i: usize) -> (u128, u128) {
        let (n, i) = (n as u128, i as u128);
        match self {
            BoundFamily::Gamma => {
                let (a0, a1) = floor_ceil(2 * n, 2 * n + i - 1);
                let (b0, b1) = floor_ceil(9 * n + 1, 12 * n);
                (a0.max(b0), a1.max(b1))
            }
            BoundFamily::Hard1 if i <= 2 => (FIXED_SCALE, FIXED_SCALE),
            BoundFamily::Hard1 => floor_ceil(3 * n, 3 * n + i - 2),
            BoundFamily::Hard2 => {
                let (l0, l1) = floor_ceil(3 * n + 1 - i, 3 * n);
                let (c0, c1) = floor_ceil(5, 6);
                let (f0, f1) = (l0.max(c0), l1.max(c1));
                if i == 1 {
                    (f0, f1)
                } else {
                    let (r0, r1) = floor_ceil(3 * n, 3 * n + i - 2);
                    (r0.min(f0), r1.min(f1))
                }
            }
        }
    }

    /// Logarithmic constant of the bound, `n`-independent.
    pub fn constant(self) -> Interval {
        let ln43 = ln(&rat(4, 3), LN_DIGITS);
        match self {
            BoundFamily::Gamma => ln43 * &from_usize(2) + &rat(1, 4),
            BoundFamily::Hard1 => ln43 * &from_usize(3),
            BoundFamily::Hard2 => ln(&rat(10, 9), LN_DIGITS) * &from_usize(3) + &rat(13, 24),
        }
    }

    fn correction(self, n: usize) -> Rational {
        let per = match self {
            BoundFamily::Gamma => 36,
            BoundFamily::Hard1 => 2,
            BoundFamily::Hard2 => 3,
        };
        Rational::new(BigInt::one(), BigInt::from(per * n))
    }

    /// Enclosure of the closed-form bound for `n`.
    pub fn bound(self, n: usize) -> Interval {
        self.constant() + &self.correction(n)
    }

    fn verdict(self, average: &Interval, bound: &Interval) -> bool {
        if self.is_lower() {
            average.lo >= bound.hi
        } else {
            average.hi <= bound.lo
        }
    }

    fn check_n(self, n: usize) -> Result<()> {
        let min = if self == BoundFamily::Hard1 { 2 } else { 1 };
        if n < min {
            return Err(Error::InvalidParameters(format!("n = {n} is below {min}")));
        }
        Ok(())
    }

    /// Exact average `(1/n) Σ term(n, i)`.
    pub fn exact_average(self, n: usize) -> Result<Rational> {
        self.check_n(n)?;
        let sum: Rational = (1..=n).map(|i| self.term(n, i)).sum();
        Ok(sum / from_usize(n))
    }

    /// Compares the exact average with the bound.
    pub fn check_exact(self, n: usize) -> Result<BoundCheck> {
        let exact = self.exact_average(n)?;
        let bound = self.bound(n);
        let average = Interval::point(exact.clone());
        Ok(BoundCheck {
            family: self,
            n,
            holds: self.verdict(&average, &bound),
            exact: Some(exact),
            average,
            bound,
        })
    }

    /// Compares a fixed-point enclosure of the average (every term rounded
    /// down and up at 30 decimal places) with the bound. Falls back to exact
    /// summation when the enclosure is inconclusive.
    pub fn check_certified(self, n: usize, constant: &Interval) -> Result<BoundCheck> {
        self.check_n(n)?;
        if n > 1_000_000 {
            return Err(Error::TooLarge {
                size: n,
                cap: 1_000_000,
            });
        }
        let (mut lo, mut hi) = (0u128, 0u128);
        for i in 1..=n {
            let (a, b) = self.term_fixed(n, i);
            lo += a;
            hi += b;
        }
        let den = BigInt::from(n) * BigInt::from(10).pow(FIXED_DIGITS);
        let average = Interval::new(
            Rational::new(BigInt::from(lo), den.clone()),
            Rational::new(BigInt::from(hi), den),
        );
        let bound = constant.clone() + &self.correction(n);
        if self.verdict(&average, &bound) {
            return Ok(BoundCheck {
                family: self,
                n,
                exact: None,
                average,
                bound,
                holds: true,
            });
        }
        self.check_exact(n)
    }

    /// Certified checks for every `n` in the range.
    pub fn sweep(self, ns: core::ops::RangeInclusive<usize>) -> Result<Vec<BoundCheck>> {
        let constant = self.constant();
        ns.map(|n| self.check_certified(n, &constant)).collect()
    }
}

/// `γ(n)` exactly, with the logarithmic lower bound.
pub fn gamma_lower_bound(n: usize) -> Result<BoundCheck> {
    BoundFamily::Gamma.check_exact(n)
}

pub fn hard1_upper_bound(n: usize) -> Result<BoundCheck> {
    BoundFamily::Hard1.check_exact(n)
}

pub fn hard2_upper_bound(n: usize) -> Result<BoundCheck> {
    BoundFamily::Hard2.check_exact(n)
}

/// Sandwiches a sum between integrals: for `f` non-increasing on `[a, b]`,
/// `f(b) + ∫f ≤ Σ_{x=a}^{b} f(x) ≤ f(a) + ∫f`. `samples` holds `f(a..=b)` and
/// `integral` encloses `∫_a^b f`.
pub fn integral_bound_check(samples: &[Rational], integral: &Interval) -> Result<bool> {
    if let Some(index) = samples.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::NotMonotone { index: index + 1 });
    }
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Ok(true);
    };
    let sum: Rational = samples.iter().sum();
    Ok(sum >= last + &integral.hi && sum <= first + &integral.lo)
}

/// The three functions whose integrals give the logarithmic bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofFunction {
    /// `max(2n/(2n+x), 3/4 + 1/(12n))` on `[0, n-1]`.
    Gamma { n: usize },
    /// `3n/(3n+x)` on `[0, n-2]`.
    Hard1 { n: usize },
    /// `min(3n/(3n+x-1), max(5/6, 1-x/(3n)))` on `[0, n-1]`.
    Hard2 { n: usize },
}

impl ProofFunction {
    pub fn n(self) -> usize {
        match self {
            ProofFunction::Gamma { n }
            | ProofFunction::Hard1 { n }
            | ProofFunction::Hard2 { n } => n,
        }
    }

    /// Integer endpoints `(a, b)`.
    pub fn domain(self) -> (usize, usize) {
        match self {
            ProofFunction::Gamma { n } | ProofFunction::Hard2 { n } => (0, n - 1),
            ProofFunction::Hard1 { n } => (0, n.saturating_sub(2)),
        }
    }

    pub fn eval(self, x: &Rational) -> Rational {
        let n = from_usize(self.n());
        let three_n = &n * from_usize(3);
        match self {
            ProofFunction::Gamma { .. } => {
                let two_n = &n * from_usize(2);
                let decay = &two_n / (&two_n + x);
                decay.max(rat(3, 4) + Rational::one() / (&n * from_usize(12)))
            }
            ProofFunction::Hard1 { .. } => &three_n / (&three_n + x),
            ProofFunction::Hard2 { .. } => {
                let floor = rat(5, 6).max(Rational::one() - x / &three_n);
                let shifted = &three_n + x - Rational::one();
                if shifted <= three_n {
                    floor
                } else {
                    (&three_n / shifted).min(floor)
                }
            }
        }
    }

    /// `f(a), f(a+1), …, f(b)`.
    pub fn samples(self) -> Vec<Rational> {
        let (a, b) = self.domain();
        (a..=b).map(|x| self.eval(&from_usize(x))).collect()
    }

    /// `∫_a^b f` in closed form.
    pub fn integral(self) -> Interval {
        let n_us = self.n();
        let n = from_usize(n_us);
        let (a, b) = self.domain();
        let (a, b) = (from_usize(a), from_usize(b));
        let clip = |x: Rational| x.max(a.clone()).min(b.clone());
        // ∫ c/(c+x) over [lo, hi] = c ln((c+hi)/(c+lo))
        let log_piece = |c: &Rational, lo: &Rational, hi: &Rational| -> Interval {
            if lo >= hi {
                return Interval::point(Rational::zero());
            }
            ln(&((c + hi) / (c + lo)), LN_DIGITS) * c
        };
        match self {
            ProofFunction::Gamma { .. } => {
                let two_n = &n * from_usize(2);
                let flat = rat(3, 4) + Rational::one() / (&n * from_usize(12));
                let three_n = &n * from_usize(3);
                let beta = clip(
                    &two_n * (&three_n - Rational::one()) / (&n * from_usize(9) + Rational::one()),
                );
                log_piece(&two_n, &a, &beta) + &(flat * (&b - &beta))
            }
            ProofFunction::Hard1 { .. } => log_piece(&(&n * from_usize(3)), &a, &b),
            ProofFunction::Hard2 { .. } => {
                let three_n = &n * from_usize(3);
                let half = clip(&n / from_usize(2));
                let knee = clip(&three_n / from_usize(5) + Rational::one());
                // 1 - x/(3n) on [a, half]
                let linear = (&half - &a) - (&half * &half - &a * &a) / (&three_n * from_usize(2));
                let flat = rat(5, 6) * (&knee - &half);
                let shifted = &three_n - Rational::one();
                log_piece(&shifted, &knee, &b) + &(linear + flat)
            }
        }
    }

    /// [`integral_bound_check`] on this function's samples and integral.
    pub fn check(self) -> Result<bool> {
        integral_bound_check(&self.samples(), &self.integral())
    }
}
