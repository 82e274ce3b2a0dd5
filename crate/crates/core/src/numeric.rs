//! Exact rationals and rigorous rational intervals for the few irrational
//! constants (natural logarithms) that appear in the bound calculus.

use alloc::string::String;
use core::fmt::Write as _;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn from_usize(value: usize) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`. Returns `None` on malformed text or a
/// zero denominator.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (numer, denom) = match text.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (text, "1"),
    };
    let numer: BigInt = numer.parse().ok()?;
    let denom: BigInt = denom.parse().ok()?;
    if denom.is_zero() {
        return None;
    }
    Some(Rational::new(numer, denom))
}

/// Canonical `"p/q"` text, or `"p"` for integers.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        alloc::format!("{}", value.numer())
    } else {
        alloc::format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal expansion truncated toward zero after `digits` fractional digits.
pub fn to_decimal(value: &Rational, digits: usize) -> String {
    let mut out = String::new();
    if value.is_negative() {
        out.push('-');
    }
    let abs = value.abs();
    let (whole, mut rem) = abs.numer().div_rem(abs.denom());
    let _ = write!(out, "{whole}");
    if digits > 0 {
        out.push('.');
        let ten = BigInt::from(10);
        for _ in 0..digits {
            rem *= &ten;
            let (d, r) = rem.div_rem(abs.denom());
            let _ = write!(out, "{d}");
            rem = r;
        }
    }
    out
}

/// Nearest `f64`, for display only.
pub fn approx(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `⌈a/b⌉` for positive `b`.
pub fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn point(value: Rational) -> Self {
        Self {
            lo: value.clone(),
            hi: value,
        }
    }

    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, value: &Rational) -> bool {
        &self.lo <= value && value <= &self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    /// Scales by a rational constant, flipping endpoints for negative factors.
    pub fn scale(&self, factor: &Rational) -> Self {
        let a = &self.lo * factor;
        let b = &self.hi * factor;
        if a <= b {
            Self::new(a, b)
        } else {
            Self::new(b, a)
        }
    }

    /// Decimal rendering of the midpoint; exact to `digits` places whenever the
    /// width is below `10^-digits`.
    pub fn to_decimal(&self, digits: usize) -> String {
        to_decimal(&self.midpoint(), digits)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Add<&Rational> for Interval {
    type Output = Interval;
    fn add(self, rhs: &Rational) -> Interval {
        Interval::new(self.lo + rhs, self.hi + rhs)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul<&Rational> for Interval {
    type Output = Interval;
    fn mul(self, rhs: &Rational) -> Interval {
        self.scale(rhs)
    }
}

/// Default precision: enclosures narrower than `10^-60`.
pub const LN_DIGITS: u32 = 60;

/// `2·atanh(y) = ln((1+y)/(1-y))` for `|y| ≤ 1/3`, enclosed to within
/// `10^-digits`.
fn two_atanh(y: &Rational, digits: u32) -> Interval {
    debug_assert!(y.abs() <= rat(1, 3));
    if y.is_zero() {
        return Interval::point(Rational::zero());
    }
    let tolerance = Rational::new(BigInt::one(), BigInt::from(10).pow(digits));
    let y2 = y * y;
    let one = Rational::one();
    let mut power = y.clone();
    let mut sum = Rational::zero();
    let mut k: i64 = 0;
    loop {
        sum += &power / int(2 * k + 1);
        power *= &y2;
        k += 1;
        // |tail| ≤ |y|^(2k+1) / ((2k+1)(1 - y²))
        let tail = power.abs() / (int(2 * k + 1) * (&one - &y2));
        if tail * int(2) < tolerance {
            let two = int(2);
            let tail = power.abs() / (int(2 * k + 1) * (&one - &y2)) * &two;
            let mid = sum * &two;
            return Interval::new(&mid - &tail, mid + tail);
        }
    }
}

/// Rigorous enclosure of `ln(x)` for rational `x > 0`.
pub fn ln(x: &Rational, digits: u32) -> Interval {
    assert!(x.is_positive(), "ln of a non-positive number");
    // x = 2^k · r with r ∈ [2/3, 4/3]
    let two = int(2);
    let mut r = x.clone();
    let mut k: i64 = 0;
    let upper = rat(4, 3);
    let lower = rat(2, 3);
    while r > upper {
        r /= &two;
        k += 1;
    }
    while r < lower {
        r *= &two;
        k -= 1;
    }
    let one = Rational::one();
    let y = (&r - &one) / (&r + &one);
    let extra = k.unsigned_abs().checked_ilog10().unwrap_or(0) + 2;
    let mut out = two_atanh(&y, digits + extra);
    if k != 0 {
        let ln2 = two_atanh(&rat(1, 3), digits + extra);
        out = out + ln2.scale(&int(k));
    }
    out
}

/// `ln(p/q)` for integer arguments.
pub fn ln_ratio(p: i64, q: i64) -> Interval {
    ln(&rat(p, q), LN_DIGITS)
}

/// Floor of `value · 10^scale` as a signed big integer.
pub fn scaled_floor(value: &Rational, scale: u32) -> BigInt {
    let scaled = value * Rational::from_integer(BigInt::from(10).pow(scale));
    scaled.floor().to_integer()
}

/// Ceiling of `value · 10^scale`.
pub fn scaled_ceil(value: &Rational, scale: u32) -> BigInt {
    let scaled = value * Rational::from_integer(BigInt::from(10).pow(scale));
    scaled.ceil().to_integer()
}

pub(crate) fn is_nonnegative(value: &Rational) -> bool {
    value.numer().sign() != Sign::Minus
}
