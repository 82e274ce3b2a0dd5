//! Exact maximin-share (MMS) fair division.
//!
//! The crate computes exact MMS values with a branch-and-bound oracle, reduces
//! arbitrary instances to ordered and normalized form, runs the ordinal
//! bag-filling algorithm (every agent gets her 1-out-of-`4⌈n/3⌉` share) and the
//! priority-ranked reductions-and-bag-filling algorithm, builds the cyclic
//! rank-rotation lottery on top of it, and ships the explicit hard instance
//! families together with checkers for every structural property the
//! algorithms rely on.
//!
//! All valuation arithmetic is exact ([`Rational`]); floating point never
//! enters an allocation decision. The crate is `no_std` (with `alloc`) when the
//! default `std` feature is disabled.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adversarial;
pub mod bobw;
pub mod error;
pub mod generate;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod ordinal;
pub mod rbf;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    bundle_value, is_t_mms, Allocation, Bundle, Instance, Partition, PriorityRanking, ThresholdList,
};
pub use numeric::{Interval, Rational};
pub use oracle::{mms, mms_naive, MmsResult, DEFAULT_NODE_BUDGET};
