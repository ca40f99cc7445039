//! Exact and simulated computation for the labeled coupon collector family.
//!
//! Each sample reveals a set of coupons together with the set of their
//! labels, but not which label belongs to which coupon. The crate provides:
//!
//! * [`model`]: instances, samples, sample-size distributions, seeded draws.
//! * [`inference`]: the collector's knowledge state and exact label deduction.
//! * [`simulate`]: reproducible Monte Carlo estimates of recovery times.
//! * [`markov`]: the `(alpha, beta, gamma)` chain for sizes {1, 2} and the
//!   group-drawing coverage chain.
//! * [`formulas`]: closed forms, series and minimal sample counts.
//! * [`oracle`]: brute-force expectations for tiny `n`, used as ground truth.

pub mod error;
pub mod formulas;
pub mod inference;
pub mod markov;
pub mod model;
pub mod oracle;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{Instance, Mode, RecoveryTarget, Sample, SampleSizeDist, TargetKind};
