//! Closed forms, series and minimal sample counts.
//!
//! Printed statements and the expressions appearing in their derivations are
//! kept apart: each value carries a [`Provenance`] so that comparisons against
//! the exact solvers can say which expression disagreed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SampleSizeDist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PrintedClosedForm,
    ProofTailSum,
    ProofSeries,
    Baseline,
    Conjecture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormulaResult {
    pub value: f64,
    pub provenance: Provenance,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::PrintedClosedForm => "printed_closed_form",
            Provenance::ProofTailSum => "proof_tail_sum",
            Provenance::ProofSeries => "proof_series",
            Provenance::Baseline => "baseline",
            Provenance::Conjecture => "conjecture",
        })
    }
}

impl FormulaResult {
    fn new(value: f64, provenance: Provenance) -> Self {
        debug_assert!(value.is_finite());
        FormulaResult { value, provenance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum St1Variant {
    Printed,
    TailSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kp3Variant {
    Printed,
    ProofSeries,
}

fn require_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::TooSmallN { n, min });
    }
    Ok(())
}

pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// `n * H_n`.
pub fn ccp_expected_full(n: usize) -> f64 {
    n as f64 * harmonic(n)
}

/// `n * (H_n - H_{n-r})`.
pub fn ccp_expected_partial(n: usize, r: usize) -> Result<f64> {
    if r > n {
        return Err(Error::TargetExceedsN { r, n });
    }
    Ok(n as f64 * (n - r + 1..=n).map(|i| 1.0 / i as f64).sum::<f64>())
}

fn st1_ratios(n: usize) -> (f64, f64, f64) {
    let nf = n as f64;
    let q1 = (nf - 2.0) / nf;
    let q2 = ((nf - 2.0) * (nf - 3.0) + 2.0) / (nf * (nf - 1.0));
    let q3 = (nf - 2.0) * (nf - 3.0) / (nf * (nf - 1.0));
    (q1, q2, q3)
}

/// `P(ST_1 > t)` for pair sampling: the coupon is unseen, or it only ever
/// appeared with one partner that appeared with nobody else.
pub fn st1_tail(n: usize, t: u32) -> Result<f64> {
    require_n(n, 3)?;
    let nf = n as f64;
    let den = nf * (nf - 1.0);
    let t = t as i32;
    if den.powi(t) <= EXACT_INT_LIMIT {
        // every power below is an integer that f64 represents exactly
        let a = ((nf - 2.0) * (nf - 1.0)).powi(t);
        let b = ((nf - 2.0) * (nf - 3.0) + 2.0).powi(t);
        let c = ((nf - 2.0) * (nf - 3.0)).powi(t);
        return Ok((a + (nf - 1.0) * (b - c)) / den.powi(t));
    }
    let (q1, q2, q3) = st1_ratios(n);
    Ok(q1.powi(t) + (q2.powi(t) - q3.powi(t)) * (nf - 1.0))
}

const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

/// Analytic value of `sum_{t > upto} st1_tail(n, t)`.
pub fn st1_tail_remainder(n: usize, upto: u32) -> Result<f64> {
    require_n(n, 3)?;
    let (q1, q2, q3) = st1_ratios(n);
    let e = upto as i32 + 1;
    let geo = |q: f64| q.powi(e) / (1.0 - q);
    Ok(geo(q1) + (n as f64 - 1.0) * (geo(q2) - geo(q3)))
}

/// Expected samples until one fixed coupon's label is known, pairs only.
pub fn st1_expected(n: usize, variant: St1Variant) -> Result<FormulaResult> {
    require_n(n, 3)?;
    let nf = n as f64;
    Ok(match variant {
        St1Variant::Printed => FormulaResult::new(
            nf * (nf.powi(3) + nf.powi(2) + 5.0 * nf - 5.0) / ((nf + 3.0) * (5.0 * nf - 4.0)),
            Provenance::PrintedClosedForm,
        ),
        St1Variant::TailSum => {
            let (q1, q2, q3) = st1_ratios(n);
            FormulaResult::new(
                1.0 / (1.0 - q1) + (nf - 1.0) / (1.0 - q2) - (nf - 1.0) / (1.0 - q3),
                Provenance::ProofTailSum,
            )
        }
    })
}

fn t1_m(n: usize) -> usize {
    (n - 2) * (n + 1) / 2
}

/// `1 + sum_{i=1}^{floor(n/2)} n! / ((n-2i)! 2^i) * (m-i)! / m!` with
/// `m = (n-2)(n+1)/2`, for recovering any single coupon with pairs.
pub fn t1_expected_series(n: usize) -> Result<FormulaResult> {
    require_n(n, 3)?;
    let m = t1_m(n) as f64;
    let mut total = 1.0;
    let mut term = 1.0;
    for i in 1..=n / 2 {
        // term_i = term_{i-1} * (n-2i+2)(n-2i+1)/2 / (m-i+1)
        let lead = (n - 2 * i + 2) as f64 * (n - 2 * i + 1) as f64 / 2.0;
        term *= lead / (m - i as f64 + 1.0);
        total += term;
    }
    Ok(FormulaResult::new(total, Provenance::PrintedClosedForm))
}

/// [`t1_expected_series`] in exact rational arithmetic.
pub fn t1_expected_series_exact(n: usize) -> Result<BigRational> {
    require_n(n, 3)?;
    let int = |x: usize| BigRational::from_integer(BigInt::from(x));
    let m = t1_m(n);
    let mut total = BigRational::one();
    let mut term = BigRational::one();
    for i in 1..=n / 2 {
        term = term * int((n - 2 * i + 2) * (n - 2 * i + 1)) / int(2) / int(m - i + 1);
        total += &term;
    }
    Ok(total)
}

fn binomial_f64(t: u32, s: u32) -> f64 {
    (0..s).fold(1.0, |acc, i| acc * (t - i) as f64 / (i + 1) as f64)
}

/// Largest truncation error accepted by the `n = 3` proof series.
pub const KP3_SERIES_TOLERANCE: f64 = 1e-12;

/// `E[T]` for complete recovery of three coupons under `K(p)`.
pub fn kp3_expected(p: f64, variant: Kp3Variant) -> Result<FormulaResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(match variant {
        Kp3Variant::Printed => {
            let num = 13.0 * p.powi(4) + 63.0 * p.powi(3) + 74.0 * p.powi(2) - 200.0 * p - 120.0;
            let den = 4.0 * (p + 2.0).powi(2) * (3.0 - p);
            FormulaResult::new(num / den, Provenance::PrintedClosedForm)
        }
        Kp3Variant::ProofSeries => {
            let q = 1.0 - p;
            let mut total = 2.0;
            let mut t: u32 = 2;
            loop {
                let ti = t as i32;
                let mixed: f64 = (2..t)
                    .map(|s| binomial_f64(t, s) * p.powi(s as i32) * q.powi(ti - s as i32) * (s as f64 + 3.0))
                    .sum();
                let boundary = q.powi(ti) + 3.0 * t as f64 * p * q.powi(ti - 1) + p.powi(ti) * t as f64;
                total += (mixed + boundary) / 3f64.powi(ti - 1);
                // each later term is at most (t + 3) / 3^(t - 1), and those halve
                let remainder = 2.0 * (t as f64 + 4.0) / 3f64.powi(ti);
                if remainder < KP3_SERIES_TOLERANCE {
                    break;
                }
                t += 1;
            }
            FormulaResult::new(total, Provenance::ProofSeries)
        }
    })
}

/// `n * H_n / 2`, the conjectured pair-sampling expectation.
pub fn conjectured_2lccp_expected(n: usize) -> Result<FormulaResult> {
    require_n(n, 3)?;
    Ok(FormulaResult::new(
        n as f64 * harmonic(n) / 2.0,
        Provenance::Conjecture,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MinSamples {
    pub value: usize,
    /// The support size that attains the minimum.
    pub k_m: usize,
    /// `k_m` after reflecting sizes above `n / 2` to `n - k_m`.
    pub effective_k: usize,
    /// True when the value rests on the size-1 or size-2 results rather than
    /// the general `ceil(2n / (k + 1))` conjecture.
    pub proven: bool,
}

/// Minimal number of samples for complete recovery under `dist`.
///
/// Every informative support size `k` is scored by `ceil(2n / (k' + 1))`,
/// where `k' = k` for `k <= 2` and `k' = min(k, n - k)` otherwise; the best
/// score wins, ties going to the smaller `k`. A size equal to `n >= 2`
/// reveals nothing and is skipped.
pub fn min_samples(n: usize, dist: &SampleSizeDist) -> Result<MinSamples> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    dist.check_fits(n)?;
    let mut best: Option<MinSamples> = None;
    for k in dist.support() {
        if k == n && n >= 2 {
            continue;
        }
        let effective_k = if k <= 2 { k } else { k.min(n - k) };
        let value = (2 * n).div_ceil(effective_k + 1);
        if best.is_none_or(|b| value < b.value) {
            best = Some(MinSamples {
                value,
                k_m: k,
                effective_k,
                proven: effective_k <= 2,
            });
        }
    }
    best.ok_or(Error::EmptySupport { n })
}

/// A shortest pair sequence that recovers every label: coupons are split into
/// consecutive groups of three (the last group absorbs the `n mod 3`
/// leftovers) and each group is covered by a path.
pub fn min_witness_k2(n: usize) -> Result<Vec<[usize; 2]>> {
    require_n(n, 3)?;
    let groups = n / 3;
    let mut pairs = Vec::with_capacity(n - groups);
    for g in 0..groups {
        let start = 3 * g;
        let end = if g + 1 == groups { n } else { start + 3 };
        pairs.extend((start..end - 1).map(|c| [c, c + 1]));
    }
    Ok(pairs)
}
