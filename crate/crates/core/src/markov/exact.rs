use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{coefficients, StateIndex};
use crate::error::{Error, Result};
use crate::markov::MarkovState;

/// Largest `n` accepted by the rational solver.
pub const EXACT_MAX_N: usize = 12;

/// [`super::expected_complete`] in exact rational arithmetic, for `n <= 12`.
pub fn expected_complete_exact(n: usize, p: &BigRational) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    if n > EXACT_MAX_N {
        return Err(Error::TooLargeN { n, max: EXACT_MAX_N });
    }
    if p < &BigRational::zero() || p > &BigRational::one() {
        return Err(Error::OutOfRange {
            value: rational_to_f64(p),
            range: "[0, 1]",
        });
    }
    if p.is_zero() && n < 3 {
        return Err(Error::Unrecoverable(format!(
            "pairs alone never identify labels when n = {n}"
        )));
    }
    let index = StateIndex::new(n);
    let states: Vec<MarkovState> = index.states().collect();
    let absorbing = MarkovState::absorbing(n);
    let mut hitting = vec![BigRational::zero(); index.len()];
    for (i, &s) in states.iter().enumerate().rev() {
        if s == absorbing {
            continue;
        }
        let mut leave = BigRational::zero();
        let mut acc = BigRational::one();
        for (t, prob) in coefficients(s, n, p) {
            if prob.is_zero() || t == s {
                continue;
            }
            acc += &prob * &hitting[index.index(t)];
            leave += prob;
        }
        if leave.is_zero() {
            return Err(Error::Unrecoverable(format!("state {s:?} never moves")));
        }
        hitting[i] = acc / leave;
    }
    Ok(hitting.swap_remove(0))
}

pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    // Precise enough for reporting; comparisons are done on rationals.
    let scale = BigInt::from(10u64).pow(30);
    let scaled = (x * BigRational::from_integer(scale.clone())).round().to_integer();
    scaled.to_string().parse::<f64>().unwrap_or(f64::NAN) / 1e30
}
