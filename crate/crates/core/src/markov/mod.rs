//! Exact solvers.
//!
//! For sample sizes {1, 2} the collector's knowledge collapses to counts
//! `(alpha, beta, gamma)` of unseen, paired-but-ambiguous and known coupons.
//! Every non-self transition either raises `gamma` or keeps it and lowers
//! `alpha`, so hitting times follow from a single reverse-topological pass
//! without a linear solve.
//!
//! The module also solves the plain group-drawing coverage chain, where the
//! state is just the number of distinct coupons collected.

mod exact;

use num_traits::{FromPrimitive, Num};
use serde::Serialize;

pub use exact::{expected_complete_exact, EXACT_MAX_N};
#[cfg(test)]
pub(crate) use exact::rational_to_f64;

use crate::error::{Error, Result};
use crate::model::SampleSizeDist;

/// Tolerance used when asserting that a transition row sums to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Self-loop probabilities at or above `1 - SELF_LOOP_LIMIT` are rejected.
pub const SELF_LOOP_LIMIT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MarkovState {
    /// Unseen coupons.
    pub alpha: usize,
    /// Coupons in ambiguous pairs; always even.
    pub beta: usize,
    /// Coupons with known labels.
    pub gamma: usize,
}

impl MarkovState {
    pub const fn new(alpha: usize, beta: usize, gamma: usize) -> Self {
        MarkovState { alpha, beta, gamma }
    }

    pub fn start(n: usize) -> Self {
        Self::new(n, 0, 0)
    }

    pub fn absorbing(n: usize) -> Self {
        Self::new(0, 0, n)
    }

    pub fn n(&self) -> usize {
        self.alpha + self.beta + self.gamma
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.n() != n || !self.beta.is_multiple_of(2) {
            return Err(Error::InvalidState {
                alpha: self.alpha,
                beta: self.beta,
                gamma: self.gamma,
                n,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRow {
    pub from: MarkovState,
    /// Targets with positive probability, self-loop included.
    pub entries: Vec<(MarkovState, f64)>,
}

impl TransitionRow {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn self_loop(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(s, _)| *s == self.from)
            .map(|(_, p)| p)
            .sum()
    }
}

fn binom2(x: usize) -> usize {
    x * x.saturating_sub(1) / 2
}

/// The six transition cases, in order, with the self-loop last. Targets of
/// zero-coefficient cases may be meaningless and must be skipped.
///
/// For `n = 1` no pair can be drawn; the pair mass `1 - p` stays on the
/// current state.
fn coefficients<T>(s: MarkovState, n: usize, p: &T) -> [(MarkovState, T); 6]
where
    T: Num + Clone + FromPrimitive,
{
    let int = |x: usize| T::from_usize(x).expect("integer fits");
    let one = T::one();
    let q = one.clone() - p.clone();
    let lambda = p.clone() / int(n);
    let (mu, pair_self) = if n >= 2 {
        (q / int(binom2(n)), T::zero())
    } else {
        (T::zero(), q)
    };
    let MarkovState { alpha: a, beta: b, gamma: g } = s;
    let at = |da: isize, db: isize, dg: isize| {
        let shift = |x: usize, d: isize| x.checked_add_signed(d).unwrap_or(0);
        MarkovState::new(shift(a, da), shift(b, db), shift(g, dg))
    };
    [
        (at(-2, 2, 0), mu.clone() * int(binom2(a))),
        (at(-1, -2, 3), mu.clone() * int(a * b)),
        (at(0, -4, 4), mu.clone() * int(4 * binom2(b / 2))),
        (at(-1, 0, 1), mu.clone() * int(a * g) + lambda.clone() * int(a)),
        (at(0, -2, 2), mu.clone() * int(b * g) + lambda.clone() * int(b)),
        (
            s,
            mu * int(binom2(g) + b / 2) + lambda * int(g) + pair_self,
        ),
    ]
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Dense indexing of the state space: by `gamma`, then by `beta / 2`.
#[derive(Debug, Clone)]
struct StateIndex {
    n: usize,
    offsets: Vec<usize>,
}

impl StateIndex {
    fn new(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 2);
        let mut total = 0;
        for gamma in 0..=n {
            offsets.push(total);
            total += (n - gamma) / 2 + 1;
        }
        offsets.push(total);
        StateIndex { n, offsets }
    }

    fn len(&self) -> usize {
        self.offsets[self.n + 1]
    }

    fn index(&self, s: MarkovState) -> usize {
        self.offsets[s.gamma] + s.beta / 2
    }

    fn states(&self) -> impl Iterator<Item = MarkovState> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |gamma| {
            (0..=(n - gamma) / 2).map(move |h| MarkovState::new(n - gamma - 2 * h, 2 * h, gamma))
        })
    }
}

/// All states with `alpha + beta + gamma = n` and even `beta`, ordered by
/// `gamma` ascending, then `alpha` descending. The absorbing state is last.
pub fn state_space(n: usize) -> Result<Vec<MarkovState>> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    Ok(StateIndex::new(n).states().collect())
}

/// `sum_{gamma=0}^{n} (floor((n - gamma) / 2) + 1)`.
pub fn state_count(n: usize) -> usize {
    StateIndex::new(n).len()
}

pub fn transition_row(s: MarkovState, n: usize, p: f64) -> Result<TransitionRow> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    s.validate(n)?;
    check_p(p)?;
    let entries = coefficients(s, n, &p)
        .into_iter()
        .filter(|(_, prob)| *prob > 0.0)
        .map(|(t, prob)| (t, prob.min(1.0)))
        .collect();
    Ok(TransitionRow { from: s, entries })
}

fn check_recoverable(n: usize, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    check_p(p)?;
    if p == 0.0 && n < 3 {
        return Err(Error::Unrecoverable(format!(
            "pairs alone never identify labels when n = {n}"
        )));
    }
    Ok(())
}

/// Expected number of samples until every label is known, starting from
/// `(n, 0, 0)`, under `K(p)`.
pub fn expected_complete(n: usize, p: f64) -> Result<f64> {
    check_recoverable(n, p)?;
    let index = StateIndex::new(n);
    let mut hitting = vec![0.0; index.len()];
    let states: Vec<MarkovState> = index.states().collect();
    let absorbing = MarkovState::absorbing(n);
    for (i, &s) in states.iter().enumerate().rev() {
        if s == absorbing {
            continue;
        }
        let mut leave = 0.0;
        let mut self_loop = 0.0;
        let mut acc = 1.0;
        for (t, prob) in coefficients(s, n, &p) {
            if prob == 0.0 {
                continue;
            }
            if t == s {
                self_loop += prob;
            } else {
                debug_assert!(index.index(t) > i);
                leave += prob;
                acc += prob * hitting[index.index(t)];
            }
        }
        if self_loop >= 1.0 - SELF_LOOP_LIMIT {
            return Err(Error::NumericalInstability { self_loop });
        }
        hitting[i] = acc / leave;
    }
    Ok(hitting[0])
}

/// Same as [`expected_complete`] for a distribution supported on {1, 2}.
pub fn expected_complete_dist(n: usize, dist: &SampleSizeDist) -> Result<f64> {
    let p = dist.as_kp().ok_or_else(|| {
        Error::UnsupportedHistory(format!(
            "exact chain covers sample sizes {{1, 2}}, got size {}",
            dist.max_size()
        ))
    })?;
    expected_complete(n, p)
}

/// `P(T > t)` for `t = 0..=t_max`, by forward propagation from `(n, 0, 0)`.
pub fn tail_distribution(n: usize, p: f64, t_max: usize) -> Result<Vec<f64>> {
    check_recoverable(n, p)?;
    let index = StateIndex::new(n);
    let states: Vec<MarkovState> = index.states().collect();
    let absorbing = index.index(MarkovState::absorbing(n));
    let rows: Vec<[(MarkovState, f64); 6]> = states.iter().map(|&s| coefficients(s, n, &p)).collect();
    let mut mass = vec![0.0; index.len()];
    mass[0] = 1.0;
    let mut next = vec![0.0; index.len()];
    let mut tail = Vec::with_capacity(t_max + 1);
    let outstanding = |m: &[f64]| -> f64 {
        m.iter()
            .enumerate()
            .filter(|&(i, _)| i != absorbing)
            .map(|(_, x)| x)
            .sum()
    };
    tail.push(outstanding(&mass));
    for _ in 0..t_max {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, &m) in mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(t, prob) in &rows[i] {
                if prob > 0.0 {
                    next[index.index(t)] += m * prob;
                }
            }
        }
        std::mem::swap(&mut mass, &mut next);
        // rounding guard: the tail is non-increasing by construction
        let prev = *tail.last().unwrap();
        tail.push(outstanding(&mass).min(prev));
    }
    Ok(tail)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

/// Expected number of group draws until at least `r` distinct coupons have
/// been collected, with draw sizes from `dist` (no label ambiguity).
pub fn ccp_expected(n: usize, dist: &SampleSizeDist, r: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    if r > n {
        return Err(Error::TargetExceedsN { r, n });
    }
    dist.check_fits(n)?;
    let lf = ln_factorials(n);
    let ln_binom = |a: usize, b: usize| lf[a] - lf[b] - lf[a - b];
    let mut expected = vec![0.0; n + 1];
    for c in (0..r).rev() {
        let mut leave = 0.0;
        let mut acc = 1.0;
        for (&k, &pk) in dist.entries() {
            let total = ln_binom(n, k);
            let lo = k.saturating_sub(c).max(1);
            let hi = k.min(n - c);
            for j in lo..=hi {
                let prob = pk * (ln_binom(n - c, j) + ln_binom(c, k - j) - total).exp();
                leave += prob;
                acc += prob * expected[(c + j).min(n)];
            }
        }
        expected[c] = acc / leave;
    }
    Ok(expected[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_map(row: &TransitionRow) -> Vec<(MarkovState, f64)> {
        let mut e = row.entries.clone();
        e.sort_by_key(|a| a.0);
        e
    }

    #[test]
    fn state_space_examples() {
        assert_eq!(
            state_space(2).unwrap(),
            vec![
                MarkovState::new(2, 0, 0),
                MarkovState::new(0, 2, 0),
                MarkovState::new(1, 0, 1),
                MarkovState::new(0, 0, 2),
            ]
        );
        assert_eq!(
            state_space(1).unwrap(),
            vec![MarkovState::new(1, 0, 0), MarkovState::new(0, 0, 1)]
        );
        assert_eq!(state_space(0), Err(Error::ZeroSize));
    }

    #[test]
    fn state_count_matches_enumeration() {
        for n in 1..40 {
            let brute = (0..=n)
                .flat_map(|a| (0..=n - a).map(move |b| (a, b)))
                .filter(|&(_, b)| b % 2 == 0)
                .count();
            assert_eq!(state_count(n), brute);
            assert_eq!(state_space(n).unwrap().len(), brute);
        }
        assert_eq!(state_count(2000), 1_002_001);
    }

    #[test]
    fn transition_examples() {
        let r = transition_row(MarkovState::new(3, 0, 0), 3, 0.0).unwrap();
        assert_eq!(row_map(&r), vec![(MarkovState::new(1, 2, 0), 1.0)]);

        let r = transition_row(MarkovState::new(1, 2, 0), 3, 0.0).unwrap();
        let e = row_map(&r);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].0, MarkovState::new(0, 0, 3));
        assert!((e[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e[1].0, MarkovState::new(1, 2, 0));
        assert!((e[1].1 - 1.0 / 3.0).abs() < 1e-15);

        let r = transition_row(MarkovState::new(2, 0, 1), 3, 1.0).unwrap();
        let e = row_map(&r);
        assert_eq!(e[0].0, MarkovState::new(1, 0, 2));
        assert!((e[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.self_loop() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn transition_rejects_invalid() {
        assert!(matches!(
            transition_row(MarkovState::new(2, 1, 0), 3, 0.5),
            Err(Error::InvalidState { .. })
        ));
        assert!(matches!(
            transition_row(MarkovState::new(2, 0, 0), 3, 0.5),
            Err(Error::InvalidState { .. })
        ));
        assert!(matches!(
            transition_row(MarkovState::new(3, 0, 0), 3, 1.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn rows_are_stochastic_and_progressive() {
        for n in 1..=50 {
            for step in 0..=10 {
                let p = step as f64 / 10.0;
                for s in state_space(n).unwrap() {
                    let row = transition_row(s, n, p).unwrap();
                    assert!((row.total() - 1.0).abs() <= ROW_SUM_TOLERANCE, "{s:?} n={n} p={p}");
                    for (t, prob) in &row.entries {
                        assert!((0.0..=1.0).contains(prob));
                        t.validate(n).unwrap();
                        if *t != s {
                            assert!(t.gamma > s.gamma || (t.gamma == s.gamma && t.alpha < s.alpha));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn expected_small_cases() {
        assert!((expected_complete(3, 0.0).unwrap() - 2.5).abs() < 1e-12);
        assert!((expected_complete(3, 1.0).unwrap() - 5.5).abs() < 1e-12);
        assert!((expected_complete(1, 1.0).unwrap() - 1.0).abs() < 1e-12);
        // n = 1: only the size-1 draws carry information
        assert!((expected_complete(1, 0.25).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(expected_complete(2, 0.0), Err(Error::Unrecoverable(_))));
        assert!(matches!(expected_complete(1, 0.0), Err(Error::Unrecoverable(_))));
        assert!(matches!(
            expected_complete(2, 1e-300),
            Err(Error::NumericalInstability { .. })
        ));
    }

    #[test]
    fn p_one_is_classic_collector() {
        for n in 1..30 {
            let h: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
            let e = expected_complete(n, 1.0).unwrap();
            assert!((e - n as f64 * h).abs() < 1e-9 * e, "n={n}");
        }
    }

    #[test]
    fn tail_examples() {
        let tail = tail_distribution(3, 0.0, 200).unwrap();
        assert_eq!(tail[0], 1.0);
        assert!((tail[1] - 1.0).abs() < 1e-15);
        assert!((tail[2] - 1.0 / 3.0).abs() < 1e-15);
        let sum: f64 = tail.iter().sum();
        assert!((sum - expected_complete(3, 0.0).unwrap()).abs() < 1e-6);
        for (n, p) in [(4, 0.3), (7, 0.9), (10, 0.5)] {
            let tail = tail_distribution(n, p, 400).unwrap();
            assert_eq!(tail[0], 1.0);
            assert!(tail.windows(2).all(|w| w[1] <= w[0]));
            let sum: f64 = tail.iter().sum();
            assert!((sum - expected_complete(n, p).unwrap()).abs() < 1e-6, "n={n} p={p}");
        }
    }

    #[test]
    fn ccp_chain() {
        let single = SampleSizeDist::fixed(1).unwrap();
        assert!((ccp_expected(3, &single, 3).unwrap() - 5.5).abs() < 1e-12);
        assert!((ccp_expected(3, &single, 2).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(ccp_expected(3, &single, 0).unwrap(), 0.0);
        assert_eq!(
            ccp_expected(3, &single, 4),
            Err(Error::TargetExceedsN { r: 4, n: 3 })
        );
        // pairs from 3 coupons: first draw covers 2, the next new one needs geometric(2/3)
        let pairs = SampleSizeDist::fixed(2).unwrap();
        assert!((ccp_expected(3, &pairs, 3).unwrap() - 2.5).abs() < 1e-12);
        assert!(ccp_expected(2, &SampleSizeDist::fixed(3).unwrap(), 1).is_err());
    }

    #[test]
    fn large_n_is_fast_enough() {
        let e = expected_complete(2000, 0.5).unwrap();
        assert!(e.is_finite() && e > 0.0);
    }
}
