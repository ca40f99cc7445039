//! Seeded Monte Carlo estimates of recovery times.
//!
//! Replication `i` of a run with master seed `s` draws from the ChaCha8
//! stream `i` keyed by `s`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{KnowledgeState, PairComponents};
use crate::model::{draw_sample, Instance, Mode, RecoveryTarget, SampleSizeDist};

/// Draws allowed per trial before giving up.
pub const DEFAULT_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialResult {
    pub samples_used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationStats {
    pub reps: u64,
    pub mean: f64,
    pub std_error: f64,
    pub five_number: FiveNumber,
    pub seed: u64,
}

/// The random stream for one replication.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

enum Tracker {
    Pairs(PairComponents),
    General(KnowledgeState),
    Coverage { seen: Vec<bool>, count: usize },
}

impl Tracker {
    fn absorb(&mut self, sample: &crate::model::Sample) -> Result<()> {
        match self {
            Tracker::Pairs(h) => match *sample.coupons() {
                [c] => h.absorb_single(c),
                [a, b] => h.absorb_pair(a, b),
                _ => unreachable!("pair tracker used with a larger sample"),
            },
            Tracker::General(state) => state.absorb(sample)?,
            Tracker::Coverage { seen, count } => {
                for &c in sample.coupons() {
                    if !seen[c] {
                        seen[c] = true;
                        *count += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

enum Goal<'a> {
    Recover(&'a RecoveryTarget),
    Cover(usize),
}

fn validate(n: usize, dist: &SampleSizeDist) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    dist.check_fits(n)
}

fn trial<R: Rng + ?Sized>(n: usize, dist: &SampleSizeDist, goal: &Goal, cap: u64, rng: &mut R) -> Result<TrialResult> {
    let instance = Instance::random(n, rng)?;
    let mut tracker = match goal {
        Goal::Cover(_) => Tracker::Coverage {
            seen: vec![false; n],
            count: 0,
        },
        Goal::Recover(t) if t.mode == Mode::VerticesUnknown && dist.max_size() <= 2 => {
            Tracker::Pairs(PairComponents::new(n))
        }
        Goal::Recover(t) => Tracker::General(KnowledgeState::new(n, t.mode)?),
    };
    let met = |tracker: &Tracker| match (tracker, goal) {
        (Tracker::Pairs(h), Goal::Recover(t)) => t.is_met_by(n, h.known_count(), |c| h.is_known(c)),
        (Tracker::General(s), Goal::Recover(t)) => s.is_recovered(&instance, t),
        (Tracker::Coverage { count, .. }, Goal::Cover(r)) => count >= r,
        _ => unreachable!(),
    };
    let mut used = 0;
    while !met(&tracker) {
        if used == cap {
            return Err(Error::NonTerminating { cap });
        }
        let sample = draw_sample(&instance, dist, rng)?;
        tracker.absorb(&sample)?;
        used += 1;
    }
    Ok(TrialResult { samples_used: used })
}

/// Samples until `target` is met, on a freshly drawn hidden matching.
pub fn run_trial<R: Rng + ?Sized>(
    n: usize,
    dist: &SampleSizeDist,
    target: &RecoveryTarget,
    rng: &mut R,
) -> Result<TrialResult> {
    run_trial_capped(n, dist, target, DEFAULT_CAP, rng)
}

pub fn run_trial_capped<R: Rng + ?Sized>(
    n: usize,
    dist: &SampleSizeDist,
    target: &RecoveryTarget,
    cap: u64,
    rng: &mut R,
) -> Result<TrialResult> {
    validate(n, dist)?;
    target.validate(n)?;
    trial(n, dist, &Goal::Recover(target), cap, rng)
}

/// Group-drawing collection without labels: samples until `r` distinct
/// coupons have been drawn.
pub fn run_ccp_trial<R: Rng + ?Sized>(n: usize, dist: &SampleSizeDist, r: usize, rng: &mut R) -> Result<TrialResult> {
    validate(n, dist)?;
    if r > n {
        return Err(Error::TargetExceedsN { r, n });
    }
    trial(n, dist, &Goal::Cover(r), DEFAULT_CAP, rng)
}

fn median(sorted: &[u64]) -> f64 {
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m] as f64
    } else {
        (sorted[m - 1] as f64 + sorted[m] as f64) / 2.0
    }
}

/// Mean, standard error and Tukey-hinge five-number summary.
pub fn summarize(values: &[u64], seed: u64) -> Result<SimulationStats> {
    if values.is_empty() {
        return Err(Error::OutOfRange {
            value: 0.0,
            range: "reps >= 1",
        });
    }
    let reps = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / reps as f64;
    let std_error = if reps > 1 {
        let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        (var / reps as f64).sqrt()
    } else {
        0.0
    };
    let five_number = FiveNumber {
        min: sorted[0] as f64,
        q25: median(&sorted[..reps.div_ceil(2)]),
        median: median(&sorted),
        q75: median(&sorted[reps / 2..]),
        max: sorted[reps - 1] as f64,
    };
    Ok(SimulationStats {
        reps: reps as u64,
        mean,
        std_error,
        five_number,
        seed,
    })
}

fn replicate<F>(reps: u64, seed: u64, one: F) -> Result<SimulationStats>
where
    F: Fn(&mut ChaCha8Rng) -> Result<TrialResult> + Sync,
{
    if reps == 0 {
        return Err(Error::OutOfRange {
            value: 0.0,
            range: "reps >= 1",
        });
    }
    let values: Vec<u64> = (0..reps)
        .into_par_iter()
        .map(|rep| one(&mut replication_rng(seed, rep)).map(|t| t.samples_used))
        .collect::<Result<_>>()?;
    summarize(&values, seed)
}

pub fn estimate(
    n: usize,
    dist: &SampleSizeDist,
    target: &RecoveryTarget,
    reps: u64,
    seed: u64,
) -> Result<SimulationStats> {
    estimate_capped(n, dist, target, reps, seed, DEFAULT_CAP)
}

pub fn estimate_capped(
    n: usize,
    dist: &SampleSizeDist,
    target: &RecoveryTarget,
    reps: u64,
    seed: u64,
    cap: u64,
) -> Result<SimulationStats> {
    validate(n, dist)?;
    target.validate(n)?;
    replicate(reps, seed, |rng| trial(n, dist, &Goal::Recover(target), cap, rng))
}

pub fn estimate_ccp(n: usize, dist: &SampleSizeDist, r: usize, reps: u64, seed: u64) -> Result<SimulationStats> {
    validate(n, dist)?;
    if r > n {
        return Err(Error::TargetExceedsN { r, n });
    }
    replicate(reps, seed, |rng| trial(n, dist, &Goal::Cover(r), DEFAULT_CAP, rng))
}

/// Complete recovery without known vertices against collection of `n - 1`
/// coupons, replication `i` of both sharing one stream.
pub fn compare_lccp_ccp(
    n: usize,
    dist: &SampleSizeDist,
    reps: u64,
    seed: u64,
) -> Result<(SimulationStats, SimulationStats)> {
    let lccp = estimate(n, dist, &RecoveryTarget::complete(Mode::VerticesUnknown), reps, seed)?;
    let ccp = estimate_ccp(n, dist, n.saturating_sub(1), reps, seed)?;
    Ok((lccp, ccp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::{ccp_expected_full, ccp_expected_partial};

    fn complete() -> RecoveryTarget {
        RecoveryTarget::complete(Mode::VerticesUnknown)
    }

    fn within(stats: &SimulationStats, exact: f64) -> bool {
        (stats.mean - exact).abs() <= 3.0 * stats.std_error
    }

    #[test]
    fn trial_examples() {
        let pairs = SampleSizeDist::fixed(2).unwrap();
        let singles = SampleSizeDist::fixed(1).unwrap();
        for seed in 0..200 {
            let mut rng = replication_rng(seed, 0);
            assert!(run_trial(3, &pairs, &complete(), &mut rng).unwrap().samples_used >= 2);
        }
        let mut rng = replication_rng(1, 0);
        assert_eq!(run_trial(1, &singles, &complete(), &mut rng).unwrap().samples_used, 1);
    }

    #[test]
    fn cap_reports_non_termination() {
        let mut rng = replication_rng(3, 0);
        let err = run_trial_capped(2, &SampleSizeDist::fixed(2).unwrap(), &complete(), 1000, &mut rng);
        assert_eq!(err, Err(Error::NonTerminating { cap: 1000 }));
        let err = estimate_capped(2, &SampleSizeDist::fixed(2).unwrap(), &complete(), 4, 0, 50);
        assert_eq!(err, Err(Error::NonTerminating { cap: 50 }));
    }

    #[test]
    fn pair_means_match_exact() {
        let stats = estimate(3, &SampleSizeDist::fixed(2).unwrap(), &complete(), 100_000, 11).unwrap();
        assert!(within(&stats, 2.5), "{stats:?}");
    }

    #[test]
    fn singles_match_harmonic_baseline() {
        let singles = SampleSizeDist::fixed(1).unwrap();
        let stats = estimate(5, &singles, &complete(), 100_000, 5).unwrap();
        assert!(within(&stats, ccp_expected_full(5)), "{stats:?}");
        let stats = estimate_ccp(6, &singles, 4, 100_000, 6).unwrap();
        assert!(within(&stats, ccp_expected_partial(6, 4).unwrap()), "{stats:?}");
    }

    #[test]
    fn single_replication_collapses() {
        let stats = estimate(6, &SampleSizeDist::kp(0.5).unwrap(), &complete(), 1, 9).unwrap();
        let f = stats.five_number;
        assert_eq!(stats.std_error, 0.0);
        assert!([f.min, f.q25, f.median, f.q75, f.max].iter().all(|&v| v == stats.mean));
    }

    #[test]
    fn tukey_hinges() {
        let s = summarize(&[1, 2, 3, 4, 5], 0).unwrap().five_number;
        assert_eq!((s.q25, s.median, s.q75), (2.0, 3.0, 4.0));
        let s = summarize(&[4, 1, 3, 2], 0).unwrap().five_number;
        assert_eq!((s.min, s.q25, s.median, s.q75, s.max), (1.0, 1.5, 2.5, 3.5, 4.0));
        assert!(summarize(&[], 0).is_err());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let dist = SampleSizeDist::new([(1, 0.2), (2, 0.5), (3, 0.3)]).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate(9, &dist, &complete(), 2000, 42).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn comparison_examples() {
        let singles = SampleSizeDist::fixed(1).unwrap();
        let (lccp, ccp) = compare_lccp_ccp(2, &singles, 50_000, 2).unwrap();
        assert!(within(&lccp, 3.0) && ccp.mean == 1.0);
        let (lccp, ccp) = compare_lccp_ccp(1, &singles, 10, 2).unwrap();
        assert_eq!((lccp.mean, ccp.mean), (1.0, 0.0));
        let mixed = SampleSizeDist::kp(0.5).unwrap();
        let (lccp, ccp) = compare_lccp_ccp(5, &mixed, 100_000, 3).unwrap();
        let combined = (lccp.std_error.powi(2) + ccp.std_error.powi(2)).sqrt();
        assert!(lccp.mean - ccp.mean > 3.0 * combined);
    }

    #[test]
    fn coupled_trials_are_ordered() {
        let mixed = SampleSizeDist::kp(0.3).unwrap();
        for rep in 0..500 {
            let a = run_trial(7, &mixed, &complete(), &mut replication_rng(8, rep)).unwrap();
            let b = run_ccp_trial(7, &mixed, 6, &mut replication_rng(8, rep)).unwrap();
            assert!(a.samples_used >= b.samples_used);
        }
    }
}
