//! Exact expectations and tail probabilities for tiny `n`.
//!
//! The matchings consistent with a history always form a product of
//! symmetric groups over atoms: classes of coupons that appeared in exactly
//! the same samples. A coupon is known precisely when its atom is a singleton
//! (and, without known vertices, it has been seen). Since sampling is
//! exchangeable, the multiset of atom sizes, split by membership in the
//! target set, is a sufficient state.
//!
//! [`enumeration_expected`] and [`fixed_by_enumeration`] work instead on
//! explicit sets of permutations and serve to check the atom argument.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::model::{Instance, Mode, RecoveryTarget, Sample, SampleSizeDist, TargetKind};

pub const ORACLE_MAX_N: usize = 7;
/// Cap for the permutation-set routines (`5! = 120` fits one `u128`).
pub const ENUMERATION_MAX_N: usize = 5;

/// Atom sizes as `(target coupons, other coupons)`.
type Counts = (u8, u8);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    /// Seen atoms, sorted.
    blocks: Vec<Counts>,
    unseen: Counts,
}

#[derive(Debug, Clone, Copy)]
enum Goal {
    Complete,
    Arbitrary(usize),
    Marked,
}

struct Oracle {
    n: usize,
    /// `(weight of one subset, subsets as bitmasks)` per support size.
    draws: Vec<(f64, Vec<u32>)>,
    goal: Goal,
    start: Key,
    memo: HashMap<Key, f64>,
    moves: HashMap<Key, Vec<(Key, f64)>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_size(n: usize, max: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    if n > max {
        return Err(Error::TooLargeN { n, max });
    }
    Ok(())
}

impl Oracle {
    fn new(n: usize, dist: &SampleSizeDist, target: &RecoveryTarget) -> Result<Self> {
        check_size(n, ORACLE_MAX_N)?;
        dist.check_fits(n)?;
        target.validate(n)?;
        let (goal, marked) = match &target.kind {
            TargetKind::Complete => (Goal::Complete, 0),
            TargetKind::Arbitrary(r) => (Goal::Arbitrary(*r), 0),
            TargetKind::Specific(set) => (Goal::Marked, set.len()),
        };
        let all = (marked as u8, (n - marked) as u8);
        let start = match target.mode {
            Mode::VerticesKnown => Key {
                blocks: vec![all],
                unseen: (0, 0),
            },
            Mode::VerticesUnknown => Key {
                blocks: Vec::new(),
                unseen: all,
            },
        };
        let draws = dist
            .entries()
            .iter()
            .map(|(&k, &pk)| {
                let masks = (0u32..1 << n).filter(|m| m.count_ones() as usize == k).collect();
                (pk / binomial(n, k), masks)
            })
            .collect();
        Ok(Oracle {
            n,
            draws,
            goal,
            start,
            memo: HashMap::new(),
            moves: HashMap::new(),
        })
    }

    fn is_met(&self, key: &Key) -> bool {
        let single = |&(m, u): &Counts| m + u == 1;
        match self.goal {
            Goal::Complete => key.unseen == (0, 0) && key.blocks.iter().all(single),
            Goal::Arbitrary(r) => key.blocks.iter().filter(|b| single(b)).count() >= r,
            Goal::Marked => key.unseen.0 == 0 && key.blocks.iter().all(|b| b.0 == 0 || single(b)),
        }
    }

    /// Coupons are laid out atom by atom, target coupons first, unseen last.
    fn refine(key: &Key, mask: u32) -> Key {
        let mut offset = 0;
        let mut split = |(m, u): Counts| {
            let take = |len: u8, at: u32| (mask >> at & ((1u32 << len) - 1)).count_ones() as u8;
            let inside = (take(m, offset), take(u, offset + m as u32));
            offset += (m + u) as u32;
            (inside, (m - inside.0, u - inside.1))
        };
        let mut blocks = Vec::with_capacity(2 * key.blocks.len() + 1);
        for &b in &key.blocks {
            let (inside, outside) = split(b);
            blocks.extend([inside, outside].into_iter().filter(|&(m, u)| m + u > 0));
        }
        let (inside, unseen) = split(key.unseen);
        if inside.0 + inside.1 > 0 {
            blocks.push(inside);
        }
        blocks.sort_unstable();
        Key { blocks, unseen }
    }

    fn successors(&mut self, key: &Key) -> &[(Key, f64)] {
        if !self.moves.contains_key(key) {
            let mut weights: HashMap<Key, f64> = HashMap::new();
            for (w, masks) in &self.draws {
                for &mask in masks {
                    *weights.entry(Self::refine(key, mask)).or_default() += w;
                }
            }
            let mut list: Vec<(Key, f64)> = weights.into_iter().collect();
            list.sort_unstable_by(|a, b| a.0.cmp(&b.0));
            self.moves.insert(key.clone(), list);
        }
        &self.moves[key]
    }

    fn expected(&mut self, key: &Key) -> Result<f64> {
        if self.is_met(key) {
            return Ok(0.0);
        }
        if let Some(&v) = self.memo.get(key) {
            return Ok(v);
        }
        let next: Vec<(Key, f64)> = self
            .successors(key)
            .iter()
            .filter(|(k, _)| k != key)
            .cloned()
            .collect();
        if next.is_empty() {
            return Err(Error::Unrecoverable(format!(
                "no sample changes the knowledge state {:?} (n = {})",
                key.blocks, self.n
            )));
        }
        let mut acc = 1.0;
        let mut leave = 0.0;
        for (k, w) in &next {
            acc += w * self.expected(k)?;
            leave += w;
        }
        let v = acc / leave;
        self.memo.insert(key.clone(), v);
        Ok(v)
    }

    fn tail(&mut self, t_max: usize) -> Vec<f64> {
        let mut tails = Vec::with_capacity(t_max + 1);
        let mut mass: BTreeMap<Key, f64> = BTreeMap::new();
        if !self.is_met(&self.start) {
            mass.insert(self.start.clone(), 1.0);
        }
        for t in 0..=t_max {
            tails.push(mass.values().sum::<f64>().min(1.0));
            if t == t_max {
                break;
            }
            let mut next: BTreeMap<Key, f64> = BTreeMap::new();
            for (key, p) in mass {
                let moves = self.successors(&key).to_vec();
                for (k, w) in moves {
                    if !self.is_met(&k) {
                        *next.entry(k).or_default() += p * w;
                    }
                }
            }
            mass = next;
        }
        tails
    }
}

/// Exact `E[T]` by memoized recursion over canonical knowledge states.
pub fn oracle_expected(n: usize, dist: &SampleSizeDist, target: &RecoveryTarget) -> Result<f64> {
    let mut oracle = Oracle::new(n, dist, target)?;
    let start = oracle.start.clone();
    oracle.expected(&start)
}

/// `P(T > t)` for `t = 0..=t_max`.
pub fn oracle_tail(n: usize, dist: &SampleSizeDist, target: &RecoveryTarget, t_max: usize) -> Result<Vec<f64>> {
    let mut oracle = Oracle::new(n, dist, target)?;
    Ok(oracle.tail(t_max))
}

/// Complete-recovery expectations for fixed sizes `k` and `n - k` with known
/// vertices.
pub fn lemma_nk_check(n: usize, k: usize) -> Result<(f64, f64)> {
    lemma_nk_check_mode(n, k, Mode::VerticesKnown)
}

pub fn lemma_nk_check_mode(n: usize, k: usize, mode: Mode) -> Result<(f64, f64)> {
    if k == 0 || k >= n {
        return Err(Error::InvalidDistribution(format!("size {k} must satisfy 1 <= k < n = {n}")));
    }
    let target = RecoveryTarget::complete(mode);
    Ok((
        oracle_expected(n, &SampleSizeDist::fixed(k)?, &target)?,
        oracle_expected(n, &SampleSizeDist::fixed(n - k)?, &target)?,
    ))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

fn consistent(perm: &[usize], sample: &Sample) -> bool {
    sample.coupons().iter().all(|&c| sample.labels().binary_search(&perm[c]).is_ok())
}

/// Coupons whose label agrees across every matching consistent with
/// `samples`; without known vertices they must also have been sampled.
pub fn fixed_by_enumeration(n: usize, samples: &[Sample], mode: Mode) -> Result<BTreeSet<usize>> {
    check_size(n, ENUMERATION_MAX_N)?;
    let mut seen = vec![mode == Mode::VerticesKnown; n];
    for s in samples {
        if let Some(&id) = s.coupons().iter().chain(s.labels()).find(|&&id| id >= n) {
            return Err(Error::IdOutOfRange { id, n });
        }
        for &c in s.coupons() {
            seen[c] = true;
        }
    }
    let perms: Vec<Vec<usize>> = permutations(n)
        .into_iter()
        .filter(|p| samples.iter().all(|s| consistent(p, s)))
        .collect();
    let first = perms
        .first()
        .ok_or_else(|| Error::MalformedSample("no matching is consistent with the samples".into()))?;
    Ok((0..n)
        .filter(|&c| seen[c] && perms.iter().all(|p| p[c] == first[c]))
        .collect())
}

/// Exact `E[T]` for a fixed hidden matching, tracking the literal set of
/// consistent permutations. Exponentially slower than [`oracle_expected`]
/// and independent of its canonical form.
pub fn enumeration_expected(instance: &Instance, dist: &SampleSizeDist, target: &RecoveryTarget) -> Result<f64> {
    let n = instance.n();
    check_size(n, ENUMERATION_MAX_N)?;
    dist.check_fits(n)?;
    target.validate(n)?;
    let perms = permutations(n);
    let mut draws = Vec::new();
    for (&k, &pk) in dist.entries() {
        let w = pk / binomial(n, k);
        for coupons in (0..n).combinations(k) {
            let sample = instance.sample_of(&coupons)?;
            let keep = perms
                .iter()
                .enumerate()
                .filter(|(_, p)| consistent(p, &sample))
                .fold(0u128, |acc, (i, _)| acc | 1 << i);
            let seen = coupons.iter().fold(0u32, |acc, &c| acc | 1 << c);
            draws.push((w, keep, seen));
        }
    }
    let all_seen = (1u32 << n) - 1;
    let seen0 = if target.mode == Mode::VerticesKnown { all_seen } else { 0 };
    let mut search = Enumeration {
        n,
        perms,
        draws,
        target,
        memo: HashMap::new(),
    };
    search.expected(((1u128 << search.perms.len()) - 1, seen0))
}

struct Enumeration<'a> {
    n: usize,
    perms: Vec<Vec<usize>>,
    draws: Vec<(f64, u128, u32)>,
    target: &'a RecoveryTarget,
    memo: HashMap<(u128, u32), f64>,
}

impl Enumeration<'_> {
    fn known(&self, (alive, seen): (u128, u32)) -> Vec<bool> {
        let alive: Vec<&Vec<usize>> = (0..self.perms.len())
            .filter(|&i| alive >> i & 1 == 1)
            .map(|i| &self.perms[i])
            .collect();
        (0..self.n)
            .map(|c| seen >> c & 1 == 1 && alive.iter().all(|p| p[c] == alive[0][c]))
            .collect()
    }

    fn expected(&mut self, state: (u128, u32)) -> Result<f64> {
        let known = self.known(state);
        let count = known.iter().filter(|&&k| k).count();
        if self.target.is_met_by(self.n, count, |c| known[c]) {
            return Ok(0.0);
        }
        if let Some(&v) = self.memo.get(&state) {
            return Ok(v);
        }
        let mut acc = 1.0;
        let mut leave = 0.0;
        for i in 0..self.draws.len() {
            let (w, keep, seen) = self.draws[i];
            let next = (state.0 & keep, state.1 | seen);
            if next != state {
                acc += w * self.expected(next)?;
                leave += w;
            }
        }
        if leave == 0.0 {
            return Err(Error::Unrecoverable("no sample changes the consistent matchings".into()));
        }
        let v = acc / leave;
        self.memo.insert(state, v);
        Ok(v)
    }
}
