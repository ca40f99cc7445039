//! Problem instances, samples and sample-size distributions.
//!
//! Coupons and labels are dense ids `0..n`. An [`Instance`] holds the hidden
//! perfect matching `coupon -> label`; a [`Sample`] is a pair of equally sized
//! id sets where the labels are exactly the image of the coupons.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`SampleSizeDist`].
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Hidden bipartite perfect matching between `n` coupons and `n` labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct Instance {
    matching: Vec<usize>,
    inverse: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matching: Option<Vec<usize>>,
}

impl TryFrom<InstanceJson> for Instance {
    type Error = Error;

    fn try_from(raw: InstanceJson) -> Result<Self> {
        Instance::new(raw.n, raw.matching)
    }
}

impl From<Instance> for InstanceJson {
    fn from(inst: Instance) -> Self {
        InstanceJson {
            n: inst.n(),
            matching: Some(inst.matching),
        }
    }
}

impl Instance {
    /// Builds an instance; the default matching is the identity.
    pub fn new(n: usize, matching: Option<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroSize);
        }
        let matching = matching.unwrap_or_else(|| (0..n).collect());
        if matching.len() != n {
            return Err(Error::NonBijection { n });
        }
        let mut inverse = vec![usize::MAX; n];
        for (coupon, &label) in matching.iter().enumerate() {
            if label >= n || inverse[label] != usize::MAX {
                return Err(Error::NonBijection { n });
            }
            inverse[label] = coupon;
        }
        Ok(Instance { matching, inverse })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, None)
    }

    /// Uniformly random matching drawn from `rng`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut matching: Vec<usize> = (0..n).collect();
        matching.shuffle(rng);
        Self::new(n, Some(matching))
    }

    pub fn n(&self) -> usize {
        self.matching.len()
    }

    pub fn matching(&self) -> &[usize] {
        &self.matching
    }

    pub fn label_of(&self, coupon: usize) -> usize {
        self.matching[coupon]
    }

    pub fn coupon_of(&self, label: usize) -> usize {
        self.inverse[label]
    }

    /// The sample revealing `coupons` and their label set.
    pub fn sample_of(&self, coupons: &[usize]) -> Result<Sample> {
        let n = self.n();
        if let Some(&id) = coupons.iter().find(|&&c| c >= n) {
            return Err(Error::IdOutOfRange { id, n });
        }
        let labels = coupons.iter().map(|&c| self.matching[c]).collect();
        Sample::new(coupons.to_vec(), labels)
    }
}

/// One draw: a set of coupons and the (unmatched) set of their labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sample {
    coupons: Vec<usize>,
    labels: Vec<usize>,
}

impl Sample {
    /// Both sides are sorted; duplicates or unequal sizes are rejected.
    pub fn new(mut coupons: Vec<usize>, mut labels: Vec<usize>) -> Result<Self> {
        coupons.sort_unstable();
        labels.sort_unstable();
        if coupons.is_empty() || coupons.len() != labels.len() {
            return Err(Error::MalformedSample(format!(
                "{} coupons vs {} labels",
                coupons.len(),
                labels.len()
            )));
        }
        if coupons.windows(2).any(|w| w[0] == w[1]) || labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedSample("repeated id".into()));
        }
        Ok(Sample { coupons, labels })
    }

    pub fn coupons(&self) -> &[usize] {
        &self.coupons
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.coupons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coupons.is_empty()
    }
}

/// Distribution of the sample size, as a finite map `k -> P(K = k)`.
///
/// Zero-probability entries are dropped so the support is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistJson", into = "DistJson")]
pub struct SampleSizeDist {
    entries: BTreeMap<usize, f64>,
}

#[derive(Serialize, Deserialize)]
struct DistJson {
    sizes: BTreeMap<String, f64>,
}

impl TryFrom<DistJson> for SampleSizeDist {
    type Error = Error;

    fn try_from(raw: DistJson) -> Result<Self> {
        let mut entries = Vec::with_capacity(raw.sizes.len());
        for (key, p) in raw.sizes {
            let k: usize = key
                .trim()
                .parse()
                .map_err(|_| Error::InvalidDistribution(format!("size key {key:?} is not an integer")))?;
            entries.push((k, p));
        }
        SampleSizeDist::new(entries)
    }
}

impl From<SampleSizeDist> for DistJson {
    fn from(dist: SampleSizeDist) -> Self {
        DistJson {
            sizes: dist.entries.iter().map(|(k, p)| (k.to_string(), *p)).collect(),
        }
    }
}

impl SampleSizeDist {
    pub fn new<I: IntoIterator<Item = (usize, f64)>>(entries: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut total = 0.0;
        for (k, p) in entries {
            if k == 0 {
                return Err(Error::InvalidDistribution("sample size 0".into()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange {
                    value: p,
                    range: "[0, 1]",
                });
            }
            total += p;
            if p > 0.0 {
                *map.entry(k).or_insert(0.0) += p;
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidDistribution("no size with positive probability".into()));
        }
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(SampleSizeDist { entries: map })
    }

    /// `K(p) = {1: p, 2: 1 - p}`.
    pub fn kp(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                value: p,
                range: "[0, 1]",
            });
        }
        Self::new([(1, p), (2, 1.0 - p)])
    }

    /// Every sample has size `k`.
    pub fn fixed(k: usize) -> Result<Self> {
        Self::new([(k, 1.0)])
    }

    pub fn entries(&self) -> &BTreeMap<usize, f64> {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.entries.get(&k).copied().unwrap_or(0.0)
    }

    pub fn max_size(&self) -> usize {
        *self.entries.keys().next_back().expect("non-empty support")
    }

    /// Fails with `SizeExceedsN` if some size in the support exceeds `n`.
    pub fn check_fits(&self, n: usize) -> Result<()> {
        let k = self.max_size();
        if k > n {
            return Err(Error::SizeExceedsN { k, n });
        }
        Ok(())
    }

    /// `Some(p)` when the distribution is `K(p)`, i.e. its support is within {1, 2}.
    pub fn as_kp(&self) -> Option<f64> {
        if self.max_size() <= 2 {
            Some(self.prob(1))
        } else {
            None
        }
    }

    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.entries.len() == 1 {
            return self.max_size();
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (&k, &p) in &self.entries {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.max_size()
    }
}

/// Whether the coupon and label universes are known before sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Ids are only revealed by samples; the last edge must be sampled too.
    #[default]
    VerticesUnknown,
    /// Both sides are known up front, so exclusion arguments apply.
    VerticesKnown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Complete,
    /// Any `r` coupons with known labels.
    Arbitrary(usize),
    /// A fixed set of coupons.
    Specific(BTreeSet<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecoveryTarget {
    pub kind: TargetKind,
    pub mode: Mode,
}

impl RecoveryTarget {
    pub fn complete(mode: Mode) -> Self {
        RecoveryTarget {
            kind: TargetKind::Complete,
            mode,
        }
    }

    pub fn arbitrary(r: usize, mode: Mode) -> Self {
        RecoveryTarget {
            kind: TargetKind::Arbitrary(r),
            mode,
        }
    }

    pub fn specific<I: IntoIterator<Item = usize>>(coupons: I, mode: Mode) -> Self {
        RecoveryTarget {
            kind: TargetKind::Specific(coupons.into_iter().collect()),
            mode,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match &self.kind {
            TargetKind::Complete => Ok(()),
            TargetKind::Arbitrary(r) if (1..=n).contains(r) => Ok(()),
            TargetKind::Arbitrary(r) => Err(Error::InvalidTarget(format!("r = {r} not in 1..={n}"))),
            TargetKind::Specific(set) if set.is_empty() => Err(Error::InvalidTarget("empty coupon set".into())),
            TargetKind::Specific(set) => match set.iter().find(|&&c| c >= n) {
                Some(&id) => Err(Error::IdOutOfRange { id, n }),
                None => Ok(()),
            },
        }
    }

    /// Whether a known-coupon set (given as a predicate and a count) meets the target.
    pub fn is_met_by(&self, n: usize, known_count: usize, is_known: impl Fn(usize) -> bool) -> bool {
        match &self.kind {
            TargetKind::Complete => known_count == n,
            TargetKind::Arbitrary(r) => known_count >= *r,
            TargetKind::Specific(set) => set.iter().all(|&c| is_known(c)),
        }
    }
}

/// Draws one sample: the size from `dist`, then a uniform subset of that size.
pub fn draw_sample<R: Rng + ?Sized>(instance: &Instance, dist: &SampleSizeDist, rng: &mut R) -> Result<Sample> {
    let n = instance.n();
    let k = dist.sample_size(rng);
    if k > n {
        return Err(Error::SizeExceedsN { k, n });
    }
    let mut coupons = rand::seq::index::sample(rng, n, k).into_vec();
    coupons.sort_unstable();
    let mut labels: Vec<usize> = coupons.iter().map(|&c| instance.label_of(c)).collect();
    labels.sort_unstable();
    debug_assert!(coupons
        .iter()
        .all(|&c| labels.binary_search(&instance.label_of(c)).is_ok()));
    Ok(Sample { coupons, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn instance_defaults_to_identity() {
        let inst = Instance::new(3, None).unwrap();
        assert_eq!(inst.matching(), &[0, 1, 2]);
        assert!(Instance::new(5, Some(vec![1, 0, 2, 4, 3])).is_ok());
    }

    #[test]
    fn instance_rejects_bad_input() {
        assert_eq!(Instance::new(3, Some(vec![0, 0, 2])), Err(Error::NonBijection { n: 3 }));
        assert_eq!(Instance::new(3, Some(vec![0, 1])), Err(Error::NonBijection { n: 3 }));
        assert_eq!(Instance::new(3, Some(vec![0, 1, 3])), Err(Error::NonBijection { n: 3 }));
        assert_eq!(Instance::new(0, None), Err(Error::ZeroSize));
    }

    #[test]
    fn kp_drops_zero_entries() {
        assert_eq!(SampleSizeDist::kp(1.0).unwrap().entries(), &BTreeMap::from([(1, 1.0)]));
        assert_eq!(SampleSizeDist::kp(0.0).unwrap().entries(), &BTreeMap::from([(2, 1.0)]));
        assert_eq!(
            SampleSizeDist::kp(0.3).unwrap().entries(),
            &BTreeMap::from([(1, 0.3), (2, 0.7)])
        );
        assert!(matches!(SampleSizeDist::kp(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(SampleSizeDist::kp(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn dist_validation() {
        assert!(SampleSizeDist::new([(1, 0.5), (2, 0.4)]).is_err());
        assert!(SampleSizeDist::new([(1, 0.5), (2, 0.5 + 1e-12)]).is_ok());
        assert!(SampleSizeDist::new([(0, 1.0)]).is_err());
        assert!(SampleSizeDist::new([(3, 0.0)]).is_err());
    }

    #[test]
    fn dist_json_round_trip() {
        let dist: SampleSizeDist = serde_json::from_str(r#"{"sizes": {"1": 0.3, "2": 0.7}}"#).unwrap();
        assert_eq!(dist, SampleSizeDist::kp(0.3).unwrap());
        let text = serde_json::to_string(&dist).unwrap();
        assert_eq!(text, r#"{"sizes":{"1":0.3,"2":0.7}}"#);
        assert!(serde_json::from_str::<SampleSizeDist>(r#"{"sizes": {"x": 1.0}}"#).is_err());
    }

    #[test]
    fn instance_json() {
        let inst: Instance = serde_json::from_str(r#"{"n": 3}"#).unwrap();
        assert_eq!(inst.matching(), &[0, 1, 2]);
        let inst: Instance = serde_json::from_str(r#"{"n": 3, "matching": [2, 0, 1]}"#).unwrap();
        assert_eq!(inst.coupon_of(0), 1);
        assert!(serde_json::from_str::<Instance>(r#"{"n": 3, "matching": [0, 0, 1]}"#).is_err());
    }

    #[test]
    fn draw_respects_matching() {
        let inst = Instance::new(5, Some(vec![1, 0, 2, 4, 3])).unwrap();
        let dist = SampleSizeDist::fixed(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let s = draw_sample(&inst, &dist, &mut rng).unwrap();
            assert_eq!(s.len(), 2);
            let mut image: Vec<usize> = s.coupons().iter().map(|&c| inst.label_of(c)).collect();
            image.sort_unstable();
            assert_eq!(image, s.labels());
        }
        let identity = Instance::identity(3).unwrap();
        let s = draw_sample(&identity, &dist, &mut rng).unwrap();
        assert_eq!(s.coupons(), s.labels());
    }

    #[test]
    fn draw_rejects_oversized() {
        let inst = Instance::identity(2).unwrap();
        let dist = SampleSizeDist::fixed(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            draw_sample(&inst, &dist, &mut rng),
            Err(Error::SizeExceedsN { k: 3, n: 2 })
        );
    }

    // Chi-squared critical values at significance 0.001.
    const CHI2_001: [f64; 10] = [10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124, 27.877, 29.588];

    fn chi_squared_uniform(n: usize, k: usize, draws: usize, seed: u64) -> (f64, usize) {
        let inst = Instance::identity(n).unwrap();
        let dist = SampleSizeDist::fixed(k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for _ in 0..draws {
            let s = draw_sample(&inst, &dist, &mut rng).unwrap();
            *counts.entry(s.coupons().to_vec()).or_default() += 1;
        }
        let cells = binomial(n, k);
        assert_eq!(counts.len(), cells);
        let expected = draws as f64 / cells as f64;
        let stat = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        (stat, cells - 1)
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn pairs_at_n3_are_equiprobable() {
        let inst = Instance::identity(3).unwrap();
        let dist = SampleSizeDist::fixed(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 60_000;
        let mut counts = BTreeMap::<Vec<usize>, usize>::new();
        for _ in 0..draws {
            let s = draw_sample(&inst, &dist, &mut rng).unwrap();
            *counts.entry(s.coupons().to_vec()).or_default() += 1;
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in counts.values() {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * se);
        }
    }

    #[test]
    fn subsets_are_uniform_chi_squared() {
        for (n, k) in [(3, 1), (4, 2), (5, 2), (5, 3)] {
            let (stat, dof) = chi_squared_uniform(n, k, 100_000, 17 + n as u64 * 10 + k as u64);
            assert!(stat < CHI2_001[dof - 1], "n={n} k={k}: chi2={stat} dof={dof}");
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let inst = Instance::identity(7).unwrap();
        let dist = SampleSizeDist::new([(1, 0.2), (2, 0.5), (4, 0.3)]).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| draw_sample(&inst, &dist, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn target_checks() {
        let t = RecoveryTarget::arbitrary(0, Mode::VerticesUnknown);
        assert!(t.validate(3).is_err());
        let t = RecoveryTarget::specific([3], Mode::VerticesUnknown);
        assert!(t.validate(3).is_err());
        let known = [true, true, true, false];
        let complete = RecoveryTarget::complete(Mode::VerticesUnknown);
        assert!(!complete.is_met_by(4, 3, |c| known[c]));
        assert!(complete.is_met_by(3, 3, |c| known[c]));
        assert!(!RecoveryTarget::specific([3], Mode::VerticesUnknown).is_met_by(4, 3, |c| known[c]));
        assert!(RecoveryTarget::arbitrary(1, Mode::VerticesUnknown).is_met_by(4, 3, |c| known[c]));
    }
}
