//! The collector's knowledge and exact label deduction.
//!
//! Every absorbed sample `(C_s, L_s)` constrains the hidden matching to map
//! `C_s` onto `L_s`. Per coupon we keep the set of labels still possible:
//!
//! 1. a sampled coupon's candidates are intersected with `L_s`;
//! 2. every other coupon that already has candidates loses `L_s`.
//!
//! A coupon is *known* when its label is the same in every perfect matching
//! of the resulting candidate graph. Using the true matching as reference,
//! that holds iff the coupon lies on no alternating cycle, i.e. it forms a
//! singleton strongly connected component of the swap digraph
//! `c -> c'` whenever `label(c')` is a candidate of `c`.

mod components;
mod scc;

use std::collections::BTreeSet;

pub use components::PairComponents;
pub use scc::tarjan_scc;

use crate::error::{Error, Result};
use crate::model::{Instance, Mode, RecoveryTarget, Sample};

/// Fixed-capacity set of label ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSet {
    words: Vec<u64>,
}

impl LabelSet {
    pub fn empty(n: usize) -> Self {
        LabelSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut set = Self::empty(n);
        for id in 0..n {
            set.insert(id);
        }
        set
    }

    pub fn from_ids(n: usize, ids: &[usize]) -> Self {
        let mut set = Self::empty(n);
        for &id in ids {
            set.insert(id);
        }
        set
    }

    pub fn insert(&mut self, id: usize) {
        self.words[id / 64] |= 1 << (id % 64);
    }

    pub fn contains(&self, id: usize) -> bool {
        self.words[id / 64] >> (id % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersect_with(&mut self, other: &LabelSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn subtract(&mut self, other: &LabelSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + bit)
            })
        })
    }
}

/// Candidate label sets per coupon plus the pair graph for size-≤2 histories.
#[derive(Debug, Clone)]
pub struct KnowledgeState {
    n: usize,
    mode: Mode,
    seen: Vec<bool>,
    candidates: Vec<Option<LabelSet>>,
    /// Dropped as soon as a sample of size three or more is absorbed.
    pairs: Option<PairComponents>,
    absorbed: usize,
}

impl KnowledgeState {
    pub fn new(n: usize, mode: Mode) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroSize);
        }
        let (seen, candidates) = match mode {
            Mode::VerticesUnknown => (vec![false; n], vec![None; n]),
            Mode::VerticesKnown => (vec![true; n], vec![Some(LabelSet::full(n)); n]),
        };
        Ok(KnowledgeState {
            n,
            mode,
            seen,
            candidates,
            pairs: Some(PairComponents::new(n)),
            absorbed: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_seen(&self, coupon: usize) -> bool {
        self.seen[coupon]
    }

    pub fn candidates(&self, coupon: usize) -> Option<&LabelSet> {
        self.candidates[coupon].as_ref()
    }

    /// Number of samples absorbed so far.
    pub fn absorbed(&self) -> usize {
        self.absorbed
    }

    pub fn pair_graph(&self) -> Option<&PairComponents> {
        self.pairs.as_ref()
    }

    pub fn absorb(&mut self, sample: &Sample) -> Result<()> {
        let n = self.n;
        if let Some(&id) = sample
            .coupons()
            .iter()
            .chain(sample.labels())
            .find(|&&id| id >= n)
        {
            return Err(Error::IdOutOfRange { id, n });
        }
        let labels = LabelSet::from_ids(n, sample.labels());
        let mut in_sample = vec![false; n];
        for &c in sample.coupons() {
            in_sample[c] = true;
            match &mut self.candidates[c] {
                Some(cand) => cand.intersect_with(&labels),
                slot @ None => *slot = Some(labels.clone()),
            }
            self.seen[c] = true;
        }
        for (c, cand) in self.candidates.iter_mut().enumerate() {
            if let (false, Some(cand)) = (in_sample[c], cand) {
                cand.subtract(&labels);
            }
        }
        match (sample.coupons(), &mut self.pairs) {
            (&[c], Some(h)) => h.absorb_single(c),
            (&[a, b], Some(h)) => h.absorb_pair(a, b),
            _ => self.pairs = None,
        }
        self.absorbed += 1;
        Ok(())
    }

    /// Per-coupon flags of the forced-edge closure, with `instance` as the
    /// reference matching.
    pub fn known_flags(&self, instance: &Instance) -> Vec<bool> {
        assert_eq!(instance.n(), self.n, "instance size differs from knowledge state");
        let n = self.n;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (c, cand) in self.candidates.iter().enumerate() {
            if let Some(cand) = cand {
                debug_assert!(
                    cand.contains(instance.label_of(c)),
                    "true label of coupon {c} was pruned"
                );
                targets.extend(cand.iter().map(|l| instance.coupon_of(l)).filter(|&d| d != c));
            }
            offsets.push(targets.len());
        }
        let comp = tarjan_scc(&offsets, &targets);
        let mut comp_size = vec![0usize; n];
        for &k in &comp {
            comp_size[k] += 1;
        }
        (0..n)
            .map(|c| self.seen[c] && self.candidates[c].is_some() && comp_size[comp[c]] == 1)
            .collect()
    }

    /// Coupons whose label is identical in every matching consistent with the
    /// absorbed samples.
    pub fn known_coupons(&self, instance: &Instance) -> BTreeSet<usize> {
        self.known_flags(instance)
            .into_iter()
            .enumerate()
            .filter_map(|(c, k)| k.then_some(c))
            .collect()
    }

    /// Coupons in pair-graph components of size at least three (size-1 samples
    /// count as attachment to a known triple).
    pub fn known_by_component_rule(&self) -> Result<BTreeSet<usize>> {
        if self.mode != Mode::VerticesUnknown {
            return Err(Error::UnsupportedHistory(
                "component rule applies to vertices-unknown mode only".into(),
            ));
        }
        let h = self.pairs.as_ref().ok_or_else(|| {
            Error::UnsupportedHistory("a sample of size three or more was absorbed".into())
        })?;
        Ok((0..self.n).filter(|&c| h.is_known(c)).collect())
    }

    pub fn is_recovered(&self, instance: &Instance, target: &RecoveryTarget) -> bool {
        let flags = self.known_flags(instance);
        let count = flags.iter().filter(|&&k| k).count();
        target.is_met_by(self.n, count, |c| flags[c])
    }
}
