use std::collections::BTreeSet;

use lccp_core::inference::KnowledgeState;
use lccp_core::oracle::{enumeration_expected, fixed_by_enumeration, oracle_expected};
use lccp_core::{Instance, Mode, RecoveryTarget, Sample, SampleSizeDist, TargetKind};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::VerticesUnknown), Just(Mode::VerticesKnown)]
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// A hidden matching plus coupon subsets of size `1..=max_k`.
fn history(n_range: std::ops::RangeInclusive<usize>, max_k: usize, len: usize) -> impl Strategy<Value = (Vec<usize>, Vec<Vec<usize>>)> {
    n_range.prop_flat_map(move |n| {
        let k = max_k.min(n);
        let sets = prop::collection::vec(
            (1..=k).prop_flat_map(move |size| subsequence((0..n).collect::<Vec<_>>(), size)),
            0..=len,
        );
        (permutation(n), sets)
    })
}

fn absorb_all(instance: &Instance, sets: &[Vec<usize>], mode: Mode) -> (KnowledgeState, Vec<Sample>) {
    let mut state = KnowledgeState::new(instance.n(), mode).unwrap();
    let mut samples = Vec::new();
    for set in sets {
        let s = instance.sample_of(set).unwrap();
        state.absorb(&s).unwrap();
        samples.push(s);
    }
    (state, samples)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn component_rule_matches_forced_edges((matching, sets) in history(3..=8, 2, 14)) {
        let instance = Instance::new(matching.len(), Some(matching)).unwrap();
        let (state, _) = absorb_all(&instance, &sets, Mode::VerticesUnknown);
        prop_assert_eq!(state.known_coupons(&instance), state.known_by_component_rule().unwrap());
    }

    #[test]
    fn forced_edges_match_enumeration((matching, sets) in history(3..=5, 5, 6), mode in mode()) {
        let instance = Instance::new(matching.len(), Some(matching)).unwrap();
        let (state, samples) = absorb_all(&instance, &sets, mode);
        let expected = fixed_by_enumeration(instance.n(), &samples, mode).unwrap();
        prop_assert_eq!(state.known_coupons(&instance), expected);
    }

    #[test]
    fn knowledge_only_grows((matching, sets) in history(3..=9, 4, 12), mode in mode()) {
        let instance = Instance::new(matching.len(), Some(matching)).unwrap();
        let mut state = KnowledgeState::new(instance.n(), mode).unwrap();
        let mut before = state.known_coupons(&instance);
        for set in &sets {
            state.absorb(&instance.sample_of(set).unwrap()).unwrap();
            let after = state.known_coupons(&instance);
            prop_assert!(before.is_subset(&after));
            before = after;
        }
    }

    #[test]
    fn relabeling_is_equivariant(
        (matching, sets) in history(3..=8, 4, 10),
        seed in any::<u64>(),
        mode in mode(),
    ) {
        let n = matching.len();
        let instance = Instance::new(n, Some(matching)).unwrap();
        let (state, _) = absorb_all(&instance, &sets, mode);
        // coupon relabeling sigma and label relabeling tau, derived from seed
        let sigma: Vec<usize> = rotate(n, seed as usize % n);
        let tau: Vec<usize> = rotate(n, (seed >> 32) as usize % n).into_iter().rev().collect();
        let mut moved = vec![0; n];
        for c in 0..n {
            moved[sigma[c]] = tau[instance.label_of(c)];
        }
        let relabeled = Instance::new(n, Some(moved)).unwrap();
        let mut state2 = KnowledgeState::new(n, mode).unwrap();
        for set in &sets {
            let coupons: Vec<usize> = set.iter().map(|&c| sigma[c]).collect();
            let labels: Vec<usize> = set.iter().map(|&c| tau[instance.label_of(c)]).collect();
            state2.absorb(&Sample::new(coupons, labels).unwrap()).unwrap();
        }
        let mapped: BTreeSet<usize> = state.known_coupons(&instance).iter().map(|&c| sigma[c]).collect();
        prop_assert_eq!(state2.known_coupons(&relabeled), mapped);
    }
}

fn rotate(n: usize, by: usize) -> Vec<usize> {
    (0..n).map(|c| (c + by) % n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// The canonical-state oracle against literal permutation sets, with the
    /// hidden matching and target coupons relabeled at random.
    #[test]
    fn canonical_states_are_sound(
        matching in (3usize..=4).prop_flat_map(permutation),
        pick in any::<prop::sample::Index>(),
        p in 0.0f64..=1.0,
        mode in mode(),
    ) {
        let n = matching.len();
        let specific = matching[pick.index(n)];
        let instance = Instance::new(n, Some(matching)).unwrap();
        let dist = SampleSizeDist::new([(1, p / 2.0), (2, 0.5), (3, (1.0 - p) / 2.0)]).unwrap();
        for kind in [TargetKind::Complete, TargetKind::Arbitrary(2), TargetKind::Specific([specific].into())] {
            let target = RecoveryTarget { kind, mode };
            let canonical = oracle_expected(n, &dist, &target).unwrap();
            let literal = enumeration_expected(&instance, &dist, &target).unwrap();
            prop_assert!((canonical - literal).abs() < 1e-12, "{} vs {}", canonical, literal);
        }
    }
}
