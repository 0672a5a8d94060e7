use ctxprob::greechie::{
    contingency_split_hypergraph, contingency_to_hypergraph, enumerate_two_valued_states,
    find_state, validate, ContextHypergraph,
};
use proptest::prelude::*;

/// Random hypergraph on up to 10 atoms whose contexts cover every atom.
fn hypergraph() -> impl Strategy<Value = ContextHypergraph> {
    (3usize..=10)
        .prop_flat_map(|n| {
            let context = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=n.min(4));
            (Just(n), proptest::collection::vec(context, 1..=6))
        })
        .prop_filter_map("must validate", |(n, contexts)| {
            let atoms: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let named: Vec<Vec<String>> = contexts
                .iter()
                .map(|c| c.iter().map(|&i| atoms[i].clone()).collect())
                .collect();
            let h = ContextHypergraph::new(atoms, named).ok()?;
            validate(&h).is_valid().then_some(h)
        })
}

/// Independent count of two-valued states by scanning all 0/1 assignments.
fn brute_force_two_valued(h: &ContextHypergraph) -> usize {
    let n = h.atoms().len();
    (0u32..1 << n)
        .filter(|mask| {
            h.contexts()
                .iter()
                .all(|c| c.iter().filter(|&&a| mask >> a & 1 == 1).count() == 1)
        })
        .count()
}

fn relabeled(h: &ContextHypergraph, shift: usize) -> ContextHypergraph {
    let n = h.atoms().len();
    let name = |i: usize| format!("w{}", (i + shift) % n);
    let atoms: Vec<String> = (0..n).rev().map(name).collect();
    let contexts: Vec<Vec<String>> = h
        .contexts()
        .iter()
        .rev()
        .map(|c| c.iter().map(|&a| name(a)).collect())
        .collect();
    ContextHypergraph::new(atoms, contexts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn states_satisfy_context_sums(h in hypergraph()) {
        if let Some(s) = find_state(&h).unwrap() {
            for c in h.contexts() {
                let total: f64 = c.iter().map(|&a| s.state.values[&h.atoms()[a]]).sum();
                prop_assert!((total - 1.0).abs() <= 1e-9);
            }
            prop_assert!(s.state.values.values().all(|&v| v >= -1e-12));
        }
    }

    #[test]
    fn two_valued_states_match_brute_force(h in hypergraph()) {
        let states = enumerate_two_valued_states(&h, usize::MAX).unwrap();
        prop_assert_eq!(states.len(), brute_force_two_valued(&h));
        for s in &states {
            for c in h.contexts() {
                let ones: u32 = c.iter().map(|&a| s.values[&h.atoms()[a]] as u32).sum();
                prop_assert_eq!(ones, 1);
            }
        }
        if !states.is_empty() {
            prop_assert!(find_state(&h).unwrap().is_some());
        }
        let mut sorted = states.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), states.len());
    }

    #[test]
    fn relabeling_preserves_counts(h in hypergraph(), shift in 0usize..10) {
        let g = relabeled(&h, shift);
        prop_assert!(validate(&g).is_valid());
        prop_assert_eq!(
            enumerate_two_valued_states(&h, usize::MAX).unwrap().len(),
            enumerate_two_valued_states(&g, usize::MAX).unwrap().len()
        );
        prop_assert_eq!(find_state(&h).unwrap().is_some(), find_state(&g).unwrap().is_some());
    }

    #[test]
    fn text_round_trip(h in hypergraph()) {
        let back = ContextHypergraph::parse(&h.to_text()).unwrap();
        prop_assert_eq!(back, h);
    }
}

#[test]
fn limit_truncates_enumeration() {
    let h = contingency_split_hypergraph("R", "S");
    assert_eq!(enumerate_two_valued_states(&h, usize::MAX).unwrap().len(), 4);
    assert_eq!(enumerate_two_valued_states(&h, 3).unwrap().len(), 3);
}

#[test]
fn contingency_builders() {
    let one = contingency_to_hypergraph("R", "S");
    assert_eq!((one.atoms().len(), one.contexts().len()), (4, 1));
    assert_eq!(enumerate_two_valued_states(&one, usize::MAX).unwrap().len(), 4);
    let split = contingency_split_hypergraph("R", "S");
    assert_eq!(split.contexts().len(), 2);
    assert!(validate(&split).unpasted);
}

#[test]
fn odd_and_even_cycles() {
    for k in 3..=9 {
        let h = ContextHypergraph::cycle(k);
        let states = enumerate_two_valued_states(&h, usize::MAX).unwrap().len();
        assert_eq!(states, if k % 2 == 0 { 2 } else { 0 }, "cycle {k}");
        let s = find_state(&h).unwrap().unwrap();
        if k % 2 == 1 {
            assert!(s.unique);
            assert!(s.state.values.values().all(|v| (v - 0.5).abs() <= 1e-9));
        } else {
            assert!(!s.unique);
        }
    }
}
