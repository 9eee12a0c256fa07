mod common;

use uptree::embedding::{is_upward, leftmost_edge_at_source};
use uptree::oracle::{
    brute_extension, enumerate_planar, enumerate_upward_planar, random_instance, random_permutation,
    random_upward_instance, relabel, rotation_system_count, OracleError, DEFAULT_BUDGET,
};
use uptree::digraph::validate_input;
use uptree::extension::PartialInstance;

use common::{diamond, k4st, not_upward, theta3};

#[test]
fn named_censuses() {
    let d = enumerate_upward_planar(&diamond(), DEFAULT_BUDGET).unwrap();
    assert_eq!(d.buckets.len(), 2);
    assert!(d.buckets.values().all(|b| b.len() == 1));
    let t = enumerate_upward_planar(&theta3(), DEFAULT_BUDGET).unwrap();
    assert_eq!(t.buckets.len(), 3);
    assert!(t.buckets.values().all(|b| b.len() == 2));
    assert!(enumerate_upward_planar(&k4st(), DEFAULT_BUDGET).unwrap().total() > 0);
    assert_eq!(enumerate_upward_planar(&not_upward(), DEFAULT_BUDGET).unwrap().total(), 0);
}

#[test]
fn census_entries_are_upward_and_distinct() {
    for (_, g) in common::generated(40) {
        let census = enumerate_upward_planar(&g, DEFAULT_BUDGET).unwrap();
        let planar = enumerate_planar(&g, DEFAULT_BUDGET).unwrap();
        let mut all: Vec<_> = census.iter().cloned().collect();
        for emb in &all {
            assert!(is_upward(&g, emb).unwrap());
            assert!(planar.binary_search(emb).is_ok());
        }
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }
}

#[test]
fn census_size_ignores_vertex_labels() {
    for (seed, g) in common::generated(40) {
        let perm = random_permutation(g.vertex_count(), seed);
        let h = relabel(&g, &perm);
        let a = enumerate_upward_planar(&g, DEFAULT_BUDGET).unwrap();
        let b = enumerate_upward_planar(&h, DEFAULT_BUDGET).unwrap();
        // edge ids are kept, so buckets line up
        let sizes = |c: &uptree::oracle::Census| c.buckets.iter().map(|(&e, v)| (e, v.len())).collect::<Vec<_>>();
        assert_eq!(sizes(&a), sizes(&b));
    }
}

#[test]
fn census_is_deterministic() {
    let g = &common::generated(10)[9].1;
    assert_eq!(
        enumerate_upward_planar(g, DEFAULT_BUDGET).unwrap(),
        enumerate_upward_planar(g, DEFAULT_BUDGET).unwrap()
    );
}

#[test]
fn budget_is_enforced() {
    let g = random_upward_instance(60, 3);
    assert!(rotation_system_count(&g) > DEFAULT_BUDGET as u128);
    assert!(matches!(
        enumerate_upward_planar(&g, DEFAULT_BUDGET),
        Err(OracleError::BudgetExceeded { .. })
    ));
}

#[test]
fn generators_produce_valid_inputs() {
    for seed in 0..50 {
        if let Ok(g) = random_instance(6, 9, seed) {
            assert!(validate_input(&g).is_empty());
            assert_eq!(g.edge_count(), 9);
            assert_eq!(random_instance(6, 9, seed).unwrap().edges(), g.edges());
        }
        let g = random_upward_instance(40 + seed as usize, seed);
        assert!(validate_input(&g).is_empty());
        assert!(g.edge_count() >= 40 + seed as usize);
    }
    assert!(random_instance(2, 3, 0).is_err());
}

#[test]
fn brute_extension_of_empty_instance_is_the_first_entry() {
    let g = theta3();
    let emb = brute_extension(&g, &PartialInstance::empty(), DEFAULT_BUDGET).unwrap().unwrap();
    assert_eq!(leftmost_edge_at_source(&g, &emb).unwrap(), 0);
}
