mod common;

use common::{groups_up_to, sd_table, Tiny};
use zerosum::engine::{Hint, Symmetry};
use zerosum::{compute, verify, Budget, GroupSpec, InvariantKind, InvariantQuery, SearchConfig};

fn engine_sd(g: &GroupSpec, k: u64, level: u64, cfg: &SearchConfig) -> u64 {
    let r = compute(&InvariantQuery::sd(g, k).with_level(level), cfg).unwrap();
    assert!(r.exact);
    assert!(verify(&r.witness).unwrap().is_accept(), "{g} k={k} level={level}");
    assert_eq!(r.witness.claims.length, r.value);
    assert!(r.witness.claims.cm_value <= k);
    r.value
}

#[test]
fn group_lists() {
    assert_eq!(groups_up_to(10).len(), 13);
    assert_eq!(groups_up_to(16).len(), 24);
    assert!(groups_up_to(16).iter().all(|g| g.is_canonical()));
}

#[test]
fn sd_matches_exhaustive_enumeration() {
    let cfg = SearchConfig::sequential().with_hint(Hint::Disabled);
    for g in groups_up_to(10) {
        let tiny = Tiny::new(g.moduli());
        let kmax = g.order();
        for level in [1, 2] {
            let table = sd_table(&tiny, kmax, level);
            for k in 0..=kmax {
                assert_eq!(engine_sd(&g, k, level, &cfg), table[k as usize], "SD_({k},{level})({g})");
            }
        }
    }
}

#[test]
fn small_level_two_example() {
    let c4 = GroupSpec::new(&[4]).unwrap();
    assert_eq!(sd_table(&Tiny::new(&[4]), 0, 2)[0], 3);
    assert_eq!(engine_sd(&c4, 0, 2, &SearchConfig::sequential()), 3);
}

#[test]
fn small_davenport_matches_enumeration() {
    for g in groups_up_to(10) {
        let tiny = Tiny::new(g.moduli());
        let big = sd_table(&tiny, g.order(), 1)[g.order() as usize];
        let q = InvariantQuery::new(&g, InvariantKind::SmallDavenport, Budget::Infinite);
        let r = compute(&q, &SearchConfig::sequential()).unwrap();
        assert_eq!(r.value + 1, big, "{g}");
        assert!(verify(&r.witness).unwrap().is_accept());
    }
}

fn symmetry_agrees(n: u64, r: usize, ks: &[u64], hint: Hint) {
    let g = GroupSpec::homocyclic(n, r).unwrap();
    for &k in ks {
        let on = SearchConfig::sequential().with_symmetry(Symmetry::On).with_hint(hint);
        let off = SearchConfig::sequential().with_symmetry(Symmetry::Off).with_hint(hint);
        assert_eq!(engine_sd(&g, k, 1, &on), engine_sd(&g, k, 1, &off), "SD_{k}({g})");
    }
}

#[test]
fn symmetry_reduction_keeps_values() {
    for (n, r) in [(2, 2), (2, 3), (2, 4), (2, 5), (3, 2), (3, 3), (4, 2), (5, 2), (6, 2), (7, 2)] {
        symmetry_agrees(n, r, &[0, 1, 2], Hint::Disabled);
    }
    symmetry_agrees(2, 6, &[0, 1, 2], Hint::Auto);
    symmetry_agrees(3, 4, &[0, 1, 2], Hint::Auto);
}

#[test]
#[ignore = "several minutes without symmetry reduction"]
fn symmetry_reduction_keeps_values_large() {
    symmetry_agrees(4, 3, &[0, 1, 2], Hint::Disabled);
    symmetry_agrees(8, 2, &[0, 1, 2], Hint::Disabled);
    symmetry_agrees(9, 2, &[0], Hint::Disabled);
}

#[test]
fn witness_is_lexicographically_least() {
    // The plain search reports the least sorted list among maximal zero-sumfree sets.
    let cfg = SearchConfig::sequential();
    for moduli in [&[7][..], &[3, 3], &[2, 4]] {
        let g = GroupSpec::new(moduli).unwrap();
        let tiny = Tiny::new(moduli);
        let q = InvariantQuery::new(&g, InvariantKind::LittleOlson, Budget::Finite(0));
        let r = compute(&q, &cfg).unwrap();
        let got = r.witness.to_zseq().unwrap().indices();
        let n = tiny.order();
        let mut best: Option<Vec<usize>> = None;
        for mask in 1u64..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if common::zero_sumfree(&tiny, &set) {
                let better = match &best {
                    None => true,
                    Some(b) => set.len() > b.len() || (set.len() == b.len() && set < *b),
                };
                if better {
                    best = Some(set);
                }
            }
        }
        assert_eq!(Some(got), best, "{g}");
    }
}
