mod common;

use common::{distinct_sum_table, groups_up_to, Tiny};
use proptest::prelude::*;
use zerosum::builders::{
    add_cyclic, add_rank2_block, add_rank3_block, compose_bounds, cyclic_standard, homocyclic_bound,
    sd_square_witness, sum_of_distinct, BoundReport,
};
use zerosum::catalog::{Catalog, Status};
use zerosum::{compute, verify, Budget, GroupSpec, InvariantQuery, SearchConfig};

fn assert_verified(r: &BoundReport) {
    let c = r.certificate.as_ref().expect("constructive");
    assert!(verify(c).unwrap().is_accept(), "{}: {}", r.method, r.trace);
    assert_eq!(c.claims.length, r.bound);
}

/// Whether the sum-of-distinct-elements problem is expected to have no solution.
fn excepted(g: &GroupSpec, target_is_zero: bool, target_is_full: bool, k: u64) -> bool {
    let n = g.order();
    if k == 0 {
        return !target_is_zero;
    }
    if k == n {
        return !target_is_full;
    }
    g.exponent() == 2 && (k == 2 || k == n - 2) && target_is_zero
}

#[test]
fn sum_of_distinct_exception_map() {
    for g in groups_up_to(16) {
        let tiny = Tiny::new(g.moduli());
        let exists = distinct_sum_table(&tiny);
        let full = tiny.sum(0..tiny.order());
        for (s, coords) in tiny.elems.iter().enumerate() {
            let target = g.element(coords).unwrap();
            for k in 0..=g.order() {
                let got = sum_of_distinct(&g, &target, k).unwrap();
                assert_eq!(got.is_some(), exists[k as usize][s], "{g} g={target} k={k}");
                assert_eq!(
                    got.is_none(),
                    excepted(&g, target.is_zero(), *coords == full, k),
                    "{g} g={target} k={k}"
                );
                if let Some(seq) = got {
                    assert_eq!(seq.len(), k);
                    assert!(seq.height() <= 1);
                    assert_eq!(seq.sigma(), target);
                }
            }
        }
    }
    assert!(sum_of_distinct(&GroupSpec::new(&[4]).unwrap(), &GroupSpec::new(&[4]).unwrap().zero(), 5).is_err());
}

#[test]
fn builders_never_exceed_exact_values() {
    let cfg = SearchConfig::sequential();
    for g in groups_up_to(32) {
        for k in 0..=3 {
            let b = compose_bounds(&g, k);
            let exact = compute(&InvariantQuery::sd(&g, k), &cfg).unwrap();
            assert!(b.bound <= exact.value, "SD_{k}({g}): bound {} > {}; {}", b.bound, exact.value, b.trace);
            if b.certificate.is_some() {
                assert_verified(&b);
            }
        }
    }
}

#[test]
fn builders_below_catalog_values() {
    let cat = Catalog::builtin();
    for r in &cat.records {
        let Some(k) = r.k else { continue };
        if r.status == Status::Prediction {
            continue;
        }
        let g = GroupSpec::new(&r.group).unwrap();
        let b = compose_bounds(&g, k);
        let hi = r.value_max.unwrap_or(r.value);
        assert!(b.bound <= hi, "SD_{k}({g}) bound {} above {hi}: {}", b.bound, b.trace);
        if b.certificate.is_some() {
            assert_verified(&b);
        }
    }
}

#[test]
fn tight_groups() {
    for (n, r, k, v) in [(5, 3, 1, 12), (5, 4, 1, 17), (3, 4, 0, 9), (3, 5, 0, 11), (3, 6, 0, 13), (4, 4, 0, 13)] {
        let rep = homocyclic_bound(n, r, k).unwrap();
        assert_eq!(rep.bound, v, "C_{n}^{r} k={k}: {}", rep.trace);
        assert_verified(&rep);
        assert!(compose_bounds(&GroupSpec::homocyclic(n, r as usize).unwrap(), k).bound >= v);
    }
}

#[test]
fn homocyclic_certificates_verify() {
    for n in 3u64..=7 {
        for r in 3..=5 {
            if n.pow(r as u32) > 20_000 {
                continue;
            }
            for k in 0..=3 {
                let rep = homocyclic_bound(n, r, k).unwrap();
                assert_verified(&rep);
                assert!(rep.certificate.unwrap().claims.cm_value <= k);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_of_distinct_contract(m in prop::sample::select(vec![vec![6], vec![2, 4], vec![3, 3], vec![2, 2, 2, 2], vec![20]]),
                                seed in 0usize..1000, k in 0u64..20) {
        let g = GroupSpec::new(&m).unwrap();
        let k = k % (g.order() + 1);
        let target = g.element_at(seed % g.size()).unwrap();
        if let Some(s) = sum_of_distinct(&g, &target, k).unwrap() {
            prop_assert_eq!(s.len(), k);
            prop_assert!(s.height() <= 1);
            prop_assert_eq!(s.sigma(), target);
        }
    }

    #[test]
    fn add_cyclic_respects_budget(h in 3u64..9, kb in 0u64..4, n in 2u64..8, m_seed in 0u64..8, k in 0u64..3) {
        let base = cyclic_standard(h, kb, 1).unwrap().certificate.unwrap();
        let m = 2 + m_seed % (n - 1);
        prop_assume!(base.claims.cm_value <= k + 1);
        let rep = add_cyclic(&base, n, m, k).unwrap();
        assert_verified(&rep);
        let delta = (m + 1).saturating_sub(h);
        prop_assert!(rep.certificate.as_ref().unwrap().claims.cm_value <= k + delta);
        prop_assert_eq!(rep.bound, base.claims.length + m - 1);
        prop_assert!(add_cyclic(&base, n, 1, k).is_err());
    }

    #[test]
    fn rank_blocks_respect_budget(n0 in 3u64..8, a in 0u64..6, b in 0u64..6, c in 0u64..6, k in 0u64..3) {
        let pick = |x: u64| 3 + x % (n0 - 1);
        let w = sd_square_witness(n0, k).unwrap();
        let rep = add_rank2_block(&w, pick(a), pick(b), k).unwrap();
        assert_verified(&rep);
        prop_assert!(rep.certificate.as_ref().unwrap().claims.cm_value <= k);
        prop_assert_eq!(rep.bound, w.seq().len() + pick(a) + pick(b) - 2);

        let base = cyclic_standard(n0, k + 3, 1).unwrap().certificate.unwrap();
        let e = GroupSpec::new(&[n0]).unwrap().element(&[1]).unwrap();
        let rep = add_rank3_block(&base, [&e, &e, &e], [pick(a), pick(b), pick(c)], k).unwrap();
        assert_verified(&rep);
        prop_assert!(rep.certificate.as_ref().unwrap().claims.cm_value <= k);
        prop_assert_eq!(rep.bound, base.claims.length - 3 + pick(a) + pick(b) + pick(c));
    }
}

#[test]
fn infinite_budget_in_catalog_predictions() {
    let g = GroupSpec::new(&[2, 4]).unwrap();
    assert_eq!(Catalog::predict_sd(&g, Budget::Infinite).unwrap().0, 5);
}
