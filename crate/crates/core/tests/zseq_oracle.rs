mod common;

use common::{minimal_zero_sum, zero_sumfree, Tiny};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use zerosum::{verify, CertKind, GroupSpec, ZSeq};

fn check(moduli: &[u64], tiny: &Tiny, idx: &[usize]) {
    let g = GroupSpec::new(moduli).unwrap();
    let s = ZSeq::from_indices(&g, idx).unwrap();
    assert_eq!(s.is_zero_sumfree(), zero_sumfree(tiny, idx), "{s}");
    assert_eq!(s.is_minimal_zero_sum(), minimal_zero_sum(tiny, idx), "{s}");
}

#[test]
fn random_multisets_agree_with_subset_enumeration() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for moduli in [&[12][..], &[3, 6]] {
        let tiny = Tiny::new(moduli);
        for _ in 0..10_000 {
            let len = rng.gen_range(0..=10);
            // Bias towards small supports so repeated elements are common.
            let support = rng.gen_range(1..=tiny.order());
            let idx: Vec<usize> = (0..len).map(|_| rng.gen_range(0..support)).collect();
            check(moduli, &tiny, &idx);
        }
    }
}

#[test]
fn all_small_sets_agree_with_subset_enumeration() {
    for moduli in [&[12][..], &[3, 6]] {
        let tiny = Tiny::new(moduli);
        let n = tiny.order();
        for mask in 0u64..(1 << n) {
            if mask.count_ones() > 10 {
                continue;
            }
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            check(moduli, &tiny, &idx);
        }
    }
}

fn seq_strategy() -> impl Strategy<Value = (Vec<u64>, Vec<usize>)> {
    prop::sample::select(vec![vec![12], vec![3, 6], vec![2, 2, 4], vec![5, 5], vec![7]]).prop_flat_map(|m| {
        let n: u64 = m.iter().product();
        (Just(m), prop::collection::vec(0..n as usize, 0..9))
    })
}

proptest! {
    #[test]
    fn certificates_round_trip((m, idx) in seq_strategy()) {
        let g = GroupSpec::new(&m).unwrap();
        let s = ZSeq::from_indices(&g, &idx).unwrap();
        for kind in [CertKind::ZeroSumfree, CertKind::MinimalZeroSum] {
            let cert = s.to_certificate(kind, 1);
            let back = zerosum::Certificate::from_json(&cert.to_json()).unwrap();
            prop_assert_eq!(&back, &cert);
            prop_assert_eq!(back.to_zseq().unwrap(), s.clone());
            let expect = match kind {
                CertKind::ZeroSumfree => s.is_zero_sumfree(),
                CertKind::MinimalZeroSum => s.is_minimal_zero_sum(),
            };
            prop_assert_eq!(verify(&cert).unwrap().is_accept(), expect);
        }
    }

    #[test]
    fn subsums_match_enumeration((m, idx) in seq_strategy()) {
        let g = GroupSpec::new(&m).unwrap();
        let tiny = Tiny::new(&m);
        let s = ZSeq::from_indices(&g, &idx).unwrap();
        let mut expect = vec![false; tiny.order()];
        let sorted = s.indices();
        for mask in 1u64..(1 << sorted.len()) {
            let sub = (0..sorted.len()).filter(|i| mask >> i & 1 == 1).map(|i| sorted[i]);
            expect[tiny.index(&tiny.sum(sub))] = true;
        }
        prop_assert_eq!(s.subsums(), expect);
    }

    #[test]
    fn cm_and_height((m, idx) in seq_strategy(), level in 1u64..4) {
        let g = GroupSpec::new(&m).unwrap();
        let s = ZSeq::from_indices(&g, &idx).unwrap();
        prop_assert_eq!(s.cm(level), common::cm(&idx, level));
        prop_assert_eq!(s.cm(1), s.len() - s.support().len() as u64);
        prop_assert_eq!(s.height() <= 1, s.cm(1) == 0);
    }
}
