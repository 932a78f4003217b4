//! Brute-force oracles shared by the integration tests. Everything here works
//! from the definitions with plain loops over subsets, independently of the
//! library's search and verification code.

#![allow(dead_code)]

use zerosum::GroupSpec;

/// Every group of order at most `max_order`, in invariant-factor form.
pub fn groups_up_to(max_order: u64) -> Vec<GroupSpec> {
    fn rec(prev: u64, prod: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        let mut n = if prev == 1 { 2 } else { prev };
        while prod * n <= max {
            if n % prev == 0 {
                cur.push(n);
                rec(n, prod * n, max, cur, out);
                cur.pop();
            }
            n += 1;
        }
    }
    let mut out = Vec::new();
    rec(1, 1, max_order, &mut Vec::new(), &mut out);
    out.sort_by_key(|m| (m.iter().product::<u64>(), m.clone()));
    out.iter().map(|m| GroupSpec::new(m).unwrap()).collect()
}

/// A group as explicit coordinate tuples.
pub struct Tiny {
    pub moduli: Vec<u64>,
    pub elems: Vec<Vec<u64>>,
}

impl Tiny {
    pub fn new(moduli: &[u64]) -> Self {
        let mut elems = vec![vec![]];
        for &n in moduli {
            let mut next = Vec::new();
            for x in 0..n {
                for e in &elems {
                    let mut c = e.clone();
                    c.push(x);
                    next.push(c);
                }
            }
            elems = next;
        }
        // Reorder so the first coordinate varies fastest.
        elems.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        Self { moduli: moduli.to_vec(), elems }
    }

    pub fn order(&self) -> usize {
        self.elems.len()
    }

    pub fn sum(&self, items: impl IntoIterator<Item = usize>) -> Vec<u64> {
        let mut acc = vec![0; self.moduli.len()];
        for i in items {
            for (j, a) in acc.iter_mut().enumerate() {
                *a = (*a + self.elems[i][j]) % self.moduli[j];
            }
        }
        acc
    }

    pub fn is_zero(v: &[u64]) -> bool {
        v.iter().all(|&x| x == 0)
    }

    pub fn index(&self, c: &[u64]) -> usize {
        self.elems.iter().position(|e| e == c).unwrap()
    }

    pub fn exponent(&self) -> u64 {
        self.moduli.iter().copied().max().unwrap_or(1)
    }
}

/// Whether some non-empty sub-multiset, chosen by positions, sums to zero.
pub fn has_zero_subsum(g: &Tiny, seq: &[usize], proper_only: bool) -> bool {
    let n = seq.len();
    let full = (1u64 << n) - 1;
    (1..=full).any(|mask| {
        if proper_only && mask == full {
            return false;
        }
        Tiny::is_zero(&g.sum((0..n).filter(|i| mask >> i & 1 == 1).map(|i| seq[i])))
    })
}

pub fn zero_sumfree(g: &Tiny, seq: &[usize]) -> bool {
    !has_zero_subsum(g, seq, false)
}

pub fn minimal_zero_sum(g: &Tiny, seq: &[usize]) -> bool {
    !seq.is_empty() && Tiny::is_zero(&g.sum(seq.iter().copied())) && !has_zero_subsum(g, seq, true)
}

pub fn cm(seq: &[usize], level: u64) -> u64 {
    let mut counts = std::collections::HashMap::new();
    for &x in seq {
        *counts.entry(x).or_insert(0u64) += 1;
    }
    counts.values().map(|&v| v.saturating_sub(level)).sum()
}

/// `SD_(k,ℓ)` for every `k` in `0..=kmax` by listing all minimal zero-sum
/// sequences: sorted sequences whose proper prefixes are zero-sumfree.
pub fn sd_table(g: &Tiny, kmax: u64, level: u64) -> Vec<u64> {
    let mut best = vec![0u64; kmax as usize + 1];
    let mut seq = Vec::new();
    fn rec(g: &Tiny, seq: &mut Vec<usize>, from: usize, best: &mut [u64], level: u64) {
        for x in from..g.order() {
            seq.push(x);
            if Tiny::is_zero(&g.sum(seq.iter().copied())) {
                if minimal_zero_sum(g, seq) {
                    let c = cm(seq, level);
                    for (k, b) in best.iter_mut().enumerate() {
                        if c <= k as u64 {
                            *b = (*b).max(seq.len() as u64);
                        }
                    }
                }
            } else if zero_sumfree(g, seq) {
                rec(g, seq, x, best, level);
            }
            seq.pop();
        }
    }
    rec(g, &mut seq, 0, &mut best, level);
    best
}

/// `exists[c][s]`: some set of `c` distinct elements sums to the element with
/// position `s`.
pub fn distinct_sum_table(g: &Tiny) -> Vec<Vec<bool>> {
    let n = g.order();
    let mut exists = vec![vec![false; n]; n + 1];
    for mask in 0u64..(1 << n) {
        let items: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let s = g.index(&g.sum(items.iter().copied()));
        exists[items.len()][s] = true;
    }
    exists
}
