//! Finite abelian groups given as direct sums of cyclic groups.
//!
//! A [`GroupSpec`] is the ordered list of cyclic orders `n_1, ..., n_r`. Elements
//! are coordinate tuples and are also addressed by a mixed-radix index,
//! `index = c_1 + c_2 n_1 + c_3 n_1 n_2 + ...`, so the first coordinate is the
//! least significant digit. Every bitset over a group in this crate uses that
//! addressing, which keeps certificates and reachability tables portable.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Default upper limit on `|G|`.
pub const DEFAULT_ORDER_CAP: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("cyclic order {0} is invalid, every modulus must be at least 2")]
    ModulusTooSmall(u64),
    #[error("group order exceeds the configured cap of {cap}")]
    TooLarge { cap: u64 },
    #[error("element {coords:?} does not belong to the group with moduli {moduli:?}")]
    ForeignElement { coords: Vec<u64>, moduli: Vec<u64> },
    #[error("index {index} is out of range for a group of order {order}")]
    IndexOutOfRange { index: u64, order: u64 },
    #[error("groups {0:?} and {1:?} are not isomorphic")]
    NotIsomorphic(Vec<u64>, Vec<u64>),
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub(crate) fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Prime factorization by trial division, primes ascending.
pub(crate) fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub(crate) fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

/// Modular inverse of `a` modulo `m`, when it exists.
fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// A finite abelian group `C_{n_1} ⊕ ... ⊕ C_{n_r}`.
///
/// Immutable once built; the order, exponent and canonical rank are cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    moduli: Vec<u64>,
    order: u64,
    exponent: u64,
    rank: usize,
}

impl GroupSpec {
    pub fn new(moduli: &[u64]) -> Result<Self, GroupError> {
        Self::with_cap(moduli, DEFAULT_ORDER_CAP)
    }

    pub fn with_cap(moduli: &[u64], cap: u64) -> Result<Self, GroupError> {
        let mut order: u64 = 1;
        let mut exponent: u64 = 1;
        for &n in moduli {
            if n < 2 {
                return Err(GroupError::ModulusTooSmall(n));
            }
            order = order
                .checked_mul(n)
                .filter(|&o| o <= cap)
                .ok_or(GroupError::TooLarge { cap })?;
            exponent = lcm(exponent, n);
        }
        let rank = invariant_factors(moduli).len();
        Ok(Self { moduli: moduli.to_vec(), order, exponent, rank })
    }

    /// The trivial group.
    pub fn trivial() -> Self {
        Self { moduli: Vec::new(), order: 1, exponent: 1, rank: 0 }
    }

    /// `C_n^r`.
    pub fn homocyclic(n: u64, r: usize) -> Result<Self, GroupError> {
        Self::new(&vec![n; r])
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of cyclic factors as given (not necessarily the rank).
    pub fn num_coords(&self) -> usize {
        self.moduli.len()
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// `|G|` as an index bound.
    pub fn size(&self) -> usize {
        self.order as usize
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Rank of the group, i.e. the number of invariant factors.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of moduli divisible by `p` in the primary decomposition sense.
    pub fn p_rank(&self, p: u64) -> usize {
        self.moduli.iter().filter(|&&n| n % p == 0).count()
    }

    /// All `(p, r_p(G))` pairs with `r_p(G) > 0`, primes ascending.
    pub fn p_ranks(&self) -> Vec<(u64, usize)> {
        factorize(self.exponent)
            .into_iter()
            .map(|(p, _)| (p, self.p_rank(p)))
            .collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn is_cyclic(&self) -> bool {
        self.rank <= 1
    }

    pub fn is_p_group(&self) -> bool {
        factorize(self.exponent).len() <= 1
    }

    /// `C_n^r` with `r >= 1` after canonicalization.
    pub fn is_homocyclic(&self) -> bool {
        let inv = invariant_factors(&self.moduli);
        !inv.is_empty() && inv.iter().all(|&n| n == inv[0])
    }

    /// Invariant-factor form `n_1 | n_2 | ... | n_r`.
    pub fn canonical(&self) -> GroupSpec {
        let inv = invariant_factors(&self.moduli);
        GroupSpec { moduli: inv, order: self.order, exponent: self.exponent, rank: self.rank }
    }

    pub fn is_canonical(&self) -> bool {
        self.moduli == invariant_factors(&self.moduli)
    }

    /// Prime-power moduli, grouped by source coordinate with primes ascending.
    pub fn primary_moduli(&self) -> Vec<u64> {
        self.moduli
            .iter()
            .flat_map(|&n| factorize(n).into_iter().map(|(p, e)| p.pow(e)))
            .collect()
    }

    /// `D*(G) = Σ (n_i - 1) + 1` over the invariant factors.
    pub fn dstar(&self) -> u64 {
        invariant_factors(&self.moduli).iter().map(|n| n - 1).sum::<u64>() + 1
    }

    pub fn zero(&self) -> Element {
        Element(vec![0; self.moduli.len()])
    }

    /// Validating constructor for an element of this group.
    pub fn element(&self, coords: &[u64]) -> Result<Element, GroupError> {
        let e = Element(coords.to_vec());
        self.check(&e)?;
        Ok(e)
    }

    /// Element with coordinates reduced modulo the cyclic orders.
    pub fn element_reduced(&self, coords: &[i64]) -> Element {
        assert_eq!(coords.len(), self.moduli.len(), "coordinate count mismatch");
        Element(
            coords
                .iter()
                .zip(&self.moduli)
                .map(|(&c, &n)| c.rem_euclid(n as i64) as u64)
                .collect(),
        )
    }

    /// The `i`-th canonical generator `e_i` (coordinate `i` equal to one).
    pub fn generator(&self, i: usize) -> Element {
        let mut c = vec![0; self.moduli.len()];
        c[i] = 1;
        Element(c)
    }

    pub fn contains(&self, e: &Element) -> bool {
        e.0.len() == self.moduli.len() && e.0.iter().zip(&self.moduli).all(|(c, n)| c < n)
    }

    fn check(&self, e: &Element) -> Result<(), GroupError> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(GroupError::ForeignElement { coords: e.0.clone(), moduli: self.moduli.clone() })
        }
    }

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(Element(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((x, y), n)| (x + y) % n)
                .collect(),
        ))
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        let nb = self.neg(b)?;
        self.add(a, &nb)
    }

    pub fn neg(&self, a: &Element) -> Result<Element, GroupError> {
        self.check(a)?;
        Ok(Element(a.0.iter().zip(&self.moduli).map(|(x, n)| (n - x) % n).collect()))
    }

    /// `m · a` for any integer `m`.
    pub fn scale(&self, m: i64, a: &Element) -> Result<Element, GroupError> {
        self.check(a)?;
        Ok(Element(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &n)| ((x as i128 * m as i128).rem_euclid(n as i128)) as u64)
                .collect(),
        ))
    }

    /// Least `m >= 1` with `m · a = 0`.
    pub fn order_of(&self, a: &Element) -> Result<u64, GroupError> {
        self.check(a)?;
        Ok(a.0.iter().zip(&self.moduli).fold(1, |acc, (&c, &n)| lcm(acc, n / gcd(n, c))))
    }

    pub fn index_of(&self, a: &Element) -> Result<usize, GroupError> {
        self.check(a)?;
        Ok(self.index_unchecked(&a.0))
    }

    pub(crate) fn index_unchecked(&self, coords: &[u64]) -> usize {
        let mut idx = 0u64;
        let mut weight = 1u64;
        for (c, n) in coords.iter().zip(&self.moduli) {
            idx += c * weight;
            weight *= n;
        }
        idx as usize
    }

    pub fn element_at(&self, index: usize) -> Result<Element, GroupError> {
        if index as u64 >= self.order {
            return Err(GroupError::IndexOutOfRange { index: index as u64, order: self.order });
        }
        Ok(Element(self.coords_unchecked(index)))
    }

    pub(crate) fn coords_unchecked(&self, index: usize) -> Vec<u64> {
        let mut rest = index as u64;
        self.moduli
            .iter()
            .map(|&n| {
                let c = rest % n;
                rest /= n;
                c
            })
            .collect()
    }

    /// All elements in ascending mixed-radix index order.
    pub fn enumerate(&self) -> Elements<'_> {
        Elements { group: self, next: 0 }
    }

    /// Prime-power decomposition together with the coordinatewise CRT
    /// isomorphism and its inverse.
    pub fn refactor_primary(&self) -> PrimaryIso {
        let mut parts = Vec::new();
        for (i, &n) in self.moduli.iter().enumerate() {
            for (p, e) in factorize(n) {
                parts.push((i, p.pow(e)));
            }
        }
        let target = GroupSpec::with_cap(&parts.iter().map(|&(_, q)| q).collect::<Vec<_>>(), u64::MAX)
            .expect("prime powers are valid moduli");
        PrimaryIso { source: self.clone(), target, parts }
    }

    /// An explicit isomorphism onto `other`, if the groups are isomorphic.
    pub fn isomorphism_to(&self, other: &GroupSpec) -> Result<Isomorphism, GroupError> {
        let a = self.refactor_primary();
        let b = other.refactor_primary();
        let not_iso = || GroupError::NotIsomorphic(self.moduli.clone(), other.moduli.clone());
        let qa = a.target.moduli();
        let qb = b.target.moduli();
        if qa.len() != qb.len() {
            return Err(not_iso());
        }
        // permutation[j] = coordinate of `a.target` that feeds coordinate j of `b.target`
        let mut used = vec![false; qa.len()];
        let mut permutation = Vec::with_capacity(qb.len());
        for &q in qb {
            let pos = (0..qa.len()).find(|&i| !used[i] && qa[i] == q).ok_or_else(not_iso)?;
            used[pos] = true;
            permutation.push(pos);
        }
        Ok(Isomorphism { from: a, to: b, permutation })
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.moduli.is_empty() {
            return write!(f, "C_1");
        }
        let parts: Vec<String> = self.moduli.iter().map(|n| format!("C_{n}")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Invariant factors `n_1 | ... | n_r` of `⊕ C_{m_i}`.
fn invariant_factors(moduli: &[u64]) -> Vec<u64> {
    let mut by_prime: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &m in moduli {
        for (p, e) in factorize(m) {
            by_prime.entry(p).or_default().push(p.pow(e));
        }
    }
    let r = by_prime.values().map(Vec::len).max().unwrap_or(0);
    let mut factors = vec![1u64; r];
    for powers in by_prime.values_mut() {
        powers.sort_unstable_by(|a, b| b.cmp(a));
        for (j, q) in powers.iter().enumerate() {
            factors[r - 1 - j] *= q;
        }
    }
    factors
}

/// Iterator over the elements of a group in index order.
pub struct Elements<'a> {
    group: &'a GroupSpec,
    next: u64,
}

impl Iterator for Elements<'_> {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        if self.next >= self.group.order {
            return None;
        }
        let e = Element(self.group.coords_unchecked(self.next as usize));
        self.next += 1;
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.group.order - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Elements<'_> {}

/// A group element as a tuple of residues.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(Vec<u64>);

impl Element {
    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Coordinatewise CRT isomorphism `G -> ⊕ C_{p^a}`.
#[derive(Clone, Debug)]
pub struct PrimaryIso {
    source: GroupSpec,
    target: GroupSpec,
    /// `(source coordinate, prime power)` for each target coordinate.
    parts: Vec<(usize, u64)>,
}

impl PrimaryIso {
    pub fn source(&self) -> &GroupSpec {
        &self.source
    }

    /// The primary form.
    pub fn target(&self) -> &GroupSpec {
        &self.target
    }

    /// Source coordinate each primary coordinate came from.
    pub fn source_coordinate(&self, j: usize) -> usize {
        self.parts[j].0
    }

    pub fn forward(&self, e: &Element) -> Result<Element, GroupError> {
        self.source.check(e)?;
        Ok(Element(self.parts.iter().map(|&(i, q)| e.0[i] % q).collect()))
    }

    pub fn backward(&self, e: &Element) -> Result<Element, GroupError> {
        self.target.check(e)?;
        let mut coords = vec![0u64; self.source.moduli.len()];
        for (i, &n) in self.source.moduli.iter().enumerate() {
            let mut x: u128 = 0;
            for (j, &(src, q)) in self.parts.iter().enumerate() {
                if src != i {
                    continue;
                }
                let m = n / q;
                let inv = mod_inverse(m % q, q).expect("cofactors of a prime power are coprime");
                x = (x + e.0[j] as u128 * m as u128 % n as u128 * inv as u128) % n as u128;
            }
            coords[i] = x as u64;
        }
        Ok(Element(coords))
    }
}

/// Isomorphism between two groups with the same primary decomposition.
#[derive(Clone, Debug)]
pub struct Isomorphism {
    from: PrimaryIso,
    to: PrimaryIso,
    permutation: Vec<usize>,
}

impl Isomorphism {
    pub fn source(&self) -> &GroupSpec {
        self.from.source()
    }

    pub fn target(&self) -> &GroupSpec {
        self.to.source()
    }

    pub fn apply(&self, e: &Element) -> Result<Element, GroupError> {
        let p = self.from.forward(e)?;
        let q = Element(self.permutation.iter().map(|&i| p.0[i]).collect());
        self.to.backward(&q)
    }

    pub fn invert(&self, e: &Element) -> Result<Element, GroupError> {
        let q = self.to.forward(e)?;
        let mut p = vec![0; q.0.len()];
        for (j, &i) in self.permutation.iter().enumerate() {
            p[i] = q.0[j];
        }
        self.from.backward(&Element(p))
    }
}
