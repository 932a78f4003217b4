//! Sequences (multisets) over a finite abelian group, their sum functionals,
//! and certificates with an independent verifier.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{Element, GroupError, GroupSpec};

/// A finite multiset of group elements, keyed by mixed-radix index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZSeq {
    group: GroupSpec,
    entries: BTreeMap<usize, u64>,
}

impl ZSeq {
    pub fn new(group: &GroupSpec) -> Self {
        Self { group: group.clone(), entries: BTreeMap::new() }
    }

    pub fn from_elements(group: &GroupSpec, elems: &[Element]) -> Result<Self, GroupError> {
        let mut s = Self::new(group);
        for e in elems {
            s.push(e)?;
        }
        Ok(s)
    }

    /// Builds a sequence from element indices, repeats allowed.
    pub fn from_indices(group: &GroupSpec, indices: &[usize]) -> Result<Self, GroupError> {
        let mut s = Self::new(group);
        for &i in indices {
            s.push_index(i, 1)?;
        }
        Ok(s)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn push(&mut self, e: &Element) -> Result<(), GroupError> {
        self.push_n(e, 1)
    }

    pub fn push_n(&mut self, e: &Element, mult: u64) -> Result<(), GroupError> {
        let i = self.group.index_of(e)?;
        self.push_index(i, mult)
    }

    pub fn push_index(&mut self, index: usize, mult: u64) -> Result<(), GroupError> {
        if index >= self.group.size() {
            return Err(GroupError::IndexOutOfRange { index: index as u64, order: self.group.order() });
        }
        if mult > 0 {
            *self.entries.entry(index).or_insert(0) += mult;
        }
        Ok(())
    }

    /// Removes one copy of `e`; returns whether a copy was present.
    pub fn remove(&mut self, e: &Element) -> bool {
        let Ok(i) = self.group.index_of(e) else {
            return false;
        };
        match self.entries.get_mut(&i) {
            Some(m) if *m > 1 => {
                *m -= 1;
                true
            }
            Some(_) => {
                self.entries.remove(&i);
                true
            }
            None => false,
        }
    }

    /// Concatenation `self · other` over the same group.
    pub fn concat(&self, other: &ZSeq) -> Result<ZSeq, GroupError> {
        if self.group.moduli() != other.group.moduli() {
            return Err(GroupError::NotIsomorphic(self.group.moduli().to_vec(), other.group.moduli().to_vec()));
        }
        let mut out = self.clone();
        for (&i, &m) in &other.entries {
            *out.entries.entry(i).or_insert(0) += m;
        }
        Ok(out)
    }

    pub fn len(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn multiplicity(&self, e: &Element) -> u64 {
        self.group.index_of(e).ok().and_then(|i| self.entries.get(&i).copied()).unwrap_or(0)
    }

    /// `(index, multiplicity)` pairs in ascending index order.
    pub fn index_entries(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.entries.iter().map(|(&i, &m)| (i, m))
    }

    /// `(element, multiplicity)` pairs in ascending index order.
    pub fn entries(&self) -> impl Iterator<Item = (Element, u64)> + '_ {
        self.entries.iter().map(|(&i, &m)| (self.group.element_at(i).expect("stored index is valid"), m))
    }

    /// Sorted index list with repeats.
    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().flat_map(|(&i, &m)| std::iter::repeat_n(i, m as usize)).collect()
    }

    pub fn support(&self) -> Vec<Element> {
        self.entries().map(|(e, _)| e).collect()
    }

    /// Height `h(S)`, zero for the empty sequence.
    pub fn height(&self) -> u64 {
        self.entries.values().copied().max().unwrap_or(0)
    }

    /// Cumulated multiplicity of level `level`.
    pub fn cm(&self, level: u64) -> u64 {
        self.entries.values().map(|&m| m.saturating_sub(level)).sum()
    }

    pub fn sigma(&self) -> Element {
        let g = &self.group;
        let mut acc = g.zero();
        for (e, m) in self.entries() {
            let part = g.scale(m as i64, &e).expect("element of own group");
            acc = g.add(&acc, &part).expect("element of own group");
        }
        acc
    }

    /// Indicator over element indices of the non-empty subsums.
    pub fn subsums(&self) -> Vec<bool> {
        let g = &self.group;
        let n = g.size();
        let mut reach = vec![false; n];
        for (i, m) in self.index_entries() {
            let e = g.element_at(i).expect("stored index is valid");
            for _ in 0..m {
                let before: Vec<usize> = (0..n).filter(|&x| reach[x]).collect();
                reach[i] = true;
                for x in before {
                    let y = g.add(&g.element_at(x).expect("in range"), &e).expect("same group");
                    reach[g.index_unchecked(y.coords())] = true;
                }
            }
        }
        reach
    }

    pub fn is_zero_sumfree(&self) -> bool {
        if self.entries.contains_key(&0) {
            return false;
        }
        !self.subsums()[0]
    }

    /// Non-empty, sums to zero, and removing one copy of any single support
    /// element leaves a zero-sumfree sequence.
    pub fn is_minimal_zero_sum(&self) -> bool {
        let Some((&first, _)) = self.entries.iter().next() else {
            return false;
        };
        if !self.sigma().is_zero() {
            return false;
        }
        let mut rest = self.clone();
        let e = self.group.element_at(first).expect("stored index is valid");
        rest.remove(&e);
        rest.is_zero_sumfree()
    }

    pub fn to_certificate(&self, kind: CertKind, cm_level: u64) -> Certificate {
        Certificate {
            moduli: self.group.moduli().to_vec(),
            entries: self
                .entries()
                .map(|(e, mult)| CertEntry { coords: e.coords().to_vec(), mult })
                .collect(),
            claims: Claims {
                length: self.len(),
                sum_is_zero: self.sigma().is_zero(),
                kind,
                cm_level,
                cm_value: self.cm(cm_level),
            },
        }
    }
}

impl fmt::Display for ZSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "[]");
        }
        let parts: Vec<String> = self
            .entries()
            .map(|(e, m)| if m == 1 { e.to_string() } else { format!("{e}^{m}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// The property a certificate asserts about its sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CertKind {
    #[serde(rename = "zero-sumfree")]
    ZeroSumfree,
    #[serde(rename = "minimal-zero-sum")]
    MinimalZeroSum,
}

impl fmt::Display for CertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertKind::ZeroSumfree => "zero-sumfree",
            CertKind::MinimalZeroSum => "minimal-zero-sum",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertEntry {
    pub coords: Vec<u64>,
    pub mult: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Claims {
    pub length: u64,
    pub sum_is_zero: bool,
    pub kind: CertKind,
    pub cm_level: u64,
    pub cm_value: u64,
}

/// A sequence plus the claims it is meant to witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub moduli: Vec<u64>,
    pub entries: Vec<CertEntry>,
    pub claims: Claims,
}

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("malformed certificate: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown group: {0}")]
    Group(#[from] GroupError),
    #[error("entry {entry} has {got} coordinates, the group has {expected}")]
    CoordCount { entry: usize, got: usize, expected: usize },
    #[error("entry {entry}: coordinate {coord} = {value} is out of range for modulus {modulus}")]
    CoordRange { entry: usize, coord: usize, value: u64, modulus: u64 },
    #[error("entry {entry} has multiplicity 0")]
    ZeroMultiplicity { entry: usize },
}

impl Certificate {
    pub fn from_json(text: &str) -> Result<Self, CertificateError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization cannot fail")
    }

    pub fn length(&self) -> u64 {
        self.claims.length
    }

    /// Rebuilds the sequence after structural validation.
    pub fn to_zseq(&self) -> Result<ZSeq, CertificateError> {
        let group = self.check_structure()?;
        let mut s = ZSeq::new(&group);
        for e in &self.entries {
            s.push_n(&group.element(&e.coords)?, e.mult)?;
        }
        Ok(s)
    }

    fn check_structure(&self) -> Result<GroupSpec, CertificateError> {
        let group = GroupSpec::new(&self.moduli)?;
        for (entry, e) in self.entries.iter().enumerate() {
            if e.coords.len() != self.moduli.len() {
                return Err(CertificateError::CoordCount {
                    entry,
                    got: e.coords.len(),
                    expected: self.moduli.len(),
                });
            }
            for (coord, (&value, &modulus)) in e.coords.iter().zip(&self.moduli).enumerate() {
                if value >= modulus {
                    return Err(CertificateError::CoordRange { entry, coord, value, modulus });
                }
            }
            if e.mult == 0 {
                return Err(CertificateError::ZeroMultiplicity { entry });
            }
        }
        Ok(group)
    }
}

/// Outcome of [`verify`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(Vec<String>),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Recomputes every claim of `cert` from its entries.
///
/// Works directly on coordinate tuples with a hash-set subset-sum closure, so it
/// does not depend on index addressing or on any code used by the search.
pub fn verify(cert: &Certificate) -> Result<Verdict, CertificateError> {
    cert.check_structure()?;
    let moduli = &cert.moduli;
    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for e in &cert.entries {
        *counts.entry(e.coords.clone()).or_insert(0) += e.mult;
    }
    let add = |a: &[u64], b: &[u64]| -> Vec<u64> {
        a.iter().zip(b).zip(moduli).map(|((x, y), n)| (x + y) % n).collect()
    };
    let zero = vec![0u64; moduli.len()];

    let length: u64 = counts.values().sum();
    let mut total = zero.clone();
    for (c, &m) in &counts {
        for _ in 0..m {
            total = add(&total, c);
        }
    }
    let sum_is_zero = total == zero;
    let level = cert.claims.cm_level;
    let cm_value: u64 = counts.values().map(|&m| m.saturating_sub(level)).sum();

    let mut reasons = Vec::new();
    let claims = &cert.claims;
    if claims.length != length {
        reasons.push(format!("length claimed {} recomputed {}", claims.length, length));
    }
    if claims.sum_is_zero != sum_is_zero {
        reasons.push(format!("sum_is_zero claimed {} recomputed {}", claims.sum_is_zero, sum_is_zero));
    }
    if claims.cm_value != cm_value {
        reasons.push(format!("cm_value claimed {} recomputed {}", claims.cm_value, cm_value));
    }

    let hits_zero = |counts: &BTreeMap<Vec<u64>, u64>| -> bool {
        let mut reach: HashSet<Vec<u64>> = HashSet::new();
        for (c, &m) in counts {
            for _ in 0..m {
                let mut next: Vec<Vec<u64>> = reach.iter().map(|r| add(r, c)).collect();
                next.push(c.clone());
                if next.contains(&zero) {
                    return true;
                }
                reach.extend(next);
            }
        }
        false
    };

    match claims.kind {
        CertKind::ZeroSumfree => {
            if hits_zero(&counts) {
                reasons.push("zero-sum subsequence found".to_string());
            }
        }
        CertKind::MinimalZeroSum => {
            if length == 0 {
                reasons.push("empty sequence is not a minimal zero-sum sequence".to_string());
            } else if !sum_is_zero {
                reasons.push("sequence does not sum to zero".to_string());
            } else {
                let mut rest = counts.clone();
                let first = rest.keys().next().cloned().expect("non-empty");
                let m = rest.get_mut(&first).expect("present");
                *m -= 1;
                if *m == 0 {
                    rest.remove(&first);
                }
                if hits_zero(&rest) {
                    reasons.push("proper zero-sum subsequence found".to_string());
                }
            }
        }
    }

    Ok(if reasons.is_empty() { Verdict::Accept } else { Verdict::Reject(reasons) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(n: u64, xs: &[u64]) -> ZSeq {
        let g = GroupSpec::new(&[n]).unwrap();
        let elems: Vec<Element> = xs.iter().map(|&x| g.element(&[x]).unwrap()).collect();
        ZSeq::from_elements(&g, &elems).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert!(cyc(5, &[]).sigma().is_zero());
        assert!(cyc(5, &[1, 1, 1, 1, 1]).sigma().is_zero());
        assert_eq!(cyc(5, &[1, 2, 3]).sigma().coords(), &[1]);
    }

    #[test]
    fn subsums_examples() {
        assert_eq!(cyc(5, &[1, 2]).subsums(), vec![false, true, true, true, false]);
        assert!(cyc(5, &[1, 2, 3]).subsums()[0]);
        assert!(cyc(5, &[]).subsums().iter().all(|&b| !b));
    }

    #[test]
    fn zero_sumfree_examples() {
        assert!(cyc(5, &[1, 2]).is_zero_sumfree());
        assert!(!cyc(5, &[1, 2, 3]).is_zero_sumfree());
        assert!(!cyc(5, &[0, 1]).is_zero_sumfree());
        assert!(cyc(5, &[]).is_zero_sumfree());
    }

    #[test]
    fn minimal_examples() {
        assert!(cyc(5, &[1; 5]).is_minimal_zero_sum());
        assert!(cyc(5, &[0]).is_minimal_zero_sum());
        assert!(!cyc(4, &[1, 1, 3, 3]).is_minimal_zero_sum());
        assert!(!cyc(4, &[]).is_minimal_zero_sum());
        assert!(!cyc(4, &[1, 1]).is_minimal_zero_sum());
    }

    #[test]
    fn cm_and_height() {
        let s = cyc(7, &[1, 1, 1, 2, 2, 3]);
        assert_eq!(s.len(), 6);
        assert_eq!(s.height(), 3);
        assert_eq!(s.cm(0), 6);
        assert_eq!(s.cm(1), 3);
        assert_eq!(s.cm(2), 1);
        assert_eq!(s.cm(3), 0);
        assert_eq!(cyc(7, &[]).height(), 0);
    }

    #[test]
    fn remove_then_push_is_identity() {
        let mut s = cyc(7, &[1, 1, 3]);
        let orig = s.clone();
        let e = s.group().element(&[1]).unwrap();
        assert!(s.remove(&e));
        s.push(&e).unwrap();
        assert_eq!(s, orig);
        let absent = s.group().element(&[4]).unwrap();
        assert!(!s.remove(&absent));
    }

    #[test]
    fn verify_examples() {
        let c = cyc(5, &[1; 5]).to_certificate(CertKind::MinimalZeroSum, 1);
        assert_eq!(c.claims.cm_value, 4);
        assert_eq!(verify(&c).unwrap(), Verdict::Accept);

        let c = cyc(5, &[1, 2, 3]).to_certificate(CertKind::ZeroSumfree, 1);
        assert_eq!(verify(&c).unwrap(), Verdict::Reject(vec!["zero-sum subsequence found".into()]));

        let c = cyc(25, &[5, 5, 10, 1, 6, 11, 16, 21]).to_certificate(CertKind::MinimalZeroSum, 1);
        assert_eq!((c.claims.length, c.claims.cm_value), (8, 1));
        assert!(verify(&c).unwrap().is_accept());
    }

    #[test]
    fn verify_reports_tampered_fields() {
        let mut c = cyc(5, &[1; 5]).to_certificate(CertKind::MinimalZeroSum, 1);
        c.claims.cm_value = 1;
        c.claims.length = 6;
        let Verdict::Reject(r) = verify(&c).unwrap() else { panic!("expected rejection") };
        assert!(r.contains(&"cm_value claimed 1 recomputed 4".to_string()));
        assert!(r.contains(&"length claimed 6 recomputed 5".to_string()));
    }

    #[test]
    fn verify_structural_errors() {
        let mut c = cyc(5, &[1, 2]).to_certificate(CertKind::ZeroSumfree, 1);
        c.entries[0].coords = vec![7];
        assert!(matches!(verify(&c), Err(CertificateError::CoordRange { .. })));
        c.entries[0].coords = vec![1, 1];
        assert!(matches!(verify(&c), Err(CertificateError::CoordCount { .. })));
        c.entries[0].coords = vec![1];
        c.entries[0].mult = 0;
        assert!(matches!(verify(&c), Err(CertificateError::ZeroMultiplicity { .. })));
        c.moduli = vec![1];
        assert!(matches!(verify(&c), Err(CertificateError::Group(_))));
    }

    #[test]
    fn json_roundtrip_and_field_order() {
        let c = cyc(5, &[1, 1, 3]).to_certificate(CertKind::ZeroSumfree, 1);
        let text = c.to_json();
        let pos = |k: &str| text.find(k).unwrap();
        assert!(pos("\"moduli\"") < pos("\"entries\"") && pos("\"entries\"") < pos("\"claims\""));
        assert!(pos("\"length\"") < pos("\"sum_is_zero\""));
        assert!(pos("\"kind\"") < pos("\"cm_level\"") && pos("\"cm_level\"") < pos("\"cm_value\""));
        assert!(text.contains("\"zero-sumfree\""));
        assert_eq!(Certificate::from_json(&text).unwrap(), c);
        assert!(Certificate::from_json(&text[..text.len() / 2]).is_err());
    }
}
