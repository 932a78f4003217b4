//! Explicit lower-bound constructions. Every constructive method returns a
//! certificate that has already passed [`verify`].

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::groups::{factorize, Element, GroupError, GroupSpec};
use crate::zseq::{verify, CertKind, Certificate, CertificateError, Verdict, ZSeq};

/// A lower bound together with how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub method: String,
    pub bound: u64,
    pub trace: String,
    /// Present for constructive methods; its length equals `bound`.
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("{method}: certificate rejected: {}", reasons.join("; "))]
    Rejected { method: String, reasons: Vec<String> },
    #[error("{0}: no verifiable candidate found")]
    Exhausted(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

fn invalid(msg: impl Into<String>) -> BuildError {
    BuildError::Invalid(msg.into())
}

fn certify(method: &str, seq: &ZSeq, kind: CertKind, level: u64) -> Result<Certificate, BuildError> {
    let cert = seq.to_certificate(kind, level);
    match verify(&cert)? {
        Verdict::Accept => Ok(cert),
        Verdict::Reject(reasons) => Err(BuildError::Rejected { method: method.to_string(), reasons }),
    }
}

fn certify_budget(method: &str, seq: &ZSeq, max_cm: u64) -> Result<Certificate, BuildError> {
    let cert = certify(method, seq, CertKind::MinimalZeroSum, 1)?;
    if cert.claims.cm_value > max_cm {
        return Err(BuildError::Rejected {
            method: method.to_string(),
            reasons: vec![format!("cm_value {} exceeds budget {max_cm}", cert.claims.cm_value)],
        });
    }
    Ok(cert)
}

fn report(method: &str, cert: Certificate, trace: String) -> BoundReport {
    BoundReport { method: method.to_string(), bound: cert.claims.length, trace, certificate: Some(cert) }
}

/// Largest `d >= 0` with `d(d+1)/2 <= x`, i.e. `⌊(-1 + √(1 + 8x)) / 2⌋`.
pub fn triangular_root(x: u64) -> u64 {
    let mut d = ((1 + 8 * x as u128).isqrt() as u64).saturating_sub(1) / 2;
    while (d + 1) * (d + 2) / 2 <= x {
        d += 1;
    }
    while d * (d + 1) / 2 > x {
        d -= 1;
    }
    d
}

/// Length of [`cyclic_standard`]`(n, k, level)` in closed form.
pub fn cyclic_standard_value(n: u64, k: u64, level: u64) -> u64 {
    if k + level >= n {
        return n;
    }
    let m = n - k;
    let d = triangular_root(m / level);
    k + level * d + (m - level * d * (d + 1) / 2) / (d + 1)
}

/// Sequence over `C_n` from `(residue, multiplicity)` pairs.
fn cyclic_seq(n: u64, terms: &[(u64, u64)]) -> Result<ZSeq, BuildError> {
    let g = GroupSpec::new(&[n])?;
    let mut s = ZSeq::new(&g);
    for &(x, m) in terms {
        s.push_n(&g.element(&[x % n])?, m)?;
    }
    Ok(s)
}

fn residues(s: &ZSeq) -> Vec<(u64, u64)> {
    s.entries().map(|(e, m)| (e.coords()[0], m)).collect()
}

/// Standard minimal zero-sum sequence over `C_n` with `cm_level <= k`.
pub fn cyclic_standard(n: u64, k: u64, level: u64) -> Result<BoundReport, BuildError> {
    if n < 2 || level == 0 {
        return Err(invalid(format!("cyclic_standard needs n >= 2 and level >= 1, got n={n}, level={level}")));
    }
    const METHOD: &str = "cyclic";
    if k + level >= n {
        let seq = cyclic_seq(n, &[(1, n)])?;
        let cert = certify(METHOD, &seq, CertKind::MinimalZeroSum, level)?;
        return Ok(report(METHOD, cert, format!("k + level = {} >= n = {n}: e^{n}", k + level)));
    }
    let m = n - k;
    let mut d = 0;
    while level * (d + 1) * (d + 2) / 2 <= m {
        d += 1;
    }
    let d2 = (m - level * d * (d + 1) / 2) / (d + 1);
    let mut terms: Vec<u64> = vec![1; k as usize];
    for _ in 0..level {
        terms.extend(1..=d);
    }
    terms.extend(std::iter::repeat_n(d + 1, d2 as usize));
    terms.sort_unstable();
    let j = terms.pop().expect("at least one term");
    let rest: u64 = terms.iter().sum();
    terms.push((n - rest) % n);
    let pairs: Vec<(u64, u64)> = terms.iter().map(|&t| (t, 1)).collect();
    let seq = cyclic_seq(n, &pairs)?;
    let cert = certify(METHOD, &seq, CertKind::MinimalZeroSum, level)?;
    let trace = format!(
        "d = {d}, d' = {d2}: e^{k} (prod_(i<={d}) ie)^{level} ({}e)^{d2}, largest term {j}e replaced by {}e; \
         k + level*d + d' = {}",
        d + 1,
        (n - rest) % n,
        k + level * d + d2
    );
    Ok(report(METHOD, cert, trace))
}

/// Index arithmetic over a group, with coordinates cached.
struct Arith {
    group: GroupSpec,
    coords: Vec<Vec<u64>>,
}

impl Arith {
    fn new(group: &GroupSpec) -> Self {
        let coords = (0..group.size()).map(|i| group.coords_unchecked(i)).collect();
        Self { group: group.clone(), coords }
    }

    fn add(&self, a: usize, b: usize) -> usize {
        let c: Vec<u64> = self.coords[a]
            .iter()
            .zip(&self.coords[b])
            .zip(self.group.moduli())
            .map(|((x, y), n)| (x + y) % n)
            .collect();
        self.group.index_unchecked(&c)
    }

    fn neg(&self, a: usize) -> usize {
        let c: Vec<u64> = self.coords[a].iter().zip(self.group.moduli()).map(|(x, n)| (n - x) % n).collect();
        self.group.index_unchecked(&c)
    }

    fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }
}

/// `count` distinct elements, in index order, summing to `target`.
fn distinct_indices(ar: &Arith, target: usize, count: usize) -> Option<Vec<usize>> {
    let n = ar.group.size();
    if count == 0 {
        return (target == 0).then(Vec::new);
    }
    let mut chosen = Vec::with_capacity(count);
    fn rec(ar: &Arith, n: usize, from: usize, left: usize, rem: usize, chosen: &mut Vec<usize>) -> bool {
        if left == 1 {
            if rem >= from {
                chosen.push(rem);
                return true;
            }
            return false;
        }
        // Need `left` distinct indices at or above `from`.
        for x in from..=n - left {
            chosen.push(x);
            if rec(ar, n, x + 1, left - 1, ar.sub(rem, x), chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    rec(ar, n, 0, count, target, &mut chosen).then_some(chosen)
}

/// A squarefree sequence of `count` elements summing to `target`, or `None`
/// when no such set exists.
pub fn sum_of_distinct(group: &GroupSpec, target: &Element, count: u64) -> Result<Option<ZSeq>, BuildError> {
    let n = group.order();
    if count > n {
        return Err(invalid(format!("count {count} exceeds |G| = {n}")));
    }
    let ar = Arith::new(group);
    let t = group.index_of(target)?;
    let found = if 2 * count > n {
        let full = (0..group.size()).fold(0, |acc, i| ar.add(acc, i));
        distinct_indices(&ar, ar.sub(full, t), (n - count) as usize).map(|comp| {
            let mut skip = vec![false; group.size()];
            for i in comp {
                skip[i] = true;
            }
            (0..group.size()).filter(|&i| !skip[i]).collect::<Vec<_>>()
        })
    } else {
        distinct_indices(&ar, t, count as usize)
    };
    Ok(found.map(|idx| ZSeq::from_indices(group, &idx).expect("indices of the group")))
}

/// Offsets in `h` for a block of `(class, multiplicity)` pairs: as distinct as
/// possible within each class, summing to `target`. `allow_repeat` permits one
/// extra coincidence when the sum cannot be reached otherwise.
fn lift_offsets(
    h: &GroupSpec,
    ar: &Arith,
    classes: &[(u64, u64)],
    target: usize,
    allow_repeat: bool,
) -> Option<Vec<Vec<usize>>> {
    let size = h.size();
    let mut offsets: Vec<Vec<usize>> =
        classes.iter().map(|&(_, v)| (0..v as usize).map(|i| i % size).collect()).collect();
    let total = offsets.iter().flatten().fold(0, |acc, &x| ar.add(acc, x));
    let delta = ar.sub(target, total);
    if delta == 0 {
        return Some(offsets);
    }
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by_key(|&c| classes[c].1);
    for &c in &order {
        let v = classes[c].1 as usize;
        if v == 1 {
            offsets[c][0] = ar.add(offsets[c][0], delta);
            return Some(offsets);
        }
        if v < size {
            let cur = offsets[c].iter().fold(0, |acc, &x| ar.add(acc, x));
            let want = ar.add(cur, delta);
            if let Some(set) = distinct_indices(ar, want, v) {
                offsets[c] = set;
                return Some(offsets);
            }
        }
    }
    if allow_repeat {
        let c = *order.last()?;
        offsets[c][0] = ar.add(offsets[c][0], delta);
        return Some(offsets);
    }
    None
}

/// Lifts the minimal zero-sum sequence `t` over `C_q` to `h ⊕ C_q` with
/// offsets summing to some `h_0 ∈ supp(base)`, and appends `h_0^{-1} base`.
fn lift_join(
    method: &str,
    base: &ZSeq,
    q: u64,
    t: &[(u64, u64)],
    max_cm: u64,
) -> Result<ZSeq, BuildError> {
    let h = base.group().clone();
    let ar = Arith::new(&h);
    let mut moduli = h.moduli().to_vec();
    moduli.push(q);
    let target = GroupSpec::new(&moduli)?;
    let mut h0s: Vec<(usize, u64)> = base.index_entries().collect();
    h0s.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut last_err = None;
    for allow_repeat in [false, true] {
        for &(h0, _) in &h0s {
            let Some(offsets) = lift_offsets(&h, &ar, t, h0, allow_repeat) else {
                continue;
            };
            let mut seq = ZSeq::new(&target);
            for (&(res, _), offs) in t.iter().zip(&offsets) {
                for &o in offs {
                    let mut c = ar.coords[o].clone();
                    c.push(res % q);
                    seq.push(&target.element(&c)?)?;
                }
            }
            for (i, m) in base.index_entries() {
                let m = if i == h0 { m - 1 } else { m };
                let mut c = ar.coords[i].clone();
                c.push(0);
                seq.push_n(&target.element(&c)?, m)?;
            }
            match certify_budget(method, &seq, max_cm) {
                Ok(_) => return Ok(seq),
                Err(e) => last_err = Some(e),
            }
        }
    }
    Err(last_err.unwrap_or_else(|| BuildError::Exhausted(method.to_string())))
}

fn base_sequence(base: &Certificate, what: &str) -> Result<ZSeq, BuildError> {
    if base.claims.kind != CertKind::MinimalZeroSum {
        return Err(invalid(format!("{what}: base certificate must claim a minimal zero-sum sequence")));
    }
    if let Verdict::Reject(reasons) = verify(base)? {
        return Err(BuildError::Rejected { method: format!("{what} (base)"), reasons });
    }
    Ok(base.to_zseq()?)
}

/// Extends a minimal zero-sum sequence over `H` to `H ⊕ C_n`, adding `m - 1`
/// terms; the result has `cm <= k + δ` with `δ = max(0, m - |H| + 1)`.
pub fn add_cyclic(base: &Certificate, n: u64, m: u64, k: u64) -> Result<BoundReport, BuildError> {
    const METHOD: &str = "add-cyclic";
    let b = base_sequence(base, METHOD)?;
    let h = b.group().clone();
    if h.order() < 2 {
        return Err(invalid("add-cyclic needs a base group with at least two elements"));
    }
    if n < 2 || m < 2 || m > n {
        return Err(invalid(format!("add-cyclic needs n >= 2 and 2 <= m <= n, got n={n}, m={m}")));
    }
    if b.cm(1) > k + 1 {
        return Err(invalid(format!("base has cm {} above k + 1 = {}", b.cm(1), k + 1)));
    }
    let delta = (m + 1).saturating_sub(h.order());
    let t: Vec<(u64, u64)> = if m == n { vec![(1, m)] } else { vec![(1, m - 1), (n - m + 1, 1)] };
    let t: Vec<(u64, u64)> = t.into_iter().filter(|&(_, v)| v > 0).collect();
    let seq = lift_join(METHOD, &b, n, &t, k + delta)?;
    let cert = certify_budget(METHOD, &seq, k + delta)?;
    let trace = format!(
        "SD_{}({h}+C_{n}) >= SD_{}({h}) + m - 1 = {} + {} (delta = {delta})",
        k + delta,
        k + 1,
        b.len(),
        m - 1
    );
    Ok(report(METHOD, cert, trace))
}

/// A minimal zero-sum sequence with two distinct removable elements.
#[derive(Clone, Debug)]
pub struct SdSquareWitness {
    seq: ZSeq,
    g: Element,
    h: Element,
}

impl SdSquareWitness {
    pub fn new(seq: ZSeq, g: Element, h: Element) -> Result<Self, BuildError> {
        if g == h {
            return Err(invalid("removable pair must consist of distinct elements"));
        }
        if seq.multiplicity(&g) == 0 || seq.multiplicity(&h) == 0 {
            return Err(invalid("removable pair must lie in the support"));
        }
        if !seq.is_minimal_zero_sum() {
            return Err(invalid("sequence is not a minimal zero-sum sequence"));
        }
        Ok(Self { seq, g, h })
    }

    pub fn seq(&self) -> &ZSeq {
        &self.seq
    }

    pub fn pair(&self) -> (&Element, &Element) {
        (&self.g, &self.h)
    }

    /// `cm((gh)^{-1} A)`.
    pub fn reduced_cm(&self) -> u64 {
        let mut r = self.seq.clone();
        r.remove(&self.g);
        r.remove(&self.h);
        r.cm(1)
    }
}

/// Witness over `C_n` for the rank-two block, with removable pair `(e, 2e)`.
pub fn sd_square_witness(n: u64, k: u64) -> Result<SdSquareWitness, BuildError> {
    if n < 3 {
        return Err(invalid(format!("sd_square_witness needs n >= 3, got {n}")));
    }
    let mut terms: Vec<u64> = vec![1, 2];
    if k >= n - 3 {
        terms.extend(std::iter::repeat_n(1, (n - 3) as usize));
    } else {
        let l = triangular_root(n - 3 - k);
        terms.extend(std::iter::repeat_n(1, k as usize));
        terms.extend(1..l);
        let partial: u64 = terms.iter().sum();
        terms.push(n - partial % n);
    }
    let pairs: Vec<(u64, u64)> = terms.iter().map(|&t| (t, 1)).collect();
    let seq = cyclic_seq(n, &pairs)?;
    let g = seq.group().element(&[1])?;
    let h = seq.group().element(&[2 % n])?;
    SdSquareWitness::new(seq, g, h)
}

fn embed(base: &[u64], extra: &[i64], moduli: &[u64]) -> Vec<u64> {
    let k = base.len();
    let mut c = base.to_vec();
    for (i, &x) in extra.iter().enumerate() {
        c.push(x.rem_euclid(moduli[k + i] as i64) as u64);
    }
    c
}

fn check_block_params(g: &GroupSpec, ns: &[u64], what: &str) -> Result<(), BuildError> {
    if g.exponent() < 3 {
        return Err(invalid(format!("{what} needs exp(G) >= 3, got {}", g.exponent())));
    }
    for &n in ns {
        if n < 3 || n > g.order() + 1 {
            return Err(invalid(format!("{what}: cyclic order {n} outside [3, |G| + 1 = {}]", g.order() + 1)));
        }
    }
    Ok(())
}

fn distinct_with_sum(g: &GroupSpec, target: &Element, count: u64, what: &str) -> Result<Vec<Element>, BuildError> {
    let s = sum_of_distinct(g, target, count)?
        .ok_or_else(|| BuildError::Exhausted(format!("{what}: no {count} distinct elements summing to {target}")))?;
    Ok(s.support())
}

/// Adds two cyclic components to `G` at once.
pub fn add_rank2_block(base: &SdSquareWitness, n1: u64, n2: u64, k: u64) -> Result<BoundReport, BuildError> {
    const METHOD: &str = "rank2";
    let g = base.seq.group().clone();
    check_block_params(&g, &[n1, n2], METHOD)?;
    if base.reduced_cm() > k {
        return Err(invalid(format!("cm((gh)^-1 A) = {} exceeds k = {k}", base.reduced_cm())));
    }
    let (gg, hh) = (&base.g, &base.h);
    let s1 = distinct_with_sum(&g, gg, n1 - 2, METHOD)?;
    let s2 = distinct_with_sum(&g, &g.zero(), n2 - 2, METHOD)?;
    let mut moduli = g.moduli().to_vec();
    moduli.extend([n1, n2]);
    let target = GroupSpec::new(&moduli)?;
    let mut seq = ZSeq::new(&target);
    let mut put = |c: &Element, extra: [i64; 2]| -> Result<(), BuildError> {
        seq.push(&target.element(&embed(c.coords(), &extra, &moduli))?)?;
        Ok(())
    };
    for s in &s1 {
        put(s, [1, 0])?;
    }
    for s in &s2 {
        put(s, [0, 1])?;
    }
    let hmg = g.sub(hh, gg)?;
    put(&g.zero(), [1, 1])?;
    put(&hmg, [1, 1])?;
    put(&g.zero(), [1, -1])?;
    put(gg, [-1, 1])?;
    let mut rest = base.seq.clone();
    rest.remove(gg);
    rest.remove(hh);
    for (e, m) in rest.entries() {
        for _ in 0..m {
            put(&e, [0, 0])?;
        }
    }
    let cert = certify_budget(METHOD, &seq, k)?;
    let trace = format!("|A| + (n1 - 1) + (n2 - 1) = {} + {} + {}", base.seq.len(), n1 - 1, n2 - 1);
    Ok(report(METHOD, cert, trace))
}

/// Adds three cyclic components to `G` at once, removing `g1 g2 g3` from `base`.
pub fn add_rank3_block(
    base: &Certificate,
    triple: [&Element; 3],
    ns: [u64; 3],
    k: u64,
) -> Result<BoundReport, BuildError> {
    const METHOD: &str = "rank3";
    let b = base_sequence(base, METHOD)?;
    let g = b.group().clone();
    check_block_params(&g, &ns, METHOD)?;
    if b.len() < 3 {
        return Err(invalid("rank3 needs a base of length at least 3"));
    }
    let mut rest = b.clone();
    for t in triple {
        if !rest.remove(t) {
            return Err(invalid(format!("{t} is not available in the base sequence")));
        }
    }
    if rest.cm(1) > k {
        return Err(invalid(format!("cm((g1 g2 g3)^-1 A) = {} exceeds k = {k}", rest.cm(1))));
    }
    let [g1, g2, g3] = triple;
    let g12 = g.add(g1, g2)?;
    let neg12 = g.neg(&g12)?;
    let s1 = distinct_with_sum(&g, g1, ns[0] - 2, METHOD)?;
    let s2 = distinct_with_sum(&g, &neg12, ns[1] - 2, METHOD)?;
    let s3 = distinct_with_sum(&g, &g.add(&neg12, g3)?, ns[2] - 2, METHOD)?;
    let mut moduli = g.moduli().to_vec();
    moduli.extend(ns);
    let target = GroupSpec::new(&moduli)?;
    let mut seq = ZSeq::new(&target);
    let mut put = |c: &Element, extra: [i64; 3]| -> Result<(), BuildError> {
        seq.push(&target.element(&embed(c.coords(), &extra, &moduli))?)?;
        Ok(())
    };
    for s in &s1 {
        put(s, [1, 0, 0])?;
    }
    for s in &s2 {
        put(s, [0, 1, 0])?;
    }
    for s in &s3 {
        put(s, [0, 0, 1])?;
    }
    let z = g.zero();
    put(&z, [1, 0, 1])?;
    put(&z, [1, 0, -1])?;
    put(g2, [1, 1, 0])?;
    put(&g12, [-1, 1, 0])?;
    put(&g12, [0, 1, 1])?;
    put(&z, [0, -1, 1])?;
    for (e, m) in rest.entries() {
        for _ in 0..m {
            put(&e, [0, 0, 0])?;
        }
    }
    let cert = certify_budget(METHOD, &seq, k)?;
    let trace = format!(
        "|A| - 3 + n1 + n2 + n3 = {} - 3 + {} + {} + {}",
        b.len(),
        ns[0],
        ns[1],
        ns[2]
    );
    Ok(report(METHOD, cert, trace))
}

/// Three elements to remove from `s` so that the remainder has the least `cm`.
fn heaviest_triple(s: &ZSeq) -> Option<[Element; 3]> {
    let mut counts: Vec<(Element, u64)> = s.entries().collect();
    let mut out = Vec::new();
    for _ in 0..3 {
        let best = counts.iter_mut().filter(|c| c.1 > 0).max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))?;
        best.1 -= 1;
        out.push(best.0.clone());
    }
    out.try_into().ok()
}

/// Closed-form value of `SD_{k+r-1}(C_n) + (r - 1)(n - 1)` using the cyclic
/// construction, or the rank-three expression for `r = 3`.
pub fn homocyclic_formula(n: u64, r: u64, k: u64) -> u64 {
    let dstar = r * (n - 1) + 1;
    if r == 3 {
        let x = n.saturating_sub(3 + k);
        let t = triangular_root(x);
        let loss = 1u64.max((n as i64 - k as i64 - 2 - t as i64).max(0) as u64);
        return dstar - loss;
    }
    let x = n.saturating_sub(k + r - 1);
    dstar - x.saturating_sub(triangular_root(x))
}

/// Lower bound for `SD_k(C_n^r)`, `r >= 3`, by the rank-two or rank-three block
/// followed by repeated cyclic extensions.
pub fn homocyclic_bound(n: u64, r: u64, k: u64) -> Result<BoundReport, BuildError> {
    const METHOD: &str = "homocyclic";
    if n < 3 || r < 3 {
        return Err(invalid(format!("homocyclic_bound needs n >= 3 and r >= 3, got n={n}, r={r}")));
    }
    let formula = homocyclic_formula(n, r, k);
    if r == 3 {
        let w = sd_square_witness(n, k)?;
        let rep = add_rank2_block(&w, n, n, k)?;
        let trace = format!(
            "rank-2 block on A over C_{n} of length {}: {}; closed form {formula}",
            w.seq.len(),
            rep.trace
        );
        return Ok(BoundReport { method: METHOD.into(), trace, ..rep });
    }
    let core_k = k + r - 4;
    let cyc = cyclic_standard(n, core_k + 3, 1)?;
    let base = cyc.certificate.expect("cyclic construction is constructive");
    let b = base.to_zseq()?;
    let triple = heaviest_triple(&b).ok_or_else(|| invalid("cyclic base shorter than 3"))?;
    let mut rep = add_rank3_block(&base, [&triple[0], &triple[1], &triple[2]], [n, n, n], core_k)?;
    let mut steps = vec![format!("rank-3 block on SD_{}(C_{n}) base of length {}: {}", core_k + 3, b.len(), rep.bound)];
    for j in 5..=r {
        let cert = rep.certificate.take().expect("constructive");
        rep = add_cyclic(&cert, n, n, k + r - j)?;
        steps.push(format!("add C_{n}: {}", rep.bound));
    }
    let trace = format!("{}; closed form {formula}", steps.join(", "));
    Ok(BoundReport { method: METHOD.into(), trace, ..rep })
}

/// The sequence `(me)^2 (2me) Π_{j<5} Π_{i<=k} (jm + i)e` over `C_n`,
/// `n = 25k(k+1)/2`, `m = n/5`: minimal zero-sum, length `3 + 5k`, `cm = 1`.
pub fn selfridge_25k(k: u64) -> Result<BoundReport, BuildError> {
    const METHOD: &str = "selfridge25k";
    if k < 1 {
        return Err(invalid("selfridge25k needs k >= 1"));
    }
    let n = 25 * k * (k + 1) / 2;
    let m = n / 5;
    let mut terms = vec![(m, 2), (2 * m, 1)];
    for j in 0..5 {
        for i in 1..=k {
            terms.push((j * m + i, 1));
        }
    }
    let seq = cyclic_seq(n, &terms)?;
    let cert = certify(METHOD, &seq, CertKind::MinimalZeroSum, 1)?;
    let trace = format!("n = {n}, m = {m}: length 3 + 5k = {}", 3 + 5 * k);
    Ok(report(METHOD, cert, trace))
}

fn classical_form(n: u64, second: bool) -> Result<(ZSeq, u64), BuildError> {
    let budget = if second { n + 1 } else { n - 1 };
    let mut k = triangular_root(budget);
    loop {
        let terms: Vec<u64> = if second {
            let mut t = vec![n - 2, 1];
            t.extend(3..=k);
            t
        } else {
            (1..=k).collect()
        };
        let mut distinct = terms.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() == terms.len() {
            let pairs: Vec<(u64, u64)> = terms.iter().map(|&t| (t, 1)).collect();
            let seq = cyclic_seq(n, &pairs)?;
            if seq.is_zero_sumfree() {
                return Ok((seq, k));
            }
        }
        k -= 1;
    }
}

/// The two classical zero-sumfree sets over `C_n`: `Π_{i<=k} ie` and
/// `(-2e) e Π_{3<=i<=k} ie`, each with `k` maximal.
pub fn classical_cyclic_sets(n: u64) -> Result<[BoundReport; 2], BuildError> {
    if n < 4 {
        return Err(invalid(format!("classical_cyclic_sets needs n >= 4, got {n}")));
    }
    let mut out = Vec::new();
    for (second, method, rule) in [(false, "classical-1", "k(k+1)/2 <= n - 1"), (true, "classical-2", "k(k+1)/2 <= n + 1")]
    {
        let (seq, k) = classical_form(n, second)?;
        let cert = certify(method, &seq, CertKind::ZeroSumfree, 1)?;
        let trace = format!("k = {k} ({rule}); zero-sumfree set of size {}", seq.len());
        out.push(report(method, cert, trace));
    }
    Ok(out.try_into().expect("two reports"))
}

/// `(-σ(S)) S` for the larger classical set `S`: a minimal zero-sum sequence of
/// length `|S| + 1`. Over `C_11` this is `(-2e) e (3e) (4e) (5e)`.
pub fn classical_closed_set(n: u64) -> Result<BoundReport, BuildError> {
    const METHOD: &str = "classical-closed";
    if n < 4 {
        return Err(invalid(format!("classical_closed_set needs n >= 4, got {n}")));
    }
    let mut best: Option<BoundReport> = None;
    for second in [true, false] {
        let (mut seq, _) = classical_form(n, second)?;
        let g = seq.group().clone();
        seq.push(&g.neg(&seq.sigma())?)?;
        let cert = certify(METHOD, &seq, CertKind::MinimalZeroSum, 1)?;
        let cm = cert.claims.cm_value;
        let r = report(METHOD, cert, format!("closure of a classical set, cm = {cm}"));
        let better = match &best {
            None => true,
            Some(b) => {
                let bc = b.certificate.as_ref().map_or(u64::MAX, |c| c.claims.cm_value);
                (cm, std::cmp::Reverse(r.bound)) < (bc, std::cmp::Reverse(b.bound))
            }
        };
        if better {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one form"))
}

/// The sequence from the rank-three block with `A = e^n` over `C_n`, written
/// over `C_n^4` with the base coordinate last; length `4n - 3`.
pub fn remark_sequence(n: u64) -> Result<Certificate, BuildError> {
    const METHOD: &str = "remark";
    if n < 3 {
        return Err(invalid(format!("remark_sequence needs n >= 3, got {n}")));
    }
    let base = certify(METHOD, &cyclic_seq(n, &[(1, n)])?, CertKind::MinimalZeroSum, 1)?;
    let cn = GroupSpec::new(&[n])?;
    let e = cn.element(&[1])?;
    let rep = add_rank3_block(&base, [&e, &e, &e], [n, n, n], n)?;
    let s = rep.certificate.expect("constructive").to_zseq()?;
    let g4 = GroupSpec::homocyclic(n, 4)?;
    let mut out = ZSeq::new(&g4);
    for (el, m) in s.entries() {
        let c = el.coords();
        out.push_n(&g4.element(&[c[1], c[2], c[3], c[0]])?, m)?;
    }
    let cert = certify(METHOD, &out, CertKind::MinimalZeroSum, 1)?;
    if cert.claims.length != g4.dstar() {
        return Err(BuildError::Rejected {
            method: METHOD.into(),
            reasons: vec![format!("length {} differs from D* = {}", cert.claims.length, g4.dstar())],
        });
    }
    Ok(cert)
}

/// Closed-form bound for groups of rank at least 3 from choosing the smallest
/// admissible split index `t`.
pub fn general_rank_formula(group: &GroupSpec, k: u64) -> Option<(u64, usize)> {
    let inv = group.canonical();
    let n = inv.moduli();
    let r = n.len();
    if r < 3 {
        return None;
    }
    let t = (2..=r).find(|&t| {
        (t + 1..=r).all(|s| {
            let prod = n[..s - 1].iter().try_fold(1u64, |a, &x| a.checked_mul(x)).unwrap_or(u64::MAX);
            n[s - 1] < prod
        })
    })?;
    let nt = n[t - 1];
    let x = (nt + 2).saturating_sub(k + r as u64);
    let loss = x.saturating_sub(triangular_root(x));
    Some((group.dstar() - loss, t))
}

fn map_seq(seq: &ZSeq, target: &GroupSpec) -> Result<ZSeq, BuildError> {
    if seq.group().moduli() == target.moduli() {
        return Ok(seq.clone());
    }
    let iso = seq.group().isomorphism_to(target)?;
    let mut out = ZSeq::new(target);
    for (e, m) in seq.entries() {
        out.push_n(&iso.apply(&e)?, m)?;
    }
    Ok(out)
}

/// Constructive bounds for one group, memoized over canonical forms.
struct Composer {
    memo: HashMap<(Vec<u64>, u64), Option<(ZSeq, String)>>,
}

impl Composer {
    /// Every constructive method applicable to the canonical group `g`, with
    /// its certificate sequence over `g`.
    fn candidates(&mut self, g: &GroupSpec, k: u64) -> Vec<(String, Result<ZSeq, BuildError>, String)> {
        let mut out: Vec<(String, Result<ZSeq, BuildError>, String)> = Vec::new();
        let mut push = |name: &str, r: Result<BoundReport, BuildError>, target: &GroupSpec| {
            let seq = r.and_then(|rep| {
                let cert = rep.certificate.clone().ok_or_else(|| BuildError::Exhausted(name.into()))?;
                let s = map_seq(&cert.to_zseq()?, target)?;
                Ok((s, rep.trace))
            });
            match seq {
                Ok((s, trace)) => out.push((name.to_string(), Ok(s), trace)),
                Err(e) => out.push((name.to_string(), Err(e), String::new())),
            }
        };
        if g.is_trivial() {
            let s = ZSeq::from_indices(g, &[0]).expect("zero is an element");
            return vec![("trivial".into(), Ok(s), "the sequence (0)".into())];
        }
        let n = g.moduli();
        let r = n.len();
        if r == 1 {
            let order = n[0];
            push("cyclic", cyclic_standard(order, k, 1), g);
            if k >= 1 {
                if let Some(j) = (1..=order).take_while(|j| 25 * j * (j + 1) / 2 <= order).find(|j| 25 * j * (j + 1) / 2 == order) {
                    push("selfridge25k", selfridge_25k(j), g);
                }
            }
            if order >= 4 {
                push("classical-closed", classical_closed_set(order), g);
            }
        }
        if g.is_homocyclic() && r >= 3 && n[0] >= 3 {
            push("homocyclic", homocyclic_bound(n[0], r as u64, k), g);
        } else if r == 3 && n[0] >= 3 && n[1] <= n[0] + 1 && n[2] <= n[0] + 1 {
            let rep = sd_square_witness(n[0], k).and_then(|w| add_rank2_block(&w, n[1], n[2], k));
            push("rank2", rep, g);
        } else if r == 4 && n[0] >= 3 && n[1..].iter().all(|&x| x <= n[0] + 1) {
            let rep = cyclic_standard(n[0], k + 3, 1).and_then(|c| {
                let cert = c.certificate.expect("constructive");
                let b = cert.to_zseq()?;
                let t = heaviest_triple(&b).ok_or_else(|| invalid("base shorter than 3"))?;
                add_rank3_block(&cert, [&t[0], &t[1], &t[2]], [n[1], n[2], n[3]], k)
            });
            push("rank3", rep, g);
        }
        for (name, res, trace) in self.splits(g, k) {
            out.push((name, res, trace));
        }
        out
    }

    /// Splits `G ≅ H ⊕ K` along primary coordinates with `K` cyclic, combining
    /// a cyclic sequence over `K` of level `|H|` with the best sequence over `H`.
    fn splits(&mut self, g: &GroupSpec, k: u64) -> Vec<(String, Result<ZSeq, BuildError>, String)> {
        let primary = g.primary_moduli();
        let mut by_prime: Vec<(u64, Vec<u64>)> = Vec::new();
        for q in primary {
            let p = factorize(q)[0].0;
            match by_prime.iter_mut().find(|e| e.0 == p) {
                Some(e) => e.1.push(q),
                None => by_prime.push((p, vec![q])),
            }
        }
        for e in &mut by_prime {
            e.1.sort_unstable();
            e.1.dedup();
        }
        // Each prime contributes nothing or one distinct prime power to K.
        let mut choices: Vec<Vec<u64>> = vec![Vec::new()];
        for (_, powers) in &by_prime {
            let mut next = Vec::new();
            for c in &choices {
                next.push(c.clone());
                for &q in powers {
                    let mut d = c.clone();
                    d.push(q);
                    next.push(d);
                }
            }
            choices = next;
        }
        let mut out = Vec::new();
        for kpart in choices.into_iter().filter(|c| !c.is_empty()) {
            let mut rest = g.primary_moduli();
            for q in &kpart {
                let pos = rest.iter().position(|x| x == q).expect("chosen from the list");
                rest.remove(pos);
            }
            if rest.is_empty() {
                continue;
            }
            let h = GroupSpec::with_cap(&rest, u64::MAX).expect("prime powers").canonical();
            let q: u64 = kpart.iter().product();
            let hsize = h.order();
            for k2 in 0..=(k + 1).min(hsize + 1) {
                let k1 = k - k2.saturating_sub(1);
                let name = format!("split C_{q} over {h} (k1={k1}, k2={k2})");
                let res = self.split_one(g, &h, q, k1, k2, k);
                match res {
                    Ok(Some((s, trace))) => out.push((name, Ok(s), trace)),
                    Ok(None) => {}
                    Err(e) => out.push((name, Err(e), String::new())),
                }
            }
        }
        out
    }

    fn split_one(
        &mut self,
        g: &GroupSpec,
        h: &GroupSpec,
        q: u64,
        k1: u64,
        k2: u64,
        k: u64,
    ) -> Result<Option<(ZSeq, String)>, BuildError> {
        let Some((t2, t2_method)) = self.best(h, k2) else {
            return Ok(None);
        };
        let t = cyclic_standard(q, k1, h.order())?;
        let tseq = t.certificate.as_ref().expect("constructive").to_zseq()?;
        let joined = lift_join("split", &t2, q, &residues(&tseq), k)?;
        let mapped = map_seq(&joined, g)?;
        let trace = format!(
            "SD_({k1},{})(C_{q}) + SD_{k2}({h}) - 1 = {} + {} - 1 [{t2_method}]",
            h.order(),
            tseq.len(),
            t2.len()
        );
        Ok(Some((mapped, trace)))
    }

    /// Longest verified sequence over the canonical group `g` with `cm <= k`.
    fn best(&mut self, g: &GroupSpec, k: u64) -> Option<(ZSeq, String)> {
        let key = (g.moduli().to_vec(), k);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut best: Option<(ZSeq, String)> = None;
        for (name, res, _) in self.candidates(g, k) {
            let Ok(s) = res else { continue };
            if s.cm(1) > k || !s.is_minimal_zero_sum() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((b, bn)) => s.len() > b.len() || (s.len() == b.len() && name < *bn),
            };
            if better {
                best = Some((s, name));
            }
        }
        self.memo.insert(key, best.clone());
        best
    }
}

/// Best lower bound for `SD_k(G)` over all applicable methods; the trace lists
/// the value of every method tried.
pub fn compose_bounds(group: &GroupSpec, k: u64) -> BoundReport {
    let g = group.canonical();
    let mut composer = Composer { memo: HashMap::new() };
    let mut lines = Vec::new();
    let mut best: Option<BoundReport> = None;
    let consider = |rep: BoundReport, best: &mut Option<BoundReport>| {
        let better = match best {
            None => true,
            Some(b) => {
                (rep.bound, rep.certificate.is_some(), std::cmp::Reverse(&rep.method))
                    > (b.bound, b.certificate.is_some(), std::cmp::Reverse(&b.method))
            }
        };
        if better {
            *best = Some(rep);
        }
    };
    for (name, res, trace) in composer.candidates(&g, k) {
        match res.and_then(|s| certify_budget(&name, &s, k)) {
            Ok(cert) => {
                lines.push(format!("{name}: {} ({trace})", cert.claims.length));
                consider(report(&name, cert, trace), &mut best);
            }
            Err(e) => lines.push(format!("{name}: failed ({e})")),
        }
    }
    if let Some((value, t)) = general_rank_formula(&g, k) {
        lines.push(format!("rank formula (t = {t}): {value}"));
        consider(
            BoundReport {
                method: "rank-formula".into(),
                bound: value,
                trace: format!("D*(G) minus the cyclic deficit at t = {t}"),
                certificate: None,
            },
            &mut best,
        );
    }
    let mut rep = best.unwrap_or(BoundReport {
        method: "none".into(),
        bound: 1,
        trace: String::new(),
        certificate: None,
    });
    rep.trace = format!("best {} = {}; {}", rep.method, rep.bound, lines.join("; "));
    rep
}
