//! Exact computation of zero-sum invariants by depth-first branch and bound.
//!
//! Every invariant reduces to finding a longest zero-sumfree sequence `S` under
//! a cumulated-multiplicity budget. In the *plain* formulation the budget
//! applies to `S` itself (`ol_k`), in the *closed* one it applies to the
//! minimal zero-sum sequence `(-σ(S)) S` and the value is `|S| + 1` (`SD_k`).
//!
//! Sequences are enumerated as non-decreasing lists of element indices. A node
//! keeps the subsum set `R = Σ(S)` and its negation `-R` as bitsets; an element
//! `g` may be appended iff `-g ∉ R`, which keeps `S g` zero-sumfree. Preorder is
//! lexicographic order on index lists, so the first maximum found is the
//! lexicographically least one, which is what makes witnesses canonical.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::groups::GroupSpec;
use crate::zseq::{CertKind, Certificate, ZSeq};

/// Largest accepted `split_depth`.
pub const MAX_SPLIT_DEPTH: usize = 6;

const ADD_TABLE_LIMIT: usize = 2048;
const NEG_TABLE_LIMIT: usize = 4096;
const CLOCK_INTERVAL: u64 = 1024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("level must be at least 1")]
    InvalidLevel,
    #[error("split depth {0} exceeds the maximum of {MAX_SPLIT_DEPTH}")]
    SplitDepthTooLarge(usize),
    #[error("worker count must be positive")]
    NoWorkers,
    #[error("symmetry reduction needs all cyclic orders equal, got {0:?}")]
    SymmetryNotApplicable(Vec<u64>),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Which invariant to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InvariantKind {
    /// `d(G)`, the maximal length of a zero-sumfree sequence.
    SmallDavenport,
    /// `D(G)`.
    Davenport,
    /// `ol_k(G)`.
    LittleOlson,
    /// `Ol_k(G) = ol_k(G) + 1`.
    Olson,
    /// `SD_k(G)`, or `SD_(k,ℓ)(G)` when the level is not 1.
    Sd,
}

/// The cumulated-multiplicity allowance `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Budget {
    Finite(u64),
    Infinite,
}

impl Budget {
    fn as_u64(self) -> u64 {
        match self {
            Budget::Finite(k) => k,
            Budget::Infinite => u64::MAX / 4,
        }
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Budget::Finite(k) => write!(f, "{k}"),
            Budget::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantQuery {
    pub group: GroupSpec,
    pub kind: InvariantKind,
    pub k: Budget,
    pub level: u64,
}

impl InvariantQuery {
    pub fn new(group: &GroupSpec, kind: InvariantKind, k: Budget) -> Self {
        Self { group: group.clone(), kind, k, level: 1 }
    }

    pub fn sd(group: &GroupSpec, k: u64) -> Self {
        Self::new(group, InvariantKind::Sd, Budget::Finite(k))
    }

    pub fn olson(group: &GroupSpec, k: u64) -> Self {
        Self::new(group, InvariantKind::Olson, Budget::Finite(k))
    }

    pub fn with_level(mut self, level: u64) -> Self {
        self.level = level;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Symmetry {
    /// On exactly when all cyclic orders are equal.
    #[default]
    Auto,
    On,
    Off,
}

/// Upper bound at which the search may stop early.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Hint {
    /// `D*(G)`-based bound for p-groups and groups of rank at most 2.
    #[default]
    Auto,
    Disabled,
    /// Caller-supplied bound on the reported value; must be a true upper bound.
    Fixed(u64),
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub worker_count: usize,
    pub split_depth: usize,
    pub symmetry: Symmetry,
    pub hint: Hint,
    pub time_budget: Option<Duration>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            worker_count: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            split_depth: 2,
            symmetry: Symmetry::Auto,
            hint: Hint::Auto,
            time_budget: None,
        }
    }
}

impl SearchConfig {
    pub fn sequential() -> Self {
        Self { worker_count: 1, ..Self::default() }
    }

    pub fn with_workers(mut self, n: usize) -> Self {
        self.worker_count = n;
        self
    }

    pub fn with_split_depth(mut self, d: usize) -> Self {
        self.split_depth = d;
        self
    }

    pub fn with_symmetry(mut self, s: Symmetry) -> Self {
        self.symmetry = s;
        self
    }

    pub fn with_hint(mut self, h: Hint) -> Self {
        self.hint = h;
        self
    }

    pub fn with_time_budget(mut self, d: Duration) -> Self {
        self.time_budget = Some(d);
        self
    }
}

#[derive(Clone, Debug)]
pub struct InvariantResult {
    pub value: u64,
    pub witness: Certificate,
    pub node_count: u64,
    pub elapsed: Duration,
    /// False iff the time budget ran out; `value` is then only a lower bound.
    pub exact: bool,
}

/// How the multiplicity budget is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Budget on `S`; value `|S|`.
    Plain,
    /// Budget on `(-σ(S)) S`; value `|S| + 1`.
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub k: Budget,
    pub level: u64,
    pub closure: Closure,
}

/// Result of [`search_zero_sumfree_max`].
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// `|S|` in plain mode, `|S| + 1` in closed mode.
    pub value: u64,
    /// The extremal zero-sumfree sequence `S`.
    pub sequence: ZSeq,
    pub node_count: u64,
    pub elapsed: Duration,
    pub exact: bool,
}

/// A search-tree node handed to one worker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontierState {
    /// The sequence at this node as sorted element indices.
    pub prefix: Vec<usize>,
    /// Whether the subtree below is searched; shallower nodes are only
    /// evaluated as candidates.
    pub expand: bool,
}

/// Computes an invariant exactly, or a lower bound if the time budget runs out.
pub fn compute(q: &InvariantQuery, cfg: &SearchConfig) -> Result<InvariantResult, EngineError> {
    let g = &q.group;
    let (k, closure, plus_one) = match q.kind {
        InvariantKind::SmallDavenport => (Budget::Infinite, Closure::Plain, false),
        InvariantKind::Davenport => (Budget::Infinite, Closure::Closed, false),
        InvariantKind::LittleOlson => (q.k, Closure::Plain, false),
        InvariantKind::Olson => (q.k, Closure::Plain, true),
        InvariantKind::Sd => (q.k, Closure::Closed, false),
    };
    let constraint = Constraint { k, level: q.level, closure };
    let hint = match cfg.hint {
        Hint::Disabled => None,
        Hint::Fixed(h) => Some(if plus_one { h.saturating_sub(1) } else { h }),
        Hint::Auto if g.is_p_group() || g.rank() <= 2 => {
            let dstar = g.dstar();
            Some(match closure {
                Closure::Closed => dstar,
                Closure::Plain => dstar - 1,
            })
        }
        Hint::Auto => None,
    };
    let out = run_search(g, constraint, cfg, hint)?;
    let s = &out.sequence;
    let (value, witness) = if closure == Closure::Closed || plus_one {
        let mut t = s.clone();
        t.push(&g.neg(&s.sigma()).expect("own element")).expect("own element");
        (out.value + plus_one as u64, t.to_certificate(CertKind::MinimalZeroSum, q.level))
    } else {
        (out.value, s.to_certificate(CertKind::ZeroSumfree, q.level))
    };
    Ok(InvariantResult { value, witness, node_count: out.node_count, elapsed: out.elapsed, exact: out.exact })
}

/// Longest zero-sumfree sequence under `constraint`.
pub fn search_zero_sumfree_max(
    group: &GroupSpec,
    constraint: Constraint,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, EngineError> {
    let hint = match cfg.hint {
        Hint::Fixed(h) => Some(h),
        _ => None,
    };
    run_search(group, constraint, cfg, hint)
}

/// All search states at `depth`, preceded in preorder by the shallower nodes.
pub fn split_frontier(
    group: &GroupSpec,
    constraint: Constraint,
    depth: usize,
    symmetry: Symmetry,
) -> Result<Vec<FrontierState>, EngineError> {
    if constraint.level == 0 {
        return Err(EngineError::InvalidLevel);
    }
    let tables = Tables::new(group, symmetry_enabled(group, symmetry)?);
    let params = Params::new(constraint, None);
    let shared = Shared::new(None);
    let mut w = Worker::new(&tables, &params, &shared);
    let mut out = Vec::new();
    w.frontier(depth, &mut out);
    Ok(out)
}

fn symmetry_enabled(group: &GroupSpec, s: Symmetry) -> Result<bool, EngineError> {
    let m = group.moduli();
    let equal = !m.is_empty() && m.iter().all(|&n| n == m[0]);
    match s {
        Symmetry::Auto => Ok(equal),
        Symmetry::Off => Ok(false),
        Symmetry::On if equal => Ok(true),
        Symmetry::On => Err(EngineError::SymmetryNotApplicable(m.to_vec())),
    }
}

fn run_search(
    group: &GroupSpec,
    constraint: Constraint,
    cfg: &SearchConfig,
    hint: Option<u64>,
) -> Result<SearchOutcome, EngineError> {
    let start = Instant::now();
    if constraint.level == 0 {
        return Err(EngineError::InvalidLevel);
    }
    if cfg.split_depth > MAX_SPLIT_DEPTH {
        return Err(EngineError::SplitDepthTooLarge(cfg.split_depth));
    }
    if cfg.worker_count == 0 {
        return Err(EngineError::NoWorkers);
    }
    let tables = Tables::new(group, symmetry_enabled(group, cfg.symmetry)?);
    let params = Params::new(constraint, hint);
    let shared = Shared::new(cfg.time_budget.map(|d| start + d));

    let mut root = Worker::new(&tables, &params, &shared);
    let mut tasks = Vec::new();
    root.frontier(cfg.split_depth, &mut tasks);
    let frontier_nodes = root.nodes;

    let (best, best_seq, nodes) = if cfg.worker_count == 1 {
        let mut w = Worker::new(&tables, &params, &shared);
        for (i, t) in tasks.iter().enumerate() {
            w.run_task(i, t);
            if w.finished || shared.stopped() {
                break;
            }
        }
        (w.best, w.best_seq, w.nodes)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.worker_count)
            .build()
            .map_err(|e| EngineError::Pool(e.to_string()))?;
        let results: Vec<(u64, Option<Vec<usize>>, u64)> = pool.install(|| {
            tasks
                .par_iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut w = Worker::new(&tables, &params, &shared);
                    w.sequential = false;
                    w.run_task(i, t);
                    (w.best, w.best_seq, w.nodes)
                })
                .collect()
        });
        let nodes = results.iter().map(|r| r.2).sum();
        // Tasks are in lexicographic order, so the first maximum is the canonical one.
        let mut best = 0;
        let mut best_seq = None;
        for (v, s, _) in results {
            if s.is_some() && (best_seq.is_none() || v > best) {
                best = v;
                best_seq = s;
            }
        }
        (best, best_seq, nodes)
    };

    let seq = best_seq.unwrap_or_default();
    let sequence = ZSeq::from_indices(group, &seq).expect("indices come from the group");
    Ok(SearchOutcome {
        value: best,
        sequence,
        node_count: nodes + frontier_nodes,
        elapsed: start.elapsed(),
        exact: !shared.timed_out.load(Ordering::Relaxed),
    })
}

/// Precomputed group data shared by all workers.
struct Tables {
    group: GroupSpec,
    n: usize,
    words: usize,
    ord: Vec<u64>,
    neg: Vec<usize>,
    add: Option<Vec<u16>>,
    /// `(order, mask of elements of that order)` for every order above 1.
    classes: Vec<(u64, Vec<u64>)>,
    /// Row `i`: elements `x` with `-x` of index above `i`.
    neg_above: Option<Vec<u64>>,
    /// First-branch representatives `(index, mask of elements of order at most ord(index))`.
    reps: Option<Vec<(usize, Vec<u64>)>>,
    /// `p` when the group is `C_p^r` with `p` prime and symmetry is on.
    flag_prime: Option<u64>,
}

impl Tables {
    fn new(group: &GroupSpec, symmetry: bool) -> Self {
        let n = group.size();
        let words = n.div_ceil(64);
        let mut ord = Vec::with_capacity(n);
        let mut neg = Vec::with_capacity(n);
        for e in group.enumerate() {
            ord.push(group.order_of(&e).expect("own element"));
            neg.push(group.index_unchecked(group.neg(&e).expect("own element").coords()));
        }
        let add = (n <= ADD_TABLE_LIMIT).then(|| {
            let mut t = vec![0u16; n * n];
            for a in 0..n {
                let ca = group.coords_unchecked(a);
                for b in 0..n {
                    let cb = group.coords_unchecked(b);
                    let c: Vec<u64> = ca
                        .iter()
                        .zip(&cb)
                        .zip(group.moduli())
                        .map(|((x, y), m)| (x + y) % m)
                        .collect();
                    t[a * n + b] = group.index_unchecked(&c) as u16;
                }
            }
            t
        });
        let mut orders: Vec<u64> = ord.iter().copied().filter(|&o| o > 1).collect();
        orders.sort_unstable();
        orders.dedup();
        let classes = orders
            .iter()
            .map(|&o| {
                let mut m = vec![0u64; words];
                for (i, &oi) in ord.iter().enumerate() {
                    if oi == o {
                        set(&mut m, i);
                    }
                }
                (o, m)
            })
            .collect();
        let neg_above = (n <= NEG_TABLE_LIMIT).then(|| {
            let mut t = vec![0u64; n * words];
            for last in 0..n {
                for x in 0..n {
                    if neg[x] > last {
                        set(&mut t[last * words..(last + 1) * words], x);
                    }
                }
            }
            t
        });
        let reps = symmetry.then(|| {
            let m = group.moduli()[0];
            let mut divisors: Vec<u64> = (2..=m).filter(|d| m.is_multiple_of(*d)).collect();
            divisors.sort_unstable_by(|a, b| b.cmp(a));
            divisors
                .into_iter()
                .map(|d| {
                    let mut mask = vec![0u64; words];
                    for (i, &oi) in ord.iter().enumerate() {
                        if oi <= d {
                            set(&mut mask, i);
                        }
                    }
                    ((m / d) as usize, mask)
                })
                .collect()
        });
        let m = group.moduli();
        let flag_prime = (symmetry && crate::groups::is_prime(m[0])).then(|| m[0]);
        Self { group: group.clone(), n, words, ord, neg, add, classes, neg_above, reps, flag_prime }
    }

    #[inline]
    fn add(&self, a: usize, b: usize) -> usize {
        match &self.add {
            Some(t) => t[a * self.n + b] as usize,
            None => {
                let g = &self.group;
                let ca = g.coords_unchecked(a);
                let cb = g.coords_unchecked(b);
                let c: Vec<u64> =
                    ca.iter().zip(&cb).zip(g.moduli()).map(|((x, y), m)| (x + y) % m).collect();
                g.index_unchecked(&c)
            }
        }
    }

    fn neg_above_row(&self, last: usize) -> Option<&[u64]> {
        self.neg_above.as_ref().map(|t| &t[last * self.words..(last + 1) * self.words])
    }
}

struct Params {
    k: u64,
    level: u64,
    closed: bool,
    /// Value at which a search may stop.
    hint: Option<u64>,
}

impl Params {
    fn new(c: Constraint, hint: Option<u64>) -> Self {
        Self { k: c.k.as_u64(), level: c.level, closed: c.closure == Closure::Closed, hint }
    }
}

struct Shared {
    best: AtomicU64,
    /// Smallest task index whose subtree reached the hint.
    hint_task: AtomicUsize,
    deadline: Option<Instant>,
    timed_out: AtomicBool,
}

impl Shared {
    fn new(deadline: Option<Instant>) -> Self {
        Self {
            best: AtomicU64::new(0),
            hint_task: AtomicUsize::new(usize::MAX),
            deadline,
            timed_out: AtomicBool::new(false),
        }
    }

    fn stopped(&self) -> bool {
        self.timed_out.load(Ordering::Relaxed)
    }
}

struct Worker<'a> {
    t: &'a Tables,
    p: &'a Params,
    shared: &'a Shared,
    seq: Vec<usize>,
    counts: Vec<u32>,
    sigma: usize,
    cm: u64,
    /// Per-depth subsum bitsets and their negations.
    r: Vec<Vec<u64>>,
    nr: Vec<Vec<u64>>,
    restrict: Option<&'a [u64]>,
    best: u64,
    best_seq: Option<Vec<usize>>,
    nodes: u64,
    task: usize,
    /// Set when this worker must stop: hint reached, superseded, or out of time.
    finished: bool,
    /// Whether non-strict pruning against the shared best is sound.
    sequential: bool,
}

#[inline]
fn set(bits: &mut [u64], i: usize) {
    bits[i >> 6] |= 1 << (i & 63);
}

#[inline]
fn test(bits: &[u64], i: usize) -> bool {
    bits[i >> 6] >> (i & 63) & 1 == 1
}

impl<'a> Worker<'a> {
    fn new(t: &'a Tables, p: &'a Params, shared: &'a Shared) -> Self {
        Self {
            t,
            p,
            shared,
            seq: Vec::new(),
            counts: vec![0; t.n],
            sigma: 0,
            cm: 0,
            r: vec![vec![0; t.words]],
            nr: vec![vec![0; t.words]],
            restrict: None,
            best: 0,
            best_seq: None,
            nodes: 0,
            task: 0,
            finished: false,
            sequential: true,
        }
    }

    fn push(&mut self, g: usize) {
        let d = self.seq.len();
        if self.r.len() <= d + 1 {
            self.r.push(vec![0; self.t.words]);
            self.nr.push(vec![0; self.t.words]);
        }
        let (lo, hi) = self.r.split_at_mut(d + 1);
        let (cur, next) = (&lo[d], &mut hi[0]);
        next.copy_from_slice(cur);
        set(next, g);
        for (w, &word) in cur.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let x = w * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                set(next, self.t.add(g, x));
            }
        }
        let (lo, hi) = self.nr.split_at_mut(d + 1);
        let (ncur, nnext) = (&lo[d], &mut hi[0]);
        nnext.copy_from_slice(ncur);
        for (w, (&a, &b)) in next.iter().zip(cur.iter()).enumerate() {
            let mut fresh = a & !b;
            while fresh != 0 {
                let x = w * 64 + fresh.trailing_zeros() as usize;
                fresh &= fresh - 1;
                set(nnext, self.t.neg[x]);
            }
        }
        self.counts[g] += 1;
        if self.counts[g] as u64 > self.p.level {
            self.cm += 1;
        }
        self.sigma = self.t.add(self.sigma, g);
        self.seq.push(g);
    }

    fn pop(&mut self) {
        let g = self.seq.pop().expect("pop on empty sequence");
        if self.counts[g] as u64 > self.p.level {
            self.cm -= 1;
        }
        self.counts[g] -= 1;
        self.sigma = self.t.add(self.sigma, self.t.neg[g]);
    }

    fn reset(&mut self) {
        while !self.seq.is_empty() {
            self.pop();
        }
        self.restrict = None;
    }

    fn load(&mut self, prefix: &[usize]) {
        self.reset();
        if let (Some(reps), Some(&first)) = (&self.t.reps, prefix.first()) {
            self.restrict = reps.iter().find(|r| r.0 == first).map(|r| r.1.as_slice());
        }
        for &g in prefix {
            self.push(g);
        }
    }

    /// Value of the current node as a witness, if it satisfies the budget.
    fn candidate(&self) -> Option<u64> {
        let d = self.seq.len() as u64;
        if !self.p.closed {
            return Some(d);
        }
        if d == 0 {
            return Some(1);
        }
        let m = self.t.neg[self.sigma];
        let extra = (self.counts[m] as u64 >= self.p.level) as u64;
        (self.cm + extra <= self.p.k).then_some(d + 1)
    }

    /// May another copy of `g` be appended?
    fn can_append(&self, g: usize) -> bool {
        let d = self.seq.len();
        if test(&self.nr[d], g) {
            return false;
        }
        let over = self.counts[g] as u64 + 1 > self.p.level;
        !over || self.cm < self.p.k
    }

    /// Bitset of new elements (index above the last one) that may be appended.
    fn admissible(&self, out: &mut [u64]) {
        let d = self.seq.len();
        let last = self.seq.last().copied().unwrap_or(0);
        let nr = &self.nr[d];
        for (w, o) in out.iter_mut().enumerate() {
            let lo = w * 64;
            let above = if lo + 63 <= last {
                0
            } else if lo > last {
                !0
            } else {
                !0u64 << (last - lo) << 1
            };
            let mut m = above & !nr[w];
            if let Some(r) = self.restrict {
                m &= r[w];
            }
            *o = m;
        }
        let tail = self.t.n % 64;
        if tail != 0 {
            out[self.t.words - 1] &= (1u64 << tail) - 1;
        }
        out[0] &= !1;
    }

    /// Upper bound on the value reachable below the current node.
    fn bound(&self, adm: &[u64]) -> u64 {
        let d = self.seq.len();
        let level = self.p.level;
        let r = &self.r[d];
        let last = self.seq.last().copied().unwrap_or(0);
        let pair_row = self.t.neg_above_row(last);
        let mut free = 0u64;
        let mut extra = 0u64;
        for (o, mask) in &self.t.classes {
            let mut count = 0u64;
            let mut paired = 0u64;
            for w in 0..self.t.words {
                let a = adm[w] & mask[w];
                count += a.count_ones() as u64;
                if *o > 2 {
                    if let Some(row) = pair_row {
                        paired += (a & !r[w] & row[w]).count_ones() as u64;
                    }
                }
            }
            let units = count - paired / 2;
            let f = level.min(o - 1);
            free += units * f;
            extra += units * (o - 1 - f);
        }
        let (lf, le) = self.last_copies();
        self.finish_bound(free + lf, extra + le)
    }

    /// Free and budgeted copies of the last element that may still be appended.
    fn last_copies(&self) -> (u64, u64) {
        let d = self.seq.len();
        match self.seq.last() {
            Some(&last) if !test(&self.nr[d], last) => {
                let v = self.counts[last] as u64;
                let o = self.t.ord[last];
                let level = self.p.level;
                (level.min(o - 1).saturating_sub(v), (o - 1).saturating_sub(v.max(level)))
            }
            _ => (0, 0),
        }
    }

    fn finish_bound(&self, free: u64, extra: u64) -> u64 {
        let d = self.seq.len();
        let rem = self.p.k - self.cm;
        let reach: u64 = self.r[d].iter().map(|w| w.count_ones() as u64).sum();
        let room = self.t.n as u64 - 1 - reach;
        let add = (free + extra.min(rem)).min(room);
        d as u64 + add + self.p.closed as u64
    }

    /// Tighter bound from a greedy clique cover of the conflict graph on
    /// admissible elements: `x` and `y` conflict when `x + y ∈ -Σ(S) ∪ {0}`,
    /// so at most one member of each clique can be appended.
    fn clique_bound(&self, adm: &[u64], cliques: &mut Vec<Vec<usize>>) -> u64 {
        let d = self.seq.len();
        let nr = &self.nr[d];
        let level = self.p.level;
        let mut used = 0;
        let mut weights: Vec<(u64, u64)> = Vec::new();
        for w in 0..self.t.words {
            let mut word = adm[w];
            while word != 0 {
                let x = w * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                let nx = self.t.neg[x];
                let slot = cliques[..used].iter().position(|c| {
                    c.iter().all(|&y| {
                        let s = self.t.add(x, y);
                        s == 0 || test(nr, s) || y == nx
                    })
                });
                let ox = self.t.ord[x];
                let wx = (level.min(ox - 1), (ox - 1).saturating_sub(level));
                match slot {
                    Some(c) => {
                        cliques[c].push(x);
                        weights[c].0 = weights[c].0.max(wx.0);
                        weights[c].1 = weights[c].1.max(wx.1);
                    }
                    None => {
                        if cliques.len() == used {
                            cliques.push(Vec::new());
                        }
                        cliques[used].clear();
                        cliques[used].push(x);
                        weights.push(wx);
                        used += 1;
                    }
                }
            }
        }
        let free = weights.iter().map(|w| w.0).sum::<u64>();
        let extra = weights.iter().map(|w| w.1).sum::<u64>();
        let (lf, le) = self.last_copies();
        self.finish_bound(free + lf, extra + le)
    }

    /// Records the current node as a candidate; returns true if the search may stop.
    fn offer(&mut self) -> bool {
        if let Some(v) = self.candidate() {
            if v > self.best || self.best_seq.is_none() {
                self.best = v;
                self.best_seq = Some(self.seq.clone());
                self.shared.best.fetch_max(v, Ordering::Relaxed);
                if self.p.hint.is_some_and(|h| v >= h) {
                    self.shared.hint_task.fetch_min(self.task, Ordering::Relaxed);
                    return true;
                }
            }
        }
        false
    }

    fn tick(&mut self) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(CLOCK_INTERVAL) {
            if self.shared.hint_task.load(Ordering::Relaxed) < self.task {
                self.finished = true;
            }
            if let Some(deadline) = self.shared.deadline {
                if Instant::now() >= deadline {
                    self.shared.timed_out.store(true, Ordering::Relaxed);
                }
            }
            if self.shared.stopped() {
                self.finished = true;
            }
        }
    }

    fn dfs(&mut self) {
        self.tick();
        if self.finished {
            return;
        }
        if self.offer() {
            self.finished = true;
            return;
        }
        let mut adm = vec![0u64; self.t.words];
        self.admissible(&mut adm);
        let global = self.shared.best.load(Ordering::Relaxed);
        let pruned = |opt: u64| {
            let beaten = if self.sequential { opt <= global } else { opt < global };
            opt <= self.best || beaten
        };
        if pruned(self.bound(&adm)) {
            return;
        }
        let mut cliques = Vec::new();
        if pruned(self.clique_bound(&adm, &mut cliques)) {
            return;
        }
        if let Some(&last) = self.seq.last() {
            if self.can_append(last) {
                self.push(last);
                self.dfs();
                self.pop();
                if self.finished {
                    return;
                }
            }
        }
        if self.seq.is_empty() {
            if let Some(reps) = &self.t.reps {
                for (g, mask) in reps {
                    if !test(&adm, *g) {
                        continue;
                    }
                    self.restrict = Some(mask.as_slice());
                    self.push(*g);
                    self.dfs();
                    self.pop();
                    self.restrict = None;
                    if self.finished {
                        return;
                    }
                }
                return;
            }
        }
        let span = self.span_end();
        for w in 0..self.t.words {
            let mut word = adm[w];
            while word != 0 {
                let g = w * 64 + word.trailing_zeros() as usize;
                word &= word - 1;
                if g >= span {
                    if g == span {
                        self.push(g);
                        self.dfs();
                        self.pop();
                    }
                    return;
                }
                self.push(g);
                self.dfs();
                self.pop();
                if self.finished {
                    return;
                }
            }
        }
    }

    /// Children of the current node in preorder, ignoring bounds.
    fn children(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(&last) = self.seq.last() {
            if self.can_append(last) {
                out.push(last);
            }
        }
        let mut adm = vec![0u64; self.t.words];
        self.admissible(&mut adm);
        if self.seq.is_empty() {
            if let Some(reps) = &self.t.reps {
                return reps.iter().map(|r| r.0).filter(|&g| test(&adm, g)).collect();
            }
        }
        let span = self.span_end();
        out.extend((0..self.t.n).filter(|&g| test(&adm, g) && g <= span));
        out
    }

    /// In `C_p^r` with symmetry on, the sequence so far lies in the span of
    /// `e_1, ..., e_j`, which is exactly the index range below `p^j`; an element
    /// outside it can be moved to `e_{j+1}` (index `p^j`) by an automorphism
    /// fixing `e_1, ..., e_j`, so only that one is branched on. Elements up to
    /// the returned index are eligible.
    fn span_end(&self) -> usize {
        match self.t.flag_prime {
            Some(p) => {
                let top = self.seq.last().copied().unwrap_or(0);
                let mut span = 1usize;
                while span <= top {
                    span *= p as usize;
                }
                span
            }
            None => usize::MAX,
        }
    }

    fn frontier(&mut self, depth: usize, out: &mut Vec<FrontierState>) {
        self.nodes += 1;
        if self.seq.len() == depth {
            out.push(FrontierState { prefix: self.seq.clone(), expand: true });
            return;
        }
        out.push(FrontierState { prefix: self.seq.clone(), expand: false });
        for g in self.children() {
            let root = self.seq.is_empty();
            if root {
                if let Some(reps) = &self.t.reps {
                    self.restrict = reps.iter().find(|r| r.0 == g).map(|r| r.1.as_slice());
                }
            }
            self.push(g);
            self.frontier(depth, out);
            self.pop();
            if root {
                self.restrict = None;
            }
        }
    }

    fn run_task(&mut self, index: usize, task: &FrontierState) {
        self.task = index;
        if self.shared.hint_task.load(Ordering::Relaxed) < index || self.shared.stopped() {
            self.finished = true;
            return;
        }
        self.load(&task.prefix);
        if task.expand {
            self.dfs();
        } else {
            self.nodes += 1;
            if self.offer() {
                self.finished = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: &[u64]) -> GroupSpec {
        GroupSpec::new(m).unwrap()
    }

    fn value(m: &[u64], kind: InvariantKind, k: Budget) -> u64 {
        let r = compute(&InvariantQuery::new(&g(m), kind, k), &SearchConfig::sequential()).unwrap();
        assert!(r.exact);
        assert!(crate::zseq::verify(&r.witness).unwrap().is_accept());
        r.value
    }

    #[test]
    fn compute_examples() {
        assert_eq!(value(&[3, 3], InvariantKind::Sd, Budget::Finite(1)), 4);
        assert_eq!(value(&[3, 3], InvariantKind::Sd, Budget::Finite(0)), 3);
        assert_eq!(value(&[5], InvariantKind::Sd, Budget::Finite(1)), 3);
        assert_eq!(value(&[5], InvariantKind::Sd, Budget::Finite(0)), 2);
        assert_eq!(value(&[3, 3], InvariantKind::Davenport, Budget::Infinite), 5);
        assert_eq!(value(&[3, 3], InvariantKind::SmallDavenport, Budget::Infinite), 4);
        assert_eq!(value(&[3, 3], InvariantKind::Olson, Budget::Finite(0)), 4);
        assert_eq!(value(&[3, 3], InvariantKind::LittleOlson, Budget::Finite(0)), 3);
        let q = InvariantQuery::sd(&g(&[4]), 0).with_level(2);
        assert_eq!(compute(&q, &SearchConfig::sequential()).unwrap().value, 3);
    }

    #[test]
    fn trivial_group() {
        let r = compute(
            &InvariantQuery::new(&GroupSpec::trivial(), InvariantKind::Davenport, Budget::Infinite),
            &SearchConfig::sequential(),
        )
        .unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(r.witness.to_zseq().unwrap().indices(), vec![0]);
    }

    #[test]
    fn search_examples() {
        let plain = Constraint { k: Budget::Finite(0), level: 1, closure: Closure::Plain };
        let closed = Constraint { closure: Closure::Closed, ..plain };
        let cfg = SearchConfig::sequential();
        let c5 = search_zero_sumfree_max(&g(&[5]), plain, &cfg).unwrap();
        assert_eq!(c5.value, 2);
        assert_eq!(c5.sequence.indices(), vec![1, 2]);
        assert_eq!(search_zero_sumfree_max(&g(&[2, 2, 2]), plain, &cfg).unwrap().value, 3);
        assert_eq!(search_zero_sumfree_max(&g(&[7]), closed, &cfg).unwrap().value, 3);
    }

    #[test]
    fn frontier_examples() {
        let c = Constraint { k: Budget::Finite(1), level: 1, closure: Closure::Closed };
        let root = split_frontier(&g(&[3, 3]), c, 0, Symmetry::Off).unwrap();
        assert_eq!(root, vec![FrontierState { prefix: vec![], expand: true }]);
        let expanded = |s: &[FrontierState]| s.iter().filter(|s| s.expand).count();
        let off = split_frontier(&g(&[3, 3]), c, 1, Symmetry::Off).unwrap();
        assert_eq!(expanded(&off), 8);
        let on = split_frontier(&g(&[3, 3]), c, 1, Symmetry::On).unwrap();
        assert_eq!(expanded(&on), 1);
        assert!(split_frontier(&g(&[2, 4]), c, 1, Symmetry::On).is_err());
    }

    #[test]
    fn config_errors() {
        let q = InvariantQuery::sd(&g(&[3]), 0);
        assert!(compute(&q.clone().with_level(0), &SearchConfig::sequential()).is_err());
        assert!(compute(&q, &SearchConfig::sequential().with_split_depth(7)).is_err());
        assert!(compute(&q, &SearchConfig::default().with_workers(0)).is_err());
    }

    #[test]
    fn workers_and_depth_agree() {
        for m in [&[3, 3][..], &[2, 4], &[7], &[2, 2, 2]] {
            let q = InvariantQuery::sd(&g(m), 1);
            let a = compute(&q, &SearchConfig::sequential().with_split_depth(0)).unwrap();
            let b = compute(&q, &SearchConfig::default().with_workers(4).with_split_depth(2)).unwrap();
            assert_eq!((a.value, &a.witness), (b.value, &b.witness), "{m:?}");
        }
    }

    #[test]
    fn budget_abort_is_inexact() {
        let q = InvariantQuery::olson(&GroupSpec::homocyclic(5, 4).unwrap(), 0);
        let r = compute(&q, &SearchConfig::sequential().with_time_budget(Duration::from_millis(50))).unwrap();
        assert!(!r.exact);
        assert!(crate::zseq::verify(&r.witness).unwrap().is_accept());
    }
}
