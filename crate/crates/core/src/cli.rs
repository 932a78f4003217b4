//! Command-line front end. [`run`] returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::builders::{self, BoundReport, BuildError};
use crate::catalog::{Catalog, Expectation};
use crate::engine::{self, Budget, InvariantKind, InvariantQuery, SearchConfig};
use crate::groups::GroupSpec;
use crate::zseq::{verify, CertKind, Certificate, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_UNVERIFIED: i32 = 5;

/// Groups larger than this are skipped by `table` unless `--long` is given.
pub const TABLE_ORDER_LIMIT: u64 = 128;

#[derive(Parser, Debug)]
#[command(name = "zerosum", version, about = "Zero-sum invariants of finite abelian groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute an invariant exactly by search.
    Compute(ComputeArgs),
    /// Evaluate constructive lower bounds for SD_k.
    Bound(BoundArgs),
    /// Check a certificate file.
    Verify(VerifyArgs),
    /// Compute a table of SD and Ol values against the catalog.
    Table(TableArgs),
    /// Dump the catalog of known values.
    Catalog(CatalogArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Invariant {
    Davenport,
    SmallDavenport,
    Olson,
    Sd,
    Ol,
}

impl Invariant {
    fn kind(self) -> InvariantKind {
        match self {
            Invariant::Davenport => InvariantKind::Davenport,
            Invariant::SmallDavenport => InvariantKind::SmallDavenport,
            Invariant::Olson => InvariantKind::Olson,
            Invariant::Sd => InvariantKind::Sd,
            Invariant::Ol => InvariantKind::LittleOlson,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Invariant::Davenport => "davenport",
            Invariant::SmallDavenport => "small-davenport",
            Invariant::Olson => "olson",
            Invariant::Sd => "sd",
            Invariant::Ol => "ol",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Cyclic,
    AddCyclic,
    Rank2,
    Rank3,
    Homocyclic,
    #[value(name = "selfridge25k")]
    Selfridge25k,
    Classical,
}

/// Comma-separated cyclic orders.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Moduli(Vec<u64>);

fn parse_moduli(s: &str) -> Result<Moduli, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("bad modulus {t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Moduli)
}

fn parse_budget(s: &str) -> Result<Budget, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(Budget::Infinite);
    }
    s.parse::<u64>().map(Budget::Finite).map_err(|e| format!("expected a number or inf: {e}"))
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    humantime::parse_duration(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct ComputeArgs {
    /// Cyclic orders, e.g. 2,4,4.
    #[arg(long, value_parser = parse_moduli)]
    group: Option<Moduli>,
    #[arg(long, value_enum)]
    invariant: Invariant,
    /// Cumulated-multiplicity budget, a number or `inf`.
    #[arg(long, value_parser = parse_budget, default_value = "0")]
    k: Budget,
    #[arg(long, default_value_t = 1)]
    level: u64,
    /// Worker threads; 1 selects the sequential path.
    #[arg(long)]
    threads: Option<usize>,
    /// Wall-clock limit, e.g. 30s or 5m.
    #[arg(long, value_parser = parse_duration)]
    budget: Option<Duration>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Write the witness certificate to this file.
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long, value_parser = parse_moduli)]
    group: Option<Moduli>,
    #[arg(long, value_parser = parse_budget, default_value = "0")]
    k: Budget,
    #[arg(long, default_value_t = 1)]
    level: u64,
    #[arg(long, value_enum, default_value = "auto")]
    method: Method,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Certificate file.
    #[arg(required_unless_present = "cert")]
    path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    cert: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Explicit group; may be repeated.
    #[arg(long, value_parser = parse_moduli)]
    group: Vec<Moduli>,
    /// Exponents `n` of a homocyclic family C_n^r, e.g. 3 or 2,3,5.
    #[arg(long, value_parser = parse_moduli)]
    exponents: Option<Moduli>,
    /// Rank range of the family, e.g. 1-3.
    #[arg(long, default_value = "1-3")]
    ranks: String,
    /// Restrict to one invariant; by default both sd and olson rows are emitted.
    #[arg(long, value_enum)]
    invariant: Option<Invariant>,
    #[arg(long, value_parser = parse_budget, default_value = "0")]
    k: Budget,
    /// Per-group wall-clock limit.
    #[arg(long, value_parser = parse_duration, default_value = "60s")]
    budget: Duration,
    #[arg(long)]
    threads: Option<usize>,
    /// Also run groups with more than 128 elements.
    #[arg(long)]
    long: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct CatalogArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Only records for this group.
    #[arg(long, value_parser = parse_moduli)]
    group: Option<Moduli>,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Failure carrying its exit code; the message goes to stderr.
#[derive(Debug)]
struct Fail(i32, String);

impl Fail {
    fn usage(msg: impl std::fmt::Display) -> Self {
        Fail(EXIT_USAGE, msg.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(EXIT_USAGE, format!("i/o error: {e}"))
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { out, err };
    let result = match cli.command {
        Command::Compute(a) => cmd_compute(a, &mut io),
        Command::Bound(a) => cmd_bound(a, &mut io),
        Command::Verify(a) => cmd_verify(a, &mut io),
        Command::Table(a) => cmd_table(a, &mut io),
        Command::Catalog(a) => cmd_catalog(a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(io.err, "error: {msg}");
            code
        }
    }
}

fn group_of(moduli: Option<&Moduli>) -> Result<GroupSpec, Fail> {
    match moduli {
        Some(m) if !m.0.is_empty() => GroupSpec::new(&m.0).map_err(Fail::usage),
        _ => Err(Fail::usage("--group is required")),
    }
}

fn config(threads: Option<usize>, budget: Option<Duration>) -> Result<SearchConfig, Fail> {
    let mut cfg = SearchConfig::default();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Fail::usage("--threads must be at least 1"));
        }
        cfg = cfg.with_workers(t);
    }
    if let Some(b) = budget {
        cfg = cfg.with_time_budget(b);
    }
    Ok(cfg)
}

fn write_cert(path: &Path, cert: &Certificate) -> Result<(), Fail> {
    std::fs::write(path, cert.to_json() + "\n")
        .map_err(|e| Fail::usage(format!("cannot write {}: {e}", path.display())))
}

fn budget_json(k: Budget) -> serde_json::Value {
    match k {
        Budget::Finite(k) => serde_json::json!(k),
        Budget::Infinite => serde_json::json!("inf"),
    }
}

#[derive(Serialize)]
struct ComputeReport {
    group: Vec<u64>,
    canonical: Vec<u64>,
    invariant: &'static str,
    k: serde_json::Value,
    level: u64,
    value: u64,
    exact: bool,
    expected: Option<u64>,
    expected_max: Option<u64>,
    expected_status: Option<String>,
    verdict: Option<&'static str>,
    node_count: u64,
    elapsed_ms: u128,
    witness: Option<Certificate>,
}

fn cmd_compute(a: ComputeArgs, io: &mut Io) -> Result<i32, Fail> {
    let group = group_of(a.group.as_ref())?;
    if a.level == 0 {
        return Err(Fail::usage("--level must be at least 1"));
    }
    if a.level != 1 && a.invariant != Invariant::Sd {
        return Err(Fail::usage("--level applies to --invariant sd only"));
    }
    let cfg = config(a.threads, a.budget)?;
    let kind = a.invariant.kind();
    let q = InvariantQuery::new(&group, kind, a.k).with_level(a.level);
    let res = engine::compute(&q, &cfg).map_err(Fail::usage)?;
    let expected: Option<Expectation> =
        if a.level == 1 { Catalog::builtin().expected(&group, kind, a.k) } else { None };
    let verdict = match (&expected, res.exact) {
        (Some(e), true) => Some(if e.matches(res.value) { "MATCH" } else { "MISMATCH" }),
        _ => None,
    };
    if let Some(path) = &a.cert {
        write_cert(path, &res.witness)?;
    }
    let report = ComputeReport {
        group: group.moduli().to_vec(),
        canonical: group.canonical().moduli().to_vec(),
        invariant: a.invariant.name(),
        k: budget_json(a.k),
        level: a.level,
        value: res.value,
        exact: res.exact,
        expected: expected.as_ref().map(|e| e.value),
        expected_max: expected.as_ref().and_then(|e| e.value_max),
        expected_status: expected.as_ref().map(|e| e.status.to_string()),
        verdict,
        node_count: res.node_count,
        elapsed_ms: res.elapsed.as_millis(),
        witness: if a.cert.is_some() { None } else { Some(res.witness.clone()) },
    };
    match a.format {
        Format::Json => writeln!(io.out, "{}", serde_json::to_string_pretty(&report).expect("serializable"))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *io.out);
            w.write_record(["group", "invariant", "k", "value", "exact", "expected", "verdict", "nodes", "elapsed_ms"])
                .and_then(|_| {
                    w.write_record([
                        join(&report.group),
                        report.invariant.to_string(),
                        a.k.to_string(),
                        report.value.to_string(),
                        report.exact.to_string(),
                        report.expected.map_or(String::new(), |v| v.to_string()),
                        report.verdict.unwrap_or("").to_string(),
                        report.node_count.to_string(),
                        report.elapsed_ms.to_string(),
                    ])
                })
                .and_then(|_| w.flush().map_err(csv::Error::from))
                .map_err(Fail::usage)?;
        }
        Format::Human => {
            let out = &mut io.out;
            writeln!(out, "group: {group} (canonical {})", group.canonical())?;
            writeln!(out, "invariant: {} k={} level={}", a.invariant.name(), a.k, a.level)?;
            let tag = if res.exact { "exact" } else { "lower bound, time budget exhausted" };
            writeln!(out, "value: {} ({tag})", res.value)?;
            writeln!(out, "nodes: {}", res.node_count)?;
            writeln!(out, "elapsed: {}", humantime::format_duration(trim(res.elapsed)))?;
            if let Some(e) = &expected {
                let range = e.value_max.map_or(e.value.to_string(), |hi| format!("{}..{hi}", e.value));
                let mark = verdict.unwrap_or("UNCHECKED");
                writeln!(out, "expected: {range} ({}, {}) {mark}", e.status, e.source)?;
            }
            match &a.cert {
                Some(p) => writeln!(out, "witness written to {}", p.display())?,
                None => writeln!(out, "witness:\n{}", res.witness.to_json())?,
            }
        }
    }
    if !res.exact {
        writeln!(io.err, "time budget exhausted; {} is a lower bound", res.value)?;
        return Ok(EXIT_BUDGET);
    }
    if verdict == Some("MISMATCH") {
        return Ok(EXIT_MISMATCH);
    }
    Ok(EXIT_OK)
}

fn trim(d: Duration) -> Duration {
    Duration::from_micros(d.as_micros() as u64)
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn finite_k(k: Budget, group: &GroupSpec) -> u64 {
    match k {
        Budget::Finite(k) => k,
        // SD_k is constant once k reaches |G|.
        Budget::Infinite => group.order(),
    }
}

fn run_method(method: Method, group: &GroupSpec, k: u64, level: u64) -> Result<Vec<BoundReport>, BuildError> {
    let g = group.canonical();
    let n = g.moduli().to_vec();
    let not_applicable = |why: &str| Err(BuildError::Invalid(format!("method does not apply to {g}: {why}")));
    let single = |r: Result<BoundReport, BuildError>| r.map(|r| vec![r]);
    match method {
        Method::Auto => Ok(vec![builders::compose_bounds(&g, k)]),
        Method::Cyclic => {
            if n.len() != 1 {
                return not_applicable("group is not cyclic");
            }
            single(builders::cyclic_standard(n[0], k, level))
        }
        Method::AddCyclic => {
            if n.len() < 2 {
                return not_applicable("needs rank at least 2");
            }
            let h = GroupSpec::new(&n[..n.len() - 1])?;
            let base = builders::compose_bounds(&h, k + 1);
            let Some(cert) = base.certificate else {
                return Err(BuildError::Exhausted(format!("no constructive base over {h}")));
            };
            let last = *n.last().expect("rank >= 2");
            single(builders::add_cyclic(&cert, last, last, k))
        }
        Method::Rank2 => {
            if n.len() != 3 {
                return not_applicable("needs rank 3");
            }
            let w = builders::sd_square_witness(n[0], k)?;
            single(builders::add_rank2_block(&w, n[1], n[2], k))
        }
        Method::Rank3 => {
            if n.len() != 4 {
                return not_applicable("needs rank 4");
            }
            let base = builders::cyclic_standard(n[0], k + 3, 1)?.certificate.expect("constructive");
            let s = base.to_zseq()?;
            let mut heavy: Vec<_> = s.entries().collect();
            heavy.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut triple = Vec::new();
            for (e, m) in &heavy {
                for _ in 0..*m {
                    if triple.len() < 3 {
                        triple.push(e.clone());
                    }
                }
            }
            if triple.len() < 3 {
                return not_applicable("cyclic base shorter than 3");
            }
            single(builders::add_rank3_block(&base, [&triple[0], &triple[1], &triple[2]], [n[1], n[2], n[3]], k))
        }
        Method::Homocyclic => {
            if !g.is_homocyclic() || n.len() < 3 {
                return not_applicable("needs C_n^r with r >= 3");
            }
            single(builders::homocyclic_bound(n[0], n.len() as u64, k))
        }
        Method::Selfridge25k => {
            let j = (n.len() == 1).then(|| (1..).take_while(|j| 25 * j * (j + 1) / 2 <= n[0]).last()).flatten();
            match j {
                Some(j) if 25 * j * (j + 1) / 2 == n[0] => single(builders::selfridge_25k(j)),
                _ => not_applicable("needs C_n with n = 25j(j+1)/2"),
            }
        }
        Method::Classical => {
            if n.len() != 1 || n[0] < 4 {
                return not_applicable("needs C_n with n >= 4");
            }
            let mut v = vec![builders::classical_closed_set(n[0])?];
            v.extend(builders::classical_cyclic_sets(n[0])?);
            Ok(v)
        }
    }
}

#[derive(Serialize)]
struct BoundOutput<'a> {
    group: Vec<u64>,
    canonical: Vec<u64>,
    k: serde_json::Value,
    reports: &'a [BoundReport],
    best: Option<&'a BoundReport>,
}

fn cmd_bound(a: BoundArgs, io: &mut Io) -> Result<i32, Fail> {
    let group = group_of(a.group.as_ref())?;
    if a.level == 0 {
        return Err(Fail::usage("--level must be at least 1"));
    }
    let k = finite_k(a.k, &group);
    let reports = match run_method(a.method, &group, k, a.level) {
        Ok(r) => r,
        Err(BuildError::Invalid(msg)) => return Err(Fail::usage(msg)),
        Err(BuildError::Group(e)) => return Err(Fail::usage(e)),
        Err(e) => return Err(Fail(EXIT_UNVERIFIED, e.to_string())),
    };
    // Minimal zero-sum certificates must respect the requested budget.
    let within = |r: &BoundReport| match &r.certificate {
        Some(c) if c.claims.kind == CertKind::MinimalZeroSum && a.level == 1 => c.claims.cm_value <= k,
        _ => true,
    };
    let best = reports
        .iter()
        .filter(|r| within(r) && r.certificate.as_ref().is_some_and(|c| c.claims.kind == CertKind::MinimalZeroSum))
        .max_by(|x, y| x.bound.cmp(&y.bound).then(y.method.cmp(&x.method)))
        .or_else(|| reports.iter().filter(|r| r.certificate.is_none()).max_by_key(|r| r.bound));
    for r in &reports {
        if let Some(c) = &r.certificate {
            if let Verdict::Reject(reasons) = verify(c).map_err(|e| Fail(EXIT_UNVERIFIED, e.to_string()))? {
                return Err(Fail(EXIT_UNVERIFIED, format!("{}: {}", r.method, reasons.join("; "))));
            }
        }
    }
    if a.method != Method::Classical {
        if let Some(r) = reports.iter().find(|r| !within(r)) {
            let cm = r.certificate.as_ref().map_or(0, |c| c.claims.cm_value);
            return Err(Fail(EXIT_UNVERIFIED, format!("{}: cm_value {cm} exceeds k = {k}", r.method)));
        }
    }
    if let (Some(path), Some(c)) = (&a.cert, best.and_then(|b| b.certificate.as_ref())) {
        write_cert(path, c)?;
    }
    match a.format {
        Format::Json => {
            let o = BoundOutput {
                group: group.moduli().to_vec(),
                canonical: group.canonical().moduli().to_vec(),
                k: budget_json(a.k),
                reports: &reports,
                best,
            };
            writeln!(io.out, "{}", serde_json::to_string_pretty(&o).expect("serializable"))?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *io.out);
            let mut rows = vec![["method".to_string(), "bound".into(), "certified".into(), "trace".into()]];
            for r in &reports {
                rows.push([r.method.clone(), r.bound.to_string(), r.certificate.is_some().to_string(), r.trace.clone()]);
            }
            for row in rows {
                w.write_record(&row).map_err(Fail::usage)?;
            }
            w.flush()?;
        }
        Format::Human => {
            writeln!(io.out, "group: {group} (canonical {}), k = {}", group.canonical(), a.k)?;
            for r in &reports {
                let tag = if r.certificate.is_some() { "verified" } else { "formula" };
                writeln!(io.out, "{}: {} ({tag})", r.method, r.bound)?;
                for line in r.trace.split("; ") {
                    writeln!(io.out, "  {line}")?;
                }
            }
            if let Some(b) = best {
                writeln!(io.out, "best: {} = {}", b.method, b.bound)?;
                match (&a.cert, &b.certificate) {
                    (Some(p), Some(_)) => writeln!(io.out, "certificate written to {}", p.display())?,
                    (None, Some(c)) => writeln!(io.out, "certificate:\n{}", c.to_json())?,
                    _ => {}
                }
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    verdict: &'static str,
    reasons: &'a [String],
}

fn cmd_verify(a: VerifyArgs, io: &mut Io) -> Result<i32, Fail> {
    let path = a.path.or(a.cert).expect("clap requires one");
    let text = std::fs::read_to_string(&path).map_err(|e| Fail::usage(format!("cannot read {}: {e}", path.display())))?;
    let cert = Certificate::from_json(&text).map_err(|e| Fail::usage(format!("malformed certificate: {e}")))?;
    let verdict = verify(&cert).map_err(|e| Fail::usage(format!("malformed certificate: {e}")))?;
    let (name, reasons, code) = match &verdict {
        Verdict::Accept => ("ACCEPT", &[][..], EXIT_OK),
        Verdict::Reject(r) => ("REJECT", &r[..], EXIT_REJECT),
    };
    match a.format {
        Format::Json => {
            let o = VerifyOutput { verdict: name, reasons };
            writeln!(io.out, "{}", serde_json::to_string_pretty(&o).expect("serializable"))?;
        }
        _ => {
            writeln!(io.out, "{name}")?;
            for r in reasons {
                writeln!(io.out, "  {r}")?;
            }
        }
    }
    Ok(code)
}

#[derive(Serialize, Clone, Debug)]
struct TableRow {
    group: String,
    invariant: String,
    computed: Option<u64>,
    expected: Option<String>,
    status: String,
    elapsed_ms: u128,
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>, Fail> {
    let bad = || Fail::usage(format!("bad rank range {s:?}, expected A-B"));
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

fn cmd_table(a: TableArgs, io: &mut Io) -> Result<i32, Fail> {
    let mut groups: Vec<GroupSpec> = Vec::new();
    for m in &a.group {
        groups.push(group_of(Some(m))?);
    }
    if let Some(exps) = &a.exponents {
        for r in parse_range(&a.ranks)? {
            for &n in &exps.0 {
                groups.push(GroupSpec::homocyclic(n, r).map_err(Fail::usage)?);
            }
        }
    }
    if groups.is_empty() {
        return Err(Fail::usage("give --group or --exponents"));
    }
    let invariants = match a.invariant {
        Some(i) => vec![i],
        None => vec![Invariant::Sd, Invariant::Olson],
    };
    let cfg = config(a.threads, Some(a.budget))?;
    let mut rows = Vec::new();
    let mut mismatch = false;
    for g in &groups {
        for &inv in &invariants {
            let kind = inv.kind();
            let expected = Catalog::builtin().expected(g, kind, a.k);
            let exp_text = expected
                .as_ref()
                .map(|e| e.value_max.map_or(e.value.to_string(), |hi| format!("{}..{hi}", e.value)));
            let name = format!("{}(k={})", inv.name(), a.k);
            if g.order() > TABLE_ORDER_LIMIT && !a.long {
                let lb = table_lower_bound(g, kind, a.k);
                rows.push(TableRow {
                    group: g.to_string(),
                    invariant: name,
                    computed: None,
                    expected: exp_text,
                    status: format!("SKIPPED(lower_bound = {lb})"),
                    elapsed_ms: 0,
                });
                continue;
            }
            let q = InvariantQuery::new(g, kind, a.k);
            let res = engine::compute(&q, &cfg).map_err(Fail::usage)?;
            let status = if !res.exact {
                format!("SKIPPED(lower_bound = {})", res.value)
            } else {
                match &expected {
                    Some(e) if e.matches(res.value) => "MATCH".to_string(),
                    Some(_) => {
                        mismatch = true;
                        "MISMATCH".to_string()
                    }
                    None => "COMPUTED".to_string(),
                }
            };
            rows.push(TableRow {
                group: g.to_string(),
                invariant: name,
                computed: res.exact.then_some(res.value),
                expected: exp_text,
                status,
                elapsed_ms: res.elapsed.as_millis(),
            });
        }
    }
    match a.format {
        Format::Json => writeln!(io.out, "{}", serde_json::to_string_pretty(&rows).expect("serializable"))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *io.out);
            w.write_record(["group", "invariant", "computed", "expected", "status", "elapsed"])
                .map_err(Fail::usage)?;
            for r in &rows {
                w.write_record([
                    r.group.clone(),
                    r.invariant.clone(),
                    r.computed.map_or(String::new(), |v| v.to_string()),
                    r.expected.clone().unwrap_or_default(),
                    r.status.clone(),
                    format!("{}ms", r.elapsed_ms),
                ])
                .map_err(Fail::usage)?;
            }
            w.flush()?;
        }
        Format::Human => {
            for r in &rows {
                writeln!(
                    io.out,
                    "{:<16} {:<14} {:>8} {:>8}  {:<28} {}ms",
                    r.group,
                    r.invariant,
                    r.computed.map_or("-".into(), |v| v.to_string()),
                    r.expected.clone().unwrap_or_else(|| "-".into()),
                    r.status,
                    r.elapsed_ms
                )?;
            }
        }
    }
    Ok(if mismatch { EXIT_MISMATCH } else { EXIT_OK })
}

/// Constructive lower bound for a skipped table row.
fn table_lower_bound(g: &GroupSpec, kind: InvariantKind, k: Budget) -> u64 {
    let (k, off) = crate::catalog::normalize(kind, k);
    let k = finite_k(k, g);
    let b = builders::compose_bounds(g, k).bound;
    (b as i64 + off).max(0) as u64
}

fn cmd_catalog(a: CatalogArgs, io: &mut Io) -> Result<i32, Fail> {
    let full = Catalog::builtin();
    let mut cat = full.clone();
    if let Some(m) = &a.group {
        let key = group_of(Some(m))?.canonical();
        cat.records.retain(|r| r.group == key.moduli());
    }
    match a.format {
        Format::Csv => cat.write_csv(&mut *io.out).map_err(Fail::usage)?,
        Format::Json => writeln!(io.out, "{}", serde_json::to_string_pretty(&cat).expect("serializable"))?,
        Format::Human => {
            for r in &cat.records {
                let k = r.k.map_or("inf".to_string(), |k| k.to_string());
                let v = r.value_max.map_or(r.value.to_string(), |hi| format!("{}..{hi}", r.value));
                let g = GroupSpec::new(&r.group).map(|g| g.to_string()).unwrap_or_else(|_| join(&r.group));
                writeln!(io.out, "SD_{k}({g}) = {v} [{}] {}", r.status, r.provenance)?;
            }
            for n in &cat.notes {
                writeln!(io.out, "note: {n}")?;
            }
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("zerosum").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_moduli("2,4, 4").unwrap(), Moduli(vec![2, 4, 4]));
        assert!(parse_moduli("2,x").is_err());
        assert_eq!(parse_budget("inf").unwrap(), Budget::Infinite);
        assert_eq!(parse_budget("3").unwrap(), Budget::Finite(3));
        assert!(parse_budget("-1").is_err());
        assert_eq!(parse_range("1-3").unwrap(), 1..=3);
        assert_eq!(parse_range("2").unwrap(), 2..=2);
        assert!(parse_range("3-1").is_err());
    }

    #[test]
    fn compute_match() {
        let (code, out, _) = run_args(&["compute", "--group", "3,3", "--invariant", "sd", "--k", "1", "--threads", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("value: 4 (exact)") && out.contains("MATCH"), "{out}");
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_args(&["compute", "--group", "1,3", "--invariant", "sd"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["compute", "--invariant", "sd"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["compute", "--group", "3", "--invariant", "bogus"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["compute", "--group", "3", "--invariant", "sd", "--wat"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["bound", "--group", "5,5", "--method", "homocyclic"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn bound_selfridge() {
        let (code, out, _) = run_args(&["bound", "--group", "25", "--k", "1", "--method", "selfridge25k"]);
        assert_eq!(code, 0);
        assert!(out.contains("best: selfridge25k = 8"), "{out}");
    }
}
