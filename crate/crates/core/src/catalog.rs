//! Known exact values and closed-form predictions for `SD_k(G)`.

use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builders::{cyclic_standard_value, triangular_root};
use crate::engine::{Budget, InvariantKind};
use crate::groups::{is_prime, GroupSpec};

const BUILTIN: &str = include_str!("../data/catalog.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Exact,
    LowerBound,
    Prediction,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Exact => "exact",
            Status::LowerBound => "lower_bound",
            Status::Prediction => "prediction",
        })
    }
}

/// One stored value of `SD_k` for a group in invariant-factor form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownValue {
    pub group: Vec<u64>,
    /// Always `"sd"`; other invariants are normalized to it on lookup.
    pub invariant: String,
    /// `None` stands for `k = ∞`.
    pub k: Option<u64>,
    pub value: u64,
    /// Upper end of the range when `status` is `lower_bound`.
    pub value_max: Option<u64>,
    pub status: Status,
    pub provenance: String,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("catalog record for {group:?} is not in invariant-factor form")]
    NotCanonical { group: Vec<u64> },
    #[error("unsupported invariant {0:?} in catalog")]
    Invariant(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub version: u32,
    #[serde(default)]
    pub notes: Vec<String>,
    pub records: Vec<KnownValue>,
}

/// An expected value for a query, adjusted to the queried invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub value: u64,
    pub value_max: Option<u64>,
    pub status: Status,
    pub source: String,
}

impl Expectation {
    /// Whether `computed` is consistent with this expectation.
    pub fn matches(&self, computed: u64) -> bool {
        match self.value_max {
            Some(hi) => (self.value..=hi).contains(&computed),
            None => computed == self.value,
        }
    }
}

/// Rewrites a query as `SD_{k'}` plus an offset: `Ol_k = SD_{k+1}`,
/// `ol_k = SD_{k+1} - 1`, `D = SD_∞`, `d = SD_∞ - 1`.
pub fn normalize(kind: InvariantKind, k: Budget) -> (Budget, i64) {
    let up = |k: Budget| match k {
        Budget::Finite(k) => Budget::Finite(k + 1),
        Budget::Infinite => Budget::Infinite,
    };
    match kind {
        InvariantKind::Sd => (k, 0),
        InvariantKind::Olson => (up(k), 0),
        InvariantKind::LittleOlson => (up(k), -1),
        InvariantKind::Davenport => (Budget::Infinite, 0),
        InvariantKind::SmallDavenport => (Budget::Infinite, -1),
    }
}

fn shift(v: u64, off: i64) -> u64 {
    (v as i64 + off) as u64
}

/// Value of the cyclic construction with `k >= 1` at a prime, exact there.
fn prime_cyclic_value(p: u64, k: u64) -> u64 {
    cyclic_standard_value(p, k, 1)
}

impl Catalog {
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let c: Catalog = serde_json::from_str(text)?;
        for r in &c.records {
            if r.invariant != "sd" {
                return Err(CatalogError::Invariant(r.invariant.clone()));
            }
            let g = GroupSpec::with_cap(&r.group, u64::MAX).map_err(|_| CatalogError::NotCanonical {
                group: r.group.clone(),
            })?;
            if !g.is_canonical() {
                return Err(CatalogError::NotCanonical { group: r.group.clone() });
            }
        }
        Ok(c)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> &'static Catalog {
        static CELL: OnceLock<Catalog> = OnceLock::new();
        CELL.get_or_init(|| Catalog::from_json(BUILTIN).expect("bundled catalog is valid"))
    }

    /// Stored record for `SD_k(G)`, `G` in any presentation.
    pub fn lookup_sd(&self, group: &GroupSpec, k: Budget) -> Option<&KnownValue> {
        let key = group.canonical();
        let k = match k {
            Budget::Finite(k) => Some(k),
            Budget::Infinite => None,
        };
        self.records.iter().find(|r| r.group == key.moduli() && r.k == k)
    }

    /// Stored record for any invariant, normalized to `SD_k`.
    pub fn lookup(&self, group: &GroupSpec, kind: InvariantKind, k: Budget) -> Option<&KnownValue> {
        let (k, _) = normalize(kind, k);
        self.lookup_sd(group, k)
    }

    /// Closed-form value of `SD_k(G)` from the first applicable rule.
    pub fn predict_sd(group: &GroupSpec, k: Budget) -> Option<(u64, Status, &'static str)> {
        let g = group.canonical();
        let dstar = g.dstar();
        let d_is_dstar = g.is_p_group() || g.rank() <= 2;
        if g.is_trivial() {
            return Some((1, Status::Exact, "trivial group"));
        }
        let Budget::Finite(k) = k else {
            return d_is_dstar.then_some((dstar, Status::Exact, "D = D* for p-groups and rank at most 2"));
        };
        let exp = g.exponent();
        let n = g.moduli();
        if g.rank() <= 2 {
            let threshold = if g.is_homocyclic() && n != [2, 2] { exp - 1 } else { exp.saturating_sub(2) };
            if k >= threshold {
                return Some((dstar, Status::Exact, "rank at most 2 with k past the stabilization threshold"));
            }
        }
        if d_is_dstar && g.rank() as u64 + k > exp {
            return Some((dstar, Status::Exact, "r(G) >= exp(G) + 1 - k"));
        }
        if g.is_cyclic() && is_prime(n[0]) {
            let p = n[0];
            if k >= 1 {
                return Some((prime_cyclic_value(p, k), Status::Exact, "prime cyclic, k >= 1"));
            }
            if p >= 5 {
                let t = triangular_root(p + 4);
                let special = (t.saturating_sub(1)..=t + 1).any(|t| {
                    let tri = t * (t + 1) / 2;
                    tri == p + 2 || tri == p + 4
                });
                let ol = prime_cyclic_value(p, 1);
                let v = if special { ol } else { ol - 1 };
                return Some((v, Status::Prediction, "prime cyclic, k = 0: T - 2 / T - 4 rule"));
            }
        }
        if g.rank() == 2 && n[0] == n[1] && n[0] > 6000 && is_prime(n[0]) && k <= 1 {
            let ol = n[0] - 1 + prime_cyclic_value(n[0], 1);
            return Some(if k == 0 {
                (ol - 1, Status::Prediction, "C_p^2 with p > 6000, SD = Ol - 1")
            } else {
                (ol, Status::Prediction, "C_p^2 with p > 6000, Ol = p - 1 + Ol(C_p)")
            });
        }
        if g.is_homocyclic() && d_is_dstar && g.rank() >= 4 && g.rank() as u64 + k >= exp {
            return Some((dstar, Status::Exact, "homocyclic of rank at least 4 with r >= n - k"));
        }
        None
    }

    /// Closed-form value for any invariant.
    pub fn predict(group: &GroupSpec, kind: InvariantKind, k: Budget) -> Option<(u64, Status, &'static str)> {
        let (k, off) = normalize(kind, k);
        Self::predict_sd(group, k).map(|(v, s, why)| (shift(v, off), s, why))
    }

    /// Stored record if present, otherwise an exact prediction.
    pub fn expected(&self, group: &GroupSpec, kind: InvariantKind, k: Budget) -> Option<Expectation> {
        let (_, off) = normalize(kind, k);
        if let Some(r) = self.lookup(group, kind, k) {
            return Some(Expectation {
                value: shift(r.value, off),
                value_max: r.value_max.map(|v| shift(v, off)),
                status: r.status,
                source: format!("catalog: {}", r.provenance),
            });
        }
        match Self::predict(group, kind, k) {
            Some((value, Status::Exact, why)) => {
                Some(Expectation { value, value_max: None, status: Status::Exact, source: format!("rule: {why}") })
            }
            _ => None,
        }
    }

    /// Writes every record as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CatalogError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "invariant", "k", "value", "value_max", "status", "provenance"])?;
        for r in &self.records {
            let group = r.group.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
            let k = r.k.map_or("inf".to_string(), |k| k.to_string());
            let vmax = r.value_max.map_or(String::new(), |v| v.to_string());
            w.write_record([
                group.as_str(),
                &r.invariant,
                &k,
                &r.value.to_string(),
                &vmax,
                &r.status.to_string(),
                &r.provenance,
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: &[u64]) -> GroupSpec {
        GroupSpec::new(m).unwrap()
    }

    #[test]
    fn lookup_examples() {
        let c = Catalog::builtin();
        assert_eq!(c.lookup_sd(&g(&[2, 4]), Budget::Finite(1)).unwrap().value, 4);
        let r = c.lookup_sd(&g(&[7, 7, 7]), Budget::Finite(0)).unwrap();
        assert_eq!((r.value, r.status), (16, Status::Exact));
        assert!(c.lookup_sd(&g(&[9]), Budget::Finite(1)).is_none());
        let r = c.lookup_sd(&g(&[5, 5, 5, 5]), Budget::Finite(0)).unwrap();
        assert_eq!((r.value, r.value_max, r.status), (16, Some(17), Status::LowerBound));
        // Presentation does not matter.
        assert_eq!(c.lookup_sd(&g(&[4, 2]), Budget::Finite(0)).unwrap().value, 4);
        assert_eq!(c.lookup(&g(&[3, 3]), InvariantKind::Olson, Budget::Finite(0)).unwrap().value, 4);
    }

    #[test]
    fn predict_examples() {
        assert_eq!(Catalog::predict_sd(&g(&[13]), Budget::Finite(1)), Some((5, Status::Exact, "prime cyclic, k >= 1")));
        let (v, s, _) = Catalog::predict_sd(&GroupSpec::homocyclic(3, 5).unwrap(), Budget::Finite(0)).unwrap();
        assert_eq!((v, s), (11, Status::Exact));
        let (v, s, _) = Catalog::predict_sd(&g(&[11]), Budget::Finite(0)).unwrap();
        assert_eq!((v, s), (5, Status::Prediction));
        assert_eq!(Catalog::predict_sd(&g(&[23]), Budget::Finite(0)).unwrap().0, 6);
        assert_eq!(Catalog::predict_sd(&g(&[13]), Budget::Finite(0)).unwrap().0, 5);
        assert_eq!(Catalog::predict_sd(&g(&[3, 12]), Budget::Infinite).unwrap().0, 14);
        assert_eq!(Catalog::predict(&g(&[5]), InvariantKind::SmallDavenport, Budget::Infinite).unwrap().0, 4);
        assert!(Catalog::predict_sd(&g(&[6, 6, 6]), Budget::Infinite).is_none());
        assert!(Catalog::predict_sd(&g(&[6007, 6007]), Budget::Finite(0)).is_some());
        assert!(Catalog::predict_sd(&g(&[9]), Budget::Finite(0)).is_none());
    }

    #[test]
    fn records_are_monotone_in_k() {
        let c = Catalog::builtin();
        for r in &c.records {
            let Some(k) = r.k else { continue };
            if let Some(next) = c.records.iter().find(|s| s.group == r.group && s.k == Some(k + 1)) {
                assert!(r.value <= next.value && next.value <= r.value + 1, "{r:?} {next:?}");
            }
        }
    }

    #[test]
    fn predictions_agree_with_records() {
        let c = Catalog::builtin();
        for r in &c.records {
            let grp = GroupSpec::new(&r.group).unwrap();
            let k = r.k.map_or(Budget::Infinite, Budget::Finite);
            if let Some((v, _, why)) = Catalog::predict_sd(&grp, k) {
                let hi = r.value_max.unwrap_or(r.value);
                assert!((r.value..=hi).contains(&v), "{r:?} vs {v} ({why})");
            }
        }
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        Catalog::builtin().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("group,invariant,k,value,value_max,status,provenance\n"));
        assert_eq!(text.lines().count(), Catalog::builtin().records.len() + 1);
        assert!(text.contains("\"5,5,5,5\",sd,0,16,17,lower_bound,"));
    }

    #[test]
    fn rejects_bad_catalog() {
        let bad = r#"{"version":1,"records":[{"group":[4,2],"invariant":"sd","k":0,"value":4,
            "value_max":null,"status":"exact","provenance":"x"}]}"#;
        assert!(matches!(Catalog::from_json(bad), Err(CatalogError::NotCanonical { .. })));
        assert!(Catalog::from_json("{").is_err());
    }
}
