//! Exact zero-sum invariants of finite abelian groups, explicit lower-bound
//! constructions, and certificate verification.

pub mod builders;
pub mod catalog;
pub mod cli;
pub mod engine;
pub mod groups;
pub mod zseq;

pub use engine::{compute, Budget, InvariantKind, InvariantQuery, InvariantResult, SearchConfig};
pub use groups::{Element, GroupError, GroupSpec};
pub use zseq::{verify, CertKind, Certificate, Verdict, ZSeq};
