//! Finite-domain variables, a trailed constraint store and the propagation
//! fixpoint.

mod domain;
mod store;

pub use domain::Domain;
pub use store::{
    Domains, Mark, Propagation, Propagator, PropagatorId, Store, VarId, DEFAULT_RANGE,
};

use thiserror::Error;

/// A filter emptied a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("inconsistency")]
pub struct Inconsistent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FdError {
    #[error("invalid range {lo}..{hi}")]
    InvalidRange { lo: i64, hi: i64 },
    #[error("domain {lo}..{hi} leaves the value range {min}..{max}")]
    OutOfRange {
        lo: i64,
        hi: i64,
        min: i64,
        max: i64,
    },
    #[error("mark is stale or foreign to this store")]
    InvalidMark,
    #[error("variable name `{0}` is already registered")]
    DuplicateName(String),
    #[error("unknown variable id {0}")]
    UnknownVar(usize),
    #[error("arithmetic overflow in linear expression")]
    Overflow,
}
