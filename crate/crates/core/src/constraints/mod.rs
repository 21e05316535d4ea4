//! The constraint library: linear relations, offset disequality,
//! `all_different` and the queens `safe` pattern.
//!
//! Consistency levels:
//! - linear `=`, `≤`, `<`, `≥`, `>`: interval bounds consistency (each
//!   bound is the tightest one implied by the others' bounds over the
//!   reals, rounded inward to a domain member);
//! - linear `≠` and `x ≠ y + c`: forward checking (filter once all but
//!   one variable is fixed);
//! - `all_different`: pairwise `≠`, so pigeonhole conflicts are not
//!   detected.

mod linear;
mod neq;

pub use linear::{LinearPropagator, LinearTerm, Relation};
pub use neq::NeqOffset;

use crate::fd::{FdError, PropagatorId, Store, VarId};

/// Posts `lhs rel rhs`.
pub fn post_linear(
    store: &mut Store,
    lhs: &LinearTerm,
    rel: Relation,
    rhs: &LinearTerm,
) -> Result<PropagatorId, FdError> {
    for &(_, v) in lhs.terms().iter().chain(rhs.terms()) {
        store.check_var(v)?;
    }
    let p = LinearPropagator::new(lhs, rel, rhs, store.range())?;
    store.post(Box::new(p))
}

/// Posts `x ≠ y + c`.
pub fn post_neq_offset(
    store: &mut Store,
    x: VarId,
    y: VarId,
    c: i64,
) -> Result<PropagatorId, FdError> {
    store.check_var(x)?;
    store.check_var(y)?;
    store.post(Box::new(NeqOffset::new(x, y, c)))
}

/// Posts pairwise `xᵢ ≠ xⱼ` for all `i < j`.
pub fn post_all_different(store: &mut Store, vars: &[VarId]) -> Result<Vec<PropagatorId>, FdError> {
    let mut ids = Vec::with_capacity(vars.len() * vars.len().saturating_sub(1) / 2);
    for (i, &x) in vars.iter().enumerate() {
        for &y in &vars[i + 1..] {
            ids.push(post_neq_offset(store, x, y, 0)?);
        }
    }
    Ok(ids)
}

/// Queens no-attack constraints: for `i < j`, `qᵢ ≠ qⱼ` and
/// `qᵢ ≠ qⱼ ± (j − i)`.
pub fn post_safe(store: &mut Store, queens: &[VarId]) -> Result<Vec<PropagatorId>, FdError> {
    let mut ids = Vec::new();
    for (i, &x) in queens.iter().enumerate() {
        for (j, &y) in queens.iter().enumerate().skip(i + 1) {
            let d = (j - i) as i64;
            ids.push(post_neq_offset(store, x, y, 0)?);
            ids.push(post_neq_offset(store, x, y, d)?);
            ids.push(post_neq_offset(store, x, y, -d)?);
        }
    }
    Ok(ids)
}

/// Intersects each variable's domain with `[lo, hi]` (trailed, not a
/// propagator). Returns `Ok(false)` on a wipe-out.
pub fn restrict_domain(
    store: &mut Store,
    vars: &[VarId],
    lo: i64,
    hi: i64,
) -> Result<bool, FdError> {
    if lo > hi {
        return Err(FdError::InvalidRange { lo, hi });
    }
    for &v in vars {
        store.check_var(v)?;
        if store.narrow(v, lo, hi).is_err() {
            return Ok(false);
        }
    }
    Ok(true)
}
