use std::fmt;

use crate::fd::{Domains, FdError, Inconsistent, Propagator, VarId};

/// Arithmetic comparison between two linear expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::Eq,
        Relation::Neq,
        Relation::Lt,
        Relation::Le,
        Relation::Gt,
        Relation::Ge,
    ];

    /// Surface syntax (`#=`, `#\=`, ...).
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "#=",
            Relation::Neq => "#\\=",
            Relation::Lt => "#<",
            Relation::Le => "#=<",
            Relation::Gt => "#>",
            Relation::Ge => "#>=",
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Neq => lhs != rhs,
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `Σ coef·var + constant` with merged, non-zero coefficients ordered by
/// variable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearTerm {
    terms: Vec<(i64, VarId)>,
    constant: i64,
}

impl LinearTerm {
    pub fn new<I: IntoIterator<Item = (i64, VarId)>>(
        terms: I,
        constant: i64,
    ) -> Result<Self, FdError> {
        let mut ts: Vec<(i64, VarId)> = terms.into_iter().collect();
        ts.sort_by_key(|&(_, v)| v);
        let mut merged: Vec<(i64, VarId)> = Vec::with_capacity(ts.len());
        for (a, v) in ts {
            match merged.last_mut() {
                Some((b, w)) if *w == v => *b = b.checked_add(a).ok_or(FdError::Overflow)?,
                _ => merged.push((a, v)),
            }
        }
        merged.retain(|&(a, _)| a != 0);
        Ok(LinearTerm {
            terms: merged,
            constant,
        })
    }

    pub fn constant(c: i64) -> Self {
        LinearTerm {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        LinearTerm {
            terms: vec![(1, v)],
            constant: 0,
        }
    }

    pub fn terms(&self) -> &[(i64, VarId)] {
        &self.terms
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    /// `self - other`.
    pub fn minus(&self, other: &LinearTerm) -> Result<LinearTerm, FdError> {
        let mut ts = self.terms.clone();
        for &(a, v) in &other.terms {
            ts.push((a.checked_neg().ok_or(FdError::Overflow)?, v));
        }
        let c = self
            .constant
            .checked_sub(other.constant)
            .ok_or(FdError::Overflow)?;
        LinearTerm::new(ts, c)
    }

    fn negated(&self) -> Result<LinearTerm, FdError> {
        LinearTerm::constant(0).minus(self)
    }

    pub fn eval(&self, value: impl Fn(VarId) -> i64) -> i64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(a, v)| acc + a * value(v))
    }
}

/// Normalized form `Σ aᵢxᵢ + c ⋈ 0` with `⋈ ∈ {=, ≠, ≤}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Eq,
    Neq,
    Le,
}

/// Bounds filter for a linear relation. Equalities and inequalities are
/// filtered to interval (real-relaxation) bounds consistency, snapped to
/// domain members; disequalities act only when at most one variable is
/// unfixed.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    term: LinearTerm,
    kind: Kind,
}

impl LinearPropagator {
    /// Builds the filter for `lhs rel rhs`, checking that no partial sum can
    /// overflow for values inside `range`.
    pub fn new(
        lhs: &LinearTerm,
        rel: Relation,
        rhs: &LinearTerm,
        range: (i64, i64),
    ) -> Result<Self, FdError> {
        let diff = lhs.minus(rhs)?;
        let (term, kind) = match rel {
            Relation::Eq => (diff, Kind::Eq),
            Relation::Neq => (diff, Kind::Neq),
            Relation::Le => (diff, Kind::Le),
            Relation::Lt => (add_constant(diff, 1)?, Kind::Le),
            Relation::Ge => (diff.negated()?, Kind::Le),
            Relation::Gt => (add_constant(diff.negated()?, 1)?, Kind::Le),
        };
        check_overflow(&term, range)?;
        Ok(LinearPropagator { term, kind })
    }

    /// Σ over terms of the smallest / largest contribution.
    fn extent(&self, d: &Domains) -> (i64, i64) {
        let mut lo = self.term.constant;
        let mut hi = self.term.constant;
        for &(a, v) in &self.term.terms {
            let (l, h) = contribution(a, d.min(v), d.max(v));
            lo += l;
            hi += h;
        }
        (lo, hi)
    }

    /// One pass of `Σ ≤ 0`; returns whether a bound moved.
    fn filter_le(
        &self,
        d: &mut Domains,
        terms: &[(i64, VarId)],
        constant: i64,
    ) -> Result<bool, Inconsistent> {
        let mut lo = constant;
        for &(a, v) in terms {
            lo += contribution(a, d.min(v), d.max(v)).0;
        }
        if lo > 0 {
            return Err(Inconsistent);
        }
        let mut moved = false;
        for &(a, v) in terms {
            let own = contribution(a, d.min(v), d.max(v)).0;
            // a·x ≤ -(lo - own)
            let slack = own - lo;
            let changed = if a > 0 {
                d.narrow(v, i64::MIN, floor_div(slack, a))?
            } else {
                d.narrow(v, ceil_div(slack, a), i64::MAX)?
            };
            if changed {
                moved = true;
                lo = constant;
                for &(b, w) in terms {
                    lo += contribution(b, d.min(w), d.max(w)).0;
                }
                if lo > 0 {
                    return Err(Inconsistent);
                }
            }
        }
        Ok(moved)
    }

    fn filter_neq(&self, d: &mut Domains) -> Result<(), Inconsistent> {
        let mut free = None;
        let mut sum = self.term.constant;
        for &(a, v) in &self.term.terms {
            match d.value(v) {
                Some(x) => sum += a * x,
                None if free.is_none() => free = Some((a, v)),
                None => return Ok(()),
            }
        }
        match free {
            None if sum == 0 => Err(Inconsistent),
            None => Ok(()),
            Some((a, v)) => {
                // a·x + sum ≠ 0
                if (-sum) % a == 0 {
                    d.remove(v, -sum / a)?;
                }
                Ok(())
            }
        }
    }
}

fn add_constant(t: LinearTerm, c: i64) -> Result<LinearTerm, FdError> {
    let k = t.constant.checked_add(c).ok_or(FdError::Overflow)?;
    Ok(LinearTerm {
        terms: t.terms,
        constant: k,
    })
}

/// Rejects terms whose sums could leave `i64` for values in `range`.
/// Bounds stay below `i64::MAX / 4` so filtering never overflows.
fn check_overflow(t: &LinearTerm, range: (i64, i64)) -> Result<(), FdError> {
    let magnitude = range.0.unsigned_abs().max(range.1.unsigned_abs()) as i128;
    let mut total: i128 = (t.constant as i128).abs();
    for &(a, _) in &t.terms {
        total += (a as i128).abs() * magnitude;
    }
    if total > (i64::MAX / 4) as i128 {
        return Err(FdError::Overflow);
    }
    Ok(())
}

fn contribution(a: i64, min: i64, max: i64) -> (i64, i64) {
    if a > 0 {
        (a * min, a * max)
    } else {
        (a * max, a * min)
    }
}

pub(crate) fn floor_div(n: i64, d: i64) -> i64 {
    let q = n / d;
    if (n % d != 0) && ((n < 0) != (d < 0)) {
        q - 1
    } else {
        q
    }
}

pub(crate) fn ceil_div(n: i64, d: i64) -> i64 {
    let q = n / d;
    if (n % d != 0) && ((n < 0) == (d < 0)) {
        q + 1
    } else {
        q
    }
}

impl Propagator for LinearPropagator {
    fn watched(&self) -> Vec<VarId> {
        self.term.terms.iter().map(|&(_, v)| v).collect()
    }

    fn filter(&self, d: &mut Domains) -> Result<(), Inconsistent> {
        match self.kind {
            Kind::Neq => self.filter_neq(d),
            Kind::Le => {
                while self.filter_le(d, &self.term.terms, self.term.constant)? {}
                Ok(())
            }
            Kind::Eq => {
                let negated: Vec<(i64, VarId)> =
                    self.term.terms.iter().map(|&(a, v)| (-a, v)).collect();
                loop {
                    let a = self.filter_le(d, &self.term.terms, self.term.constant)?;
                    let b = self.filter_le(d, &negated, -self.term.constant)?;
                    if !a && !b {
                        break;
                    }
                }
                let (lo, hi) = self.extent(d);
                if lo > 0 || hi < 0 {
                    return Err(Inconsistent);
                }
                Ok(())
            }
        }
    }
}
