//! Lowers a goal into a flat step list over store variables.

use crate::constraints::{self, LinearPropagator, LinearTerm};
use crate::fd::{FdError, Store, VarId};
use crate::lang::{Expr, Goal};

use super::SessionError;

#[derive(Debug, Clone)]
pub(crate) enum Constraint {
    Linear(LinearPropagator),
    NeqOffset { x: VarId, y: VarId, c: i64 },
    AllDifferent(Vec<VarId>),
    Safe(Vec<VarId>),
    Domain { vars: Vec<VarId>, lo: i64, hi: i64 },
}

impl Constraint {
    /// Posts the constraint; `Ok(false)` on an immediate wipe-out.
    pub(crate) fn post(&self, store: &mut Store) -> Result<bool, FdError> {
        match self {
            Constraint::Linear(p) => store.post(Box::new(p.clone())).map(|_| true),
            Constraint::NeqOffset { x, y, c } => {
                constraints::post_neq_offset(store, *x, *y, *c).map(|_| true)
            }
            Constraint::AllDifferent(vs) => {
                constraints::post_all_different(store, vs).map(|_| true)
            }
            Constraint::Safe(vs) => constraints::post_safe(store, vs).map(|_| true),
            Constraint::Domain { vars, lo, hi } => {
                constraints::restrict_domain(store, vars, *lo, *hi)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Step {
    Post(Constraint),
    /// One traced `fd_labeling` call.
    Label(VarId),
    /// Opens a branch-and-bound scope; `end` indexes the matching `MinEnd`.
    MinStart {
        cost: VarId,
        end: usize,
    },
    MinEnd,
}

#[derive(Debug, Clone)]
pub(crate) struct Program {
    pub steps: Vec<Step>,
    /// Whether the goal labels anything.
    pub search: bool,
}

pub(crate) fn compile(goal: &Goal, store: &Store) -> Result<Program, SessionError> {
    let resolve = |n: &str| {
        store
            .lookup(n)
            .ok_or_else(|| SessionError::UnknownVariable(n.to_string()))
    };
    for n in goal.var_names() {
        resolve(n)?;
    }
    let conj = goal.conjuncts();
    let mut steps = Vec::new();
    for (i, g) in conj.iter().enumerate() {
        if let Goal::Minimize { goal: inner, cost } = g {
            if i + 1 != conj.len() {
                return Err(SessionError::MinimizePlacement(
                    "minimize must be the last goal of a conjunction".into(),
                ));
            }
            let start = steps.len();
            steps.push(Step::MinStart {
                cost: resolve(cost)?,
                end: 0,
            });
            for a in inner.conjuncts() {
                lower(a, &resolve, store, &mut steps)?;
            }
            if !steps[start + 1..]
                .iter()
                .any(|s| matches!(s, Step::Label(_)))
            {
                return Err(SessionError::UnboundedSearch(format!(
                    "minimize({inner}, {cost}) labels no variable"
                )));
            }
            let end = steps.len();
            steps[start] = Step::MinStart {
                cost: resolve(cost)?,
                end,
            };
            steps.push(Step::MinEnd);
        } else {
            lower(g, &resolve, store, &mut steps)?;
        }
    }
    let search = steps.iter().any(|s| matches!(s, Step::Label(_)));
    Ok(Program { steps, search })
}

fn linear(
    e: &Expr,
    resolve: &impl Fn(&str) -> Result<VarId, SessionError>,
) -> Result<LinearTerm, SessionError> {
    let mut terms = Vec::new();
    let mut constant: i64 = 0;
    for t in &e.terms {
        match &t.var {
            Some(n) => terms.push((t.coef, resolve(n)?)),
            None => constant = constant.checked_add(t.coef).ok_or(SessionError::Overflow)?,
        }
    }
    LinearTerm::new(terms, constant).map_err(SessionError::from)
}

fn lower(
    g: &Goal,
    resolve: &impl Fn(&str) -> Result<VarId, SessionError>,
    store: &Store,
    steps: &mut Vec<Step>,
) -> Result<(), SessionError> {
    let all = |vs: &[String]| vs.iter().map(|v| resolve(v)).collect::<Result<Vec<_>, _>>();
    match g {
        Goal::Conj(gs) => {
            for g in gs {
                lower(g, resolve, store, steps)?;
            }
        }
        Goal::Rel { lhs, rel, rhs } => {
            let p = LinearPropagator::new(
                &linear(lhs, resolve)?,
                *rel,
                &linear(rhs, resolve)?,
                store.range(),
            )?;
            steps.push(Step::Post(Constraint::Linear(p)));
        }
        Goal::NeqOffset { x, y, c } => steps.push(Step::Post(Constraint::NeqOffset {
            x: resolve(x)?,
            y: resolve(y)?,
            c: *c,
        })),
        Goal::AllDifferent(vs) => steps.push(Step::Post(Constraint::AllDifferent(all(vs)?))),
        Goal::Safe(vs) => steps.push(Step::Post(Constraint::Safe(all(vs)?))),
        Goal::Domain { vars, lo, hi } => {
            if lo > hi {
                return Err(FdError::InvalidRange { lo: *lo, hi: *hi }.into());
            }
            steps.push(Step::Post(Constraint::Domain {
                vars: all(vars)?,
                lo: *lo,
                hi: *hi,
            }))
        }
        Goal::Labeling(vs) => steps.extend(all(vs)?.into_iter().map(Step::Label)),
        Goal::LabelVar(v) => steps.push(Step::Label(resolve(v)?)),
        Goal::Minimize { .. } => {
            return Err(SessionError::MinimizePlacement(
                "minimize cannot be nested".into(),
            ));
        }
    }
    Ok(())
}
