use std::fmt;

use crate::constraints::Relation;

/// One summand of a linear expression: `coef·var`, or the constant `coef`
/// when `var` is `None`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coef: i64,
    pub var: Option<String>,
}

impl Term {
    pub fn constant(c: i64) -> Self {
        Term { coef: c, var: None }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::scaled(1, name)
    }

    pub fn scaled(coef: i64, name: impl Into<String>) -> Self {
        Term {
            coef,
            var: Some(name.into()),
        }
    }
}

/// A sum of terms, kept in source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Expr {
    pub terms: Vec<Term>,
}

impl Expr {
    pub fn new(terms: Vec<Term>) -> Self {
        Expr { terms }
    }

    pub fn constant(c: i64) -> Self {
        Expr::new(vec![Term::constant(c)])
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::new(vec![Term::var(name)])
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| t.var.as_deref())
    }
}

/// A parsed goal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Goal {
    /// Two or more goals run left to right.
    Conj(Vec<Goal>),
    Rel {
        lhs: Expr,
        rel: Relation,
        rhs: Expr,
    },
    AllDifferent(Vec<String>),
    /// `fd_domain(Vars, Lo, Hi)`.
    Domain {
        vars: Vec<String>,
        lo: i64,
        hi: i64,
    },
    /// `trace_labeling(Vars)`: one traced labeling call per variable.
    Labeling(Vec<String>),
    /// `fd_labeling(Var)`.
    LabelVar(String),
    Minimize {
        goal: Box<Goal>,
        cost: String,
    },
    /// `X #\= Y + C`.
    NeqOffset {
        x: String,
        y: String,
        c: i64,
    },
    Safe(Vec<String>),
}

impl Goal {
    /// Every variable name mentioned, in order of appearance (with repeats).
    pub fn var_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Goal::Conj(gs) => gs.iter().for_each(|g| g.collect_names(out)),
            Goal::Rel { lhs, rhs, .. } => {
                out.extend(lhs.var_names());
                out.extend(rhs.var_names());
            }
            Goal::AllDifferent(vs)
            | Goal::Labeling(vs)
            | Goal::Safe(vs)
            | Goal::Domain { vars: vs, .. } => out.extend(vs.iter().map(String::as_str)),
            Goal::LabelVar(v) => out.push(v),
            Goal::Minimize { goal, cost } => {
                goal.collect_names(out);
                out.push(cost);
            }
            Goal::NeqOffset { x, y, .. } => {
                out.push(x);
                out.push(y);
            }
        }
    }

    /// The conjuncts of a goal (the goal itself unless it is a `Conj`).
    pub fn conjuncts(&self) -> &[Goal] {
        match self {
            Goal::Conj(gs) => gs,
            g => std::slice::from_ref(g),
        }
    }

    /// Name of the goal's functor, used to refer to buttons by name.
    pub fn functor(&self) -> &'static str {
        match self {
            Goal::Conj(_) => ",",
            Goal::Rel { rel, .. } => rel.symbol(),
            Goal::NeqOffset { .. } => Relation::Neq.symbol(),
            Goal::AllDifferent(_) => "fd_all_different",
            Goal::Domain { .. } => "fd_domain",
            Goal::Labeling(_) => "trace_labeling",
            Goal::LabelVar(_) => "fd_labeling",
            Goal::Minimize { .. } => "minimize",
            Goal::Safe(_) => "safe",
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, vs: &[String]) -> fmt::Result {
    f.write_str("[")?;
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        f.write_str(v)?;
    }
    f.write_str("]")
}

impl fmt::Display for Term {
    /// Renders the unsigned magnitude; the sign belongs to the expression.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mag = self.coef.unsigned_abs();
        match &self.var {
            None => write!(f, "{mag}"),
            Some(v) if mag == 1 => f.write_str(v),
            Some(v) => write!(f, "{mag}*{v}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            match (i, t.coef < 0) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str("-")?,
                (_, false) => f.write_str("+")?,
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Conj(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{g}")?;
                }
                Ok(())
            }
            Goal::Rel { lhs, rel, rhs } => write!(f, "{lhs} {rel} {rhs}"),
            Goal::AllDifferent(vs) => {
                f.write_str("fd_all_different(")?;
                write_list(f, vs)?;
                f.write_str(")")
            }
            Goal::Domain { vars, lo, hi } => {
                f.write_str("fd_domain(")?;
                write_list(f, vars)?;
                write!(f, ",{lo},{hi})")
            }
            Goal::Labeling(vs) => {
                f.write_str("trace_labeling(")?;
                write_list(f, vs)?;
                f.write_str(")")
            }
            Goal::LabelVar(v) => write!(f, "fd_labeling({v})"),
            Goal::Minimize { goal, cost } => match **goal {
                Goal::Conj(_) => write!(f, "minimize(({goal}), {cost})"),
                _ => write!(f, "minimize({goal}, {cost})"),
            },
            Goal::NeqOffset { x, y, c } => match c {
                0 => write!(f, "{x} {} {y}", Relation::Neq),
                c if *c > 0 => write!(f, "{x} {} {y}+{c}", Relation::Neq),
                c => write!(f, "{x} {} {y}-{}", Relation::Neq, c.unsigned_abs()),
            },
            Goal::Safe(vs) => {
                f.write_str("safe(")?;
                write_list(f, vs)?;
                f.write_str(")")
            }
        }
    }
}

/// Canonical text of a goal; `parse_goal(&render_goal(g)) == Ok(g)`.
pub fn render_goal(goal: &Goal) -> String {
    goal.to_string()
}
