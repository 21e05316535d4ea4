//! Goal parsing in two passes: a small term grammar first, then lowering of
//! terms to [`Goal`]s. Syntax errors therefore point at the offending token
//! even inside an unknown construct.

use std::fmt;

use thiserror::Error;

use super::ast::{Expr, Goal, Term};
use crate::constraints::Relation;

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax {
        expected: Vec<&'static str>,
        found: String,
    },
    UnknownConstruct(String),
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn line(&self) -> usize {
        self.pos.line
    }

    pub fn column(&self) -> usize {
        self.pos.column
    }

    fn invalid(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError {
            pos,
            kind: ParseErrorKind::Invalid(msg.into()),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.pos)?;
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                write!(
                    f,
                    "syntax error, expected {}, found {found}",
                    expected.join(" or ")
                )
            }
            ParseErrorKind::UnknownConstruct(name) => write!(f, "unknown construct `{name}`"),
            ParseErrorKind::Invalid(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Var(String),
    Atom(String),
    Rel(Relation),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Plus,
    Minus,
    Star,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Atom(a) => format!("name `{a}`"),
            Tok::Rel(r) => format!("`{r}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '#' => {
                let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
                let (rel, len) = if rest.starts_with("#\\=") {
                    (Relation::Neq, 3)
                } else if rest.starts_with("#=<") {
                    (Relation::Le, 3)
                } else if rest.starts_with("#>=") {
                    (Relation::Ge, 3)
                } else if rest.starts_with("#=") {
                    (Relation::Eq, 2)
                } else if rest.starts_with("#<") {
                    (Relation::Lt, 2)
                } else if rest.starts_with("#>") {
                    (Relation::Gt, 2)
                } else {
                    return Err(ParseError {
                        pos,
                        kind: ParseErrorKind::Syntax {
                            expected: vec!["relational operator"],
                            found: format!("`{rest}`"),
                        },
                    });
                };
                i += len - 1;
                Tok::Rel(rel)
            }
            c if c.is_ascii_digit() => {
                while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..=i].iter().collect();
                let v = digits.parse::<i64>().map_err(|_| {
                    ParseError::invalid(pos, format!("integer `{digits}` out of range"))
                })?;
                Tok::Int(v)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_')
                {
                    i += 1;
                }
                let word: String = chars[start..=i].iter().collect();
                if c.is_ascii_uppercase() {
                    Tok::Var(word)
                } else {
                    Tok::Atom(word)
                }
            }
            other => {
                return Err(ParseError {
                    pos,
                    kind: ParseErrorKind::Syntax {
                        expected: vec!["a goal"],
                        found: format!("character `{other}`"),
                    },
                })
            }
        };
        i += 1;
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::End, Pos { line, column: col }));
    Ok(out)
}

/// Surface term tree, before any goal-level checking.
#[derive(Debug, Clone)]
enum Syn {
    Int(i64, Pos),
    Var(String, Pos),
    Atom(String, Pos),
    Compound(String, Vec<Syn>, Pos),
    List(Vec<Syn>, Pos),
    /// Signed summands; `true` = negated.
    Sum(Vec<(bool, Syn)>, Pos),
    Product(Box<Syn>, Box<Syn>, Pos),
    Rel(Relation, Box<Syn>, Box<Syn>, Pos),
    Conj(Vec<Syn>, Pos),
}

impl Syn {
    fn pos(&self) -> Pos {
        match self {
            Syn::Int(_, p)
            | Syn::Var(_, p)
            | Syn::Atom(_, p)
            | Syn::Compound(_, _, p)
            | Syn::List(_, p)
            | Syn::Sum(_, p)
            | Syn::Product(_, _, p)
            | Syn::Rel(_, _, _, p)
            | Syn::Conj(_, p) => *p,
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::Syntax {
                expected,
                found: self.peek().describe(),
            },
        }
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(vec![what]))
        }
    }

    fn goal(&mut self) -> Result<Syn, ParseError> {
        let pos = self.pos();
        let mut items = vec![self.item()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.item()?);
        }
        Ok(if items.len() == 1 {
            items.pop().expect("one item")
        } else {
            Syn::Conj(items, pos)
        })
    }

    fn item(&mut self) -> Result<Syn, ParseError> {
        let lhs = self.arith()?;
        if let Tok::Rel(r) = *self.peek() {
            let pos = self.pos();
            self.bump();
            let rhs = self.arith()?;
            return Ok(Syn::Rel(r, Box::new(lhs), Box::new(rhs), pos));
        }
        Ok(lhs)
    }

    fn arith(&mut self) -> Result<Syn, ParseError> {
        let pos = self.pos();
        let mut parts = Vec::new();
        let mut signed = false;
        let mut neg = false;
        if *self.peek() == Tok::Minus {
            self.bump();
            neg = true;
            signed = true;
        }
        parts.push((neg, self.product()?));
        loop {
            let neg = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => break,
            };
            self.bump();
            signed = true;
            parts.push((neg, self.product()?));
        }
        Ok(if signed {
            Syn::Sum(parts, pos)
        } else {
            parts.pop().expect("one part").1
        })
    }

    fn product(&mut self) -> Result<Syn, ParseError> {
        let mut lhs = self.primary()?;
        while *self.peek() == Tok::Star {
            let pos = self.pos();
            self.bump();
            let rhs = self.primary()?;
            lhs = Syn::Product(Box::new(lhs), Box::new(rhs), pos);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Syn, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Syn::Int(v, pos))
            }
            Tok::Var(name) => {
                self.bump();
                Ok(Syn::Var(name, pos))
            }
            Tok::Atom(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    return Ok(Syn::Atom(name, pos));
                }
                self.bump();
                let mut args = vec![self.item()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.item()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(Syn::Compound(name, args, pos))
            }
            Tok::LBrack => {
                self.bump();
                let mut elems = Vec::new();
                if *self.peek() != Tok::RBrack {
                    elems.push(self.item()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        elems.push(self.item()?);
                    }
                }
                self.expect(Tok::RBrack, "`]`")?;
                Ok(Syn::List(elems, pos))
            }
            Tok::LParen => {
                self.bump();
                let g = self.goal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(g)
            }
            _ => Err(self.error(vec!["a term"])),
        }
    }
}

fn lower_goal(syn: Syn) -> Result<Goal, ParseError> {
    match syn {
        Syn::Conj(items, _) => {
            let mut out = Vec::with_capacity(items.len());
            for it in items {
                match lower_goal(it)? {
                    Goal::Conj(gs) => out.extend(gs),
                    g => out.push(g),
                }
            }
            Ok(Goal::Conj(out))
        }
        Syn::Rel(rel, lhs, rhs, _) => {
            let lhs = lower_expr(*lhs)?;
            let rhs = lower_expr(*rhs)?;
            if rel == Relation::Neq {
                if let Some(g) = as_neq_offset(&lhs, &rhs) {
                    return Ok(g);
                }
            }
            Ok(Goal::Rel { lhs, rel, rhs })
        }
        Syn::Compound(name, args, pos) => lower_builtin(name, args, pos),
        Syn::Atom(name, pos) => Err(ParseError {
            pos,
            kind: ParseErrorKind::UnknownConstruct(name),
        }),
        other => Err(ParseError::invalid(
            other.pos(),
            "expected a goal or constraint",
        )),
    }
}

/// `X #\= Y`, `X #\= Y+C` and `X #\= Y-C` are offset disequalities.
fn as_neq_offset(lhs: &Expr, rhs: &Expr) -> Option<Goal> {
    let x = match lhs.terms.as_slice() {
        [Term {
            coef: 1,
            var: Some(x),
        }] => x,
        _ => return None,
    };
    let (y, c) = match rhs.terms.as_slice() {
        [Term {
            coef: 1,
            var: Some(y),
        }] => (y, 0),
        [Term {
            coef: 1,
            var: Some(y),
        }, Term { coef, var: None }] => (y, *coef),
        _ => return None,
    };
    Some(Goal::NeqOffset {
        x: x.clone(),
        y: y.clone(),
        c,
    })
}

fn arity(name: &str, args: &[Syn], n: usize, pos: Pos) -> Result<(), ParseError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(ParseError::invalid(
            pos,
            format!("`{name}` takes {n} argument(s), got {}", args.len()),
        ))
    }
}

fn lower_builtin(name: String, mut args: Vec<Syn>, pos: Pos) -> Result<Goal, ParseError> {
    match name.as_str() {
        "fd_domain" => {
            arity(&name, &args, 3, pos)?;
            let hi = lower_int(args.pop().expect("arity"))?;
            let lo = lower_int(args.pop().expect("arity"))?;
            let vars = lower_var_list(args.pop().expect("arity"))?;
            Ok(Goal::Domain { vars, lo, hi })
        }
        "fd_all_different" | "trace_labeling" | "safe" => {
            arity(&name, &args, 1, pos)?;
            let vars = lower_var_list(args.pop().expect("arity"))?;
            Ok(match name.as_str() {
                "fd_all_different" => Goal::AllDifferent(vars),
                "trace_labeling" => Goal::Labeling(vars),
                _ => Goal::Safe(vars),
            })
        }
        "fd_labeling" => {
            arity(&name, &args, 1, pos)?;
            Ok(Goal::LabelVar(lower_var(args.pop().expect("arity"))?))
        }
        "minimize" => {
            arity(&name, &args, 2, pos)?;
            let cost = lower_var(args.pop().expect("arity"))?;
            let goal = lower_goal(args.pop().expect("arity"))?;
            Ok(Goal::Minimize {
                goal: Box::new(goal),
                cost,
            })
        }
        _ => Err(ParseError {
            pos,
            kind: ParseErrorKind::UnknownConstruct(name),
        }),
    }
}

fn lower_var(syn: Syn) -> Result<String, ParseError> {
    match syn {
        Syn::Var(v, _) => Ok(v),
        other => Err(ParseError::invalid(other.pos(), "expected a variable")),
    }
}

fn lower_var_list(syn: Syn) -> Result<Vec<String>, ParseError> {
    match syn {
        Syn::List(elems, pos) => {
            if elems.is_empty() {
                return Err(ParseError::invalid(
                    pos,
                    "expected a non-empty variable list",
                ));
            }
            elems.into_iter().map(lower_var).collect()
        }
        other => Err(ParseError::invalid(other.pos(), "expected a variable list")),
    }
}

fn lower_int(syn: Syn) -> Result<i64, ParseError> {
    match syn {
        Syn::Int(v, _) => Ok(v),
        Syn::Sum(mut parts, pos) if parts.len() == 1 => match parts.pop().expect("one part") {
            (true, Syn::Int(v, _)) => Ok(-v),
            _ => Err(ParseError::invalid(pos, "expected an integer")),
        },
        other => Err(ParseError::invalid(other.pos(), "expected an integer")),
    }
}

fn lower_expr(syn: Syn) -> Result<Expr, ParseError> {
    let parts = match syn {
        Syn::Sum(parts, _) => parts,
        other => vec![(false, other)],
    };
    let mut terms = Vec::with_capacity(parts.len());
    for (neg, part) in parts {
        let pos = part.pos();
        let mut t = lower_term(part)?;
        if neg {
            t.coef = t
                .coef
                .checked_neg()
                .ok_or_else(|| ParseError::invalid(pos, "coefficient out of range"))?;
        }
        terms.push(t);
    }
    Ok(Expr { terms })
}

fn lower_term(syn: Syn) -> Result<Term, ParseError> {
    match syn {
        Syn::Int(v, _) => Ok(Term::constant(v)),
        Syn::Var(v, _) => Ok(Term::var(v)),
        Syn::Product(a, b, pos) => match (*a, *b) {
            (Syn::Int(k, _), Syn::Var(v, _)) | (Syn::Var(v, _), Syn::Int(k, _)) => {
                Ok(Term::scaled(k, v))
            }
            (Syn::Var(..), Syn::Var(..)) => Err(ParseError::invalid(
                pos,
                "product of two variables is not linear",
            )),
            _ => Err(ParseError::invalid(
                pos,
                "only integer*Variable products are allowed",
            )),
        },
        other => Err(ParseError::invalid(other.pos(), "expected a linear term")),
    }
}

/// Parses goal text.
pub fn parse_goal(text: &str) -> Result<Goal, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let syn = p.goal()?;
    if *p.peek() != Tok::End {
        return Err(p.error(vec!["`,`", "end of input"]));
    }
    lower_goal(syn)
}
