//! Line-oriented model files.
//!
//! ```text
//! # comment
//! model sendmore
//! vars S E N D M O R Y in 0..9
//! names S=s_digit
//! button "fd_all_different([S,E,N,D,M,O,R,Y])"
//! button each "fd_labeling(%)" in S E N D
//! ```

use std::collections::HashSet;

use thiserror::Error;

use super::ast::Goal;
use super::parse::{parse_goal, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub names: Vec<String>,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Button {
    pub goal: Goal,
}

impl Button {
    pub fn text(&self) -> String {
        self.goal.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Model {
    pub name: String,
    pub declarations: Vec<Declaration>,
    /// `(variable, external name)` overrides from `names` lines.
    pub display_names: Vec<(String, String)>,
    pub buttons: Vec<Button>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelErrorKind {
    #[error("variable `{0}` declared twice")]
    DuplicateName(String),
    #[error("external name `{0}` used twice")]
    DuplicateDisplayName(String),
    #[error("`{0}` is not a declared variable")]
    UnknownVariable(String),
    #[error("button goal does not parse: {0}")]
    BadButton(ParseError),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("{0}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ModelError {
    pub line: usize,
    pub kind: ModelErrorKind,
}

impl Model {
    /// Declared variables in registration order with their initial bounds.
    pub fn variables(&self) -> impl Iterator<Item = (&str, i64, i64)> {
        self.declarations
            .iter()
            .flat_map(|d| d.names.iter().map(move |n| (n.as_str(), d.lo, d.hi)))
    }

    /// The name shown to the GUI for `var`.
    pub fn external_name<'a>(&'a self, var: &'a str) -> &'a str {
        self.display_names
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, d)| d.as_str())
            .unwrap_or(var)
    }
}

fn is_var_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_uppercase())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_display_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits on whitespace and commas.
fn words(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
}

/// Reads a double-quoted string with `\"` and `\\` escapes at the start of
/// `s`; returns the contents and the remainder.
fn quoted(s: &str) -> Result<(String, &str), String> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    if chars.next().map(|(_, c)| c) != Some('"') {
        return Err("expected a double-quoted goal".into());
    }
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Ok((out, &s[i + 1..])),
            '\\' => match chars.next() {
                Some((_, e @ ('"' | '\\'))) => out.push(e),
                Some((_, e)) => return Err(format!("unknown escape `\\{e}`")),
                None => break,
            },
            c => out.push(c),
        }
    }
    Err("unterminated string".into())
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, found `{s}`"))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad integer `{lo}`"))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad integer `{hi}`"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut model = Model {
        name: "model".into(),
        ..Model::default()
    };
    let mut declared: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |kind| ModelError { line, kind };
        let syntax = |msg: String| ModelError {
            line,
            kind: ModelErrorKind::Syntax(msg),
        };
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (directive, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        match directive {
            "model" => {
                let name = rest.trim();
                if name.is_empty() {
                    return Err(syntax("`model` needs a name".into()));
                }
                model.name = name.to_string();
            }
            "vars" => {
                let (names, range) = rest
                    .rsplit_once(" in ")
                    .ok_or_else(|| syntax("expected `vars <names> in <lo>..<hi>`".into()))?;
                let (lo, hi) = parse_range(range.trim()).map_err(syntax)?;
                let mut decl = Declaration {
                    names: Vec::new(),
                    lo,
                    hi,
                };
                for n in words(names) {
                    if !is_var_name(n) {
                        return Err(syntax(format!("`{n}` is not a variable name")));
                    }
                    if !declared.insert(n.to_string()) {
                        return Err(err(ModelErrorKind::DuplicateName(n.to_string())));
                    }
                    decl.names.push(n.to_string());
                }
                if decl.names.is_empty() {
                    return Err(syntax("`vars` needs at least one name".into()));
                }
                model.declarations.push(decl);
            }
            "names" => {
                for pair in words(rest) {
                    let (v, d) = pair
                        .split_once('=')
                        .ok_or_else(|| syntax(format!("expected Var=name, found `{pair}`")))?;
                    if !declared.contains(v) {
                        return Err(err(ModelErrorKind::UnknownVariable(v.to_string())));
                    }
                    if !is_display_name(d) {
                        return Err(syntax(format!("`{d}` is not a valid external name")));
                    }
                    model.display_names.retain(|(w, _)| w != v);
                    model.display_names.push((v.to_string(), d.to_string()));
                }
                let mut seen = HashSet::new();
                for v in model.declarations.iter().flat_map(|d| &d.names) {
                    let shown = model.external_name(v).to_string();
                    if !seen.insert(shown.clone()) {
                        return Err(err(ModelErrorKind::DuplicateDisplayName(shown)));
                    }
                }
            }
            "button" => {
                let rest = rest.trim_start();
                if let Some(each) = rest.strip_prefix("each") {
                    let (template, tail) = quoted(each).map_err(syntax)?;
                    let tail = tail.trim_start();
                    let names = tail
                        .strip_prefix("in")
                        .filter(|t| t.starts_with(char::is_whitespace))
                        .ok_or_else(|| syntax("expected `in <names>` after the template".into()))?;
                    for n in words(names) {
                        let text = template.replace('%', n);
                        let goal =
                            parse_goal(&text).map_err(|e| err(ModelErrorKind::BadButton(e)))?;
                        model.buttons.push(Button { goal });
                    }
                } else {
                    let (text, tail) = quoted(rest).map_err(syntax)?;
                    if !tail.trim().is_empty() {
                        return Err(syntax(format!(
                            "unexpected `{}` after button goal",
                            tail.trim()
                        )));
                    }
                    let goal = parse_goal(&text).map_err(|e| err(ModelErrorKind::BadButton(e)))?;
                    model.buttons.push(Button { goal });
                }
            }
            other => return Err(err(ModelErrorKind::UnknownDirective(other.to_string()))),
        }
    }
    Ok(model)
}
