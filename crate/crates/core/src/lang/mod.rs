//! The goal language and model files.
//!
//! Goals follow GNU-Prolog surface syntax:
//!
//! ```text
//! goal    := atom { "," atom }
//! atom    := expr relop expr | builtin | "(" goal ")"
//! relop   := "#=" | "#\=" | "#<" | "#=<" | "#>" | "#>="
//! expr    := ["-"] term { ("+" | "-") term }
//! term    := integer | Var | integer "*" Var
//! builtin := fd_domain(List, Int, Int) | fd_all_different(List)
//!          | trace_labeling(List) | fd_labeling(Var) | safe(List)
//!          | minimize(atom, Var)
//! ```

mod ast;
mod model;
mod parse;

pub use ast::{render_goal, Expr, Goal, Term};
pub use model::{parse_model, Button, Declaration, Model, ModelError, ModelErrorKind};
pub use parse::{parse_goal, ParseError, ParseErrorKind, Pos};
