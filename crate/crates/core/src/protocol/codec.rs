//! Line framing: `"<" TAG (" " ARG)* ">" LF` where
//! `ARG := INT | QSTRING | PAIR` and
//! `PAIR := NAME "=" (INT | INT ".." INT | "{" INT ("," INT)* "}")`.
//!
//! Strings are double-quoted; `"`, `\`, LF, CR, `<` and `>` are escaped as
//! `\"`, `\\`, `\n`, `\r`, `\<` and `\>`, so a frame never contains a raw
//! line break and its only unescaped angle brackets are the delimiters.

use std::fmt::Write as _;

use thiserror::Error;

use super::message::{ControlMessage, Direction, EngineMessage, Message};

/// Longest frame accepted or produced, terminating LF included.
pub const MAX_FRAME_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("frame of {0} bytes exceeds the {MAX_FRAME_LEN}-byte limit")]
    Oversized(usize),
    #[error("`{0}` is not a valid variable name on the wire")]
    InvalidName(String),
    #[error("empty value set for `{0}`")]
    EmptySet(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeErrorKind {
    Malformed(String),
    UnknownTag(String),
    Arity {
        tag: String,
        expected: String,
        found: usize,
    },
    BadInteger(String),
    Oversized(usize),
}

/// A frame that could not be decoded; `column` is the 1-based byte offset
/// of the problem within the line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {kind}")]
pub struct DecodeError {
    pub column: usize,
    pub kind: DecodeErrorKind,
}

impl std::fmt::Display for DecodeErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecodeErrorKind::Malformed(m) => write!(f, "malformed frame: {m}"),
            DecodeErrorKind::UnknownTag(t) => write!(f, "unknown tag `{t}`"),
            DecodeErrorKind::Arity {
                tag,
                expected,
                found,
            } => {
                write!(f, "`{tag}` expects {expected}, got {found} argument(s)")
            }
            DecodeErrorKind::BadInteger(s) => write!(f, "bad integer `{s}`"),
            DecodeErrorKind::Oversized(n) => write!(f, "frame of {n} bytes is too long"),
        }
    }
}

fn is_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn push_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '<' => out.push_str("\\<"),
            '>' => out.push_str("\\>"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn push_name(out: &mut String, name: &str) -> Result<(), EncodeError> {
    if !is_name(name) {
        return Err(EncodeError::InvalidName(name.to_string()));
    }
    out.push(' ');
    out.push_str(name);
    out.push('=');
    Ok(())
}

/// Appends the frame for `msg` (with its LF) to `out`.
pub fn encode_engine_into(msg: &EngineMessage, out: &mut String) -> Result<(), EncodeError> {
    let start = out.len();
    out.push('<');
    out.push_str(msg.tag());
    match msg {
        EngineMessage::Variables(names) => {
            for n in names {
                out.push(' ');
                push_quoted(out, n);
            }
        }
        EngineMessage::Button { id, goal } | EngineMessage::UndoGoal { id, goal } => {
            let _ = write!(out, " {id} ");
            push_quoted(out, goal);
        }
        EngineMessage::Node {
            id,
            parent,
            goal: text,
        }
        | EngineMessage::Child {
            id,
            parent,
            label: text,
        } => {
            let _ = write!(out, " {id} {parent} ");
            push_quoted(out, text);
        }
        EngineMessage::UndoButton { id }
        | EngineMessage::UndoNode { id }
        | EngineMessage::UndoChild { id } => {
            let _ = write!(out, " {id}");
        }
        EngineMessage::DomainSizes { time, sizes } => {
            let _ = write!(out, " {time}");
            for (n, s) in sizes {
                push_name(out, n)?;
                let _ = write!(out, "{s}");
            }
        }
        EngineMessage::DomainIntervals { time, intervals } => {
            let _ = write!(out, " {time}");
            for (n, lo, hi) in intervals {
                push_name(out, n)?;
                let _ = write!(out, "{lo}..{hi}");
            }
        }
        EngineMessage::DomainValues { time, values } => {
            let _ = write!(out, " {time}");
            for (n, vs) in values {
                if vs.is_empty() {
                    return Err(EncodeError::EmptySet(n.clone()));
                }
                push_name(out, n)?;
                out.push('{');
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{v}");
                }
                out.push('}');
            }
        }
        EngineMessage::UndoDomainValues { time }
        | EngineMessage::UndoDomainIntervals { time }
        | EngineMessage::UndoDomainSizes { time } => {
            let _ = write!(out, " {time}");
        }
        EngineMessage::Success | EngineMessage::Clear => {}
        EngineMessage::Error { message } => {
            out.push(' ');
            push_quoted(out, message);
        }
    }
    out.push_str(">\n");
    let len = out.len() - start;
    if len > MAX_FRAME_LEN {
        out.truncate(start);
        return Err(EncodeError::Oversized(len));
    }
    Ok(())
}

pub fn encode_engine(msg: &EngineMessage) -> Result<String, EncodeError> {
    let mut s = String::new();
    encode_engine_into(msg, &mut s)?;
    Ok(s)
}

pub fn encode_control(msg: &ControlMessage) -> Result<String, EncodeError> {
    let mut out = String::new();
    out.push('<');
    out.push_str(msg.tag());
    if let ControlMessage::Execute(goal) = msg {
        out.push(' ');
        push_quoted(&mut out, goal);
    }
    out.push_str(">\n");
    if out.len() > MAX_FRAME_LEN {
        return Err(EncodeError::Oversized(out.len()));
    }
    Ok(out)
}

pub fn encode(msg: &Message) -> Result<String, EncodeError> {
    match msg {
        Message::Engine(m) => encode_engine(m),
        Message::Control(m) => encode_control(m),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PairValue {
    Int(i128),
    Range(i128, i128),
    Set(Vec<i128>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Arg {
    Int(i128),
    Str(String),
    Pair(String, PairValue),
}

/// One decoded argument plus its column.
type Spanned = (Arg, usize);

struct Cursor<'a> {
    bytes: &'a [u8],
    text: &'a str,
    at: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> DecodeError {
        DecodeError {
            column: self.at + 1,
            kind: DecodeErrorKind::Malformed(msg.into()),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.at).copied()
    }

    fn int(&mut self) -> Result<i128, DecodeError> {
        let start = self.at;
        if self.peek() == Some(b'-') {
            self.at += 1;
        }
        let digits = self.at;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.at += 1;
        }
        if self.at == digits {
            self.at = start;
            return Err(self.err("expected an integer"));
        }
        let s = &self.text[start..self.at];
        s.parse::<i128>().map_err(|_| DecodeError {
            column: start + 1,
            kind: DecodeErrorKind::BadInteger(s.to_string()),
        })
    }

    fn quoted(&mut self) -> Result<String, DecodeError> {
        self.at += 1;
        let mut out = String::new();
        loop {
            let rest = &self.text[self.at..];
            let Some(c) = rest.chars().next() else {
                return Err(self.err("unterminated string"));
            };
            self.at += c.len_utf8();
            match c {
                '"' => return Ok(out),
                '\\' => {
                    let e = self.peek().ok_or_else(|| self.err("dangling escape"))?;
                    out.push(match e {
                        b'"' => '"',
                        b'\\' => '\\',
                        b'n' => '\n',
                        b'r' => '\r',
                        b'<' => '<',
                        b'>' => '>',
                        _ => return Err(self.err("unknown escape")),
                    });
                    self.at += 1;
                }
                '\n' | '\r' | '<' | '>' => {
                    self.at -= 1;
                    return Err(self.err("unescaped control character in string"));
                }
                c => out.push(c),
            }
        }
    }

    fn pair(&mut self) -> Result<Arg, DecodeError> {
        let start = self.at;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            self.at += 1;
        }
        let name = &self.text[start..self.at];
        if !is_name(name) {
            self.at = start;
            return Err(self.err("expected an argument"));
        }
        if self.peek() != Some(b'=') {
            return Err(self.err("expected `=`"));
        }
        self.at += 1;
        let value = if self.peek() == Some(b'{') {
            self.at += 1;
            let mut vs = vec![self.int()?];
            while self.peek() == Some(b',') {
                self.at += 1;
                vs.push(self.int()?);
            }
            if self.peek() != Some(b'}') {
                return Err(self.err("expected `,` or `}`"));
            }
            self.at += 1;
            PairValue::Set(vs)
        } else {
            let lo = self.int()?;
            if self.text[self.at..].starts_with("..") {
                self.at += 2;
                PairValue::Range(lo, self.int()?)
            } else {
                PairValue::Int(lo)
            }
        };
        Ok(Arg::Pair(name.to_string(), value))
    }

    fn arg(&mut self) -> Result<Arg, DecodeError> {
        match self.peek() {
            Some(b'"') => self.quoted().map(Arg::Str),
            Some(b'-') | Some(b'0'..=b'9') => self.int().map(Arg::Int),
            _ => self.pair(),
        }
    }
}

/// Splits a line into its tag and arguments.
fn split_frame(line: &str) -> Result<(&str, Vec<Spanned>), DecodeError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    if line.len() + 1 > MAX_FRAME_LEN {
        return Err(DecodeError {
            column: MAX_FRAME_LEN,
            kind: DecodeErrorKind::Oversized(line.len() + 1),
        });
    }
    let mut c = Cursor {
        bytes: line.as_bytes(),
        text: line,
        at: 0,
    };
    if c.peek() != Some(b'<') {
        return Err(c.err("frame must start with `<`"));
    }
    c.at = 1;
    let tag_start = c.at;
    while c
        .peek()
        .is_some_and(|b| b.is_ascii_alphabetic() || b == b'-')
    {
        c.at += 1;
    }
    let tag = &line[tag_start..c.at];
    if tag.is_empty() {
        return Err(c.err("missing tag"));
    }
    let mut args = Vec::new();
    loop {
        match c.peek() {
            Some(b'>') => {
                c.at += 1;
                if c.at != line.len() {
                    return Err(c.err("trailing bytes after `>`"));
                }
                return Ok((tag, args));
            }
            Some(b' ') => {
                c.at += 1;
                let col = c.at + 1;
                args.push((c.arg()?, col));
            }
            None => return Err(c.err("missing `>`")),
            Some(_) => return Err(c.err("expected ` ` or `>`")),
        }
    }
}

fn arity_err(tag: &str, expected: &str, found: usize) -> DecodeError {
    DecodeError {
        column: 2,
        kind: DecodeErrorKind::Arity {
            tag: tag.to_string(),
            expected: expected.to_string(),
            found,
        },
    }
}

fn type_err(col: usize, what: &str) -> DecodeError {
    DecodeError {
        column: col,
        kind: DecodeErrorKind::Malformed(format!("expected {what}")),
    }
}

fn to_u64(v: i128, col: usize) -> Result<u64, DecodeError> {
    u64::try_from(v).map_err(|_| DecodeError {
        column: col,
        kind: DecodeErrorKind::BadInteger(v.to_string()),
    })
}

fn to_i64(v: i128, col: usize) -> Result<i64, DecodeError> {
    i64::try_from(v).map_err(|_| DecodeError {
        column: col,
        kind: DecodeErrorKind::BadInteger(v.to_string()),
    })
}

fn uint(arg: &Spanned) -> Result<u64, DecodeError> {
    match arg {
        (Arg::Int(v), col) => to_u64(*v, *col),
        (_, col) => Err(type_err(*col, "an integer")),
    }
}

fn string(arg: Spanned) -> Result<String, DecodeError> {
    match arg {
        (Arg::Str(s), _) => Ok(s),
        (_, col) => Err(type_err(col, "a quoted string")),
    }
}

fn exactly(tag: &str, args: &[Spanned], n: usize, what: &str) -> Result<(), DecodeError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(arity_err(tag, what, args.len()))
    }
}

pub fn decode_engine(line: &str) -> Result<EngineMessage, DecodeError> {
    let (tag, args) = split_frame(line)?;
    let mut it = args.into_iter();
    let msg = match tag {
        "variables" => EngineMessage::Variables(it.map(string).collect::<Result<_, _>>()?),
        "button" | "undo-goal" => {
            let args: Vec<_> = it.collect();
            exactly(tag, &args, 2, "an id and a goal")?;
            let mut it = args.into_iter();
            let id = uint(&it.next().expect("arity"))?;
            let goal = string(it.next().expect("arity"))?;
            if tag == "button" {
                EngineMessage::Button { id, goal }
            } else {
                EngineMessage::UndoGoal { id, goal }
            }
        }
        "node" | "child" => {
            let args: Vec<_> = it.collect();
            exactly(tag, &args, 3, "an id, a parent id and a label")?;
            let mut it = args.into_iter();
            let id = uint(&it.next().expect("arity"))?;
            let parent = uint(&it.next().expect("arity"))?;
            let text = string(it.next().expect("arity"))?;
            if tag == "node" {
                EngineMessage::Node {
                    id,
                    parent,
                    goal: text,
                }
            } else {
                EngineMessage::Child {
                    id,
                    parent,
                    label: text,
                }
            }
        }
        "undo-button"
        | "undo-node"
        | "undo-child"
        | "undo-domainValues"
        | "undo-domainIntervals"
        | "undo-domainSizes" => {
            let args: Vec<_> = it.collect();
            exactly(tag, &args, 1, "one integer")?;
            let v = uint(&args[0])?;
            match tag {
                "undo-button" => EngineMessage::UndoButton { id: v },
                "undo-node" => EngineMessage::UndoNode { id: v },
                "undo-child" => EngineMessage::UndoChild { id: v },
                "undo-domainValues" => EngineMessage::UndoDomainValues { time: v },
                "undo-domainIntervals" => EngineMessage::UndoDomainIntervals { time: v },
                _ => EngineMessage::UndoDomainSizes { time: v },
            }
        }
        "domainSizes" | "domainIntervals" | "domainValues" => {
            let first = it.next().ok_or_else(|| arity_err(tag, "a time index", 0))?;
            let time = uint(&first)?;
            let pairs = it.map(|a| match a {
                (Arg::Pair(n, v), col) => Ok((n, v, col)),
                (_, col) => Err(type_err(col, "a name=value pair")),
            });
            match tag {
                "domainSizes" => {
                    let mut sizes = Vec::new();
                    for p in pairs {
                        match p? {
                            (n, PairValue::Int(s), col) => sizes.push((n, to_u64(s, col)?)),
                            (_, _, col) => return Err(type_err(col, "name=size")),
                        }
                    }
                    EngineMessage::DomainSizes { time, sizes }
                }
                "domainIntervals" => {
                    let mut intervals = Vec::new();
                    for p in pairs {
                        match p? {
                            (n, PairValue::Range(lo, hi), col) => {
                                intervals.push((n, to_i64(lo, col)?, to_i64(hi, col)?))
                            }
                            (_, _, col) => return Err(type_err(col, "name=lo..hi")),
                        }
                    }
                    EngineMessage::DomainIntervals { time, intervals }
                }
                _ => {
                    let mut values = Vec::new();
                    for p in pairs {
                        match p? {
                            (n, PairValue::Set(vs), col) => values.push((
                                n,
                                vs.into_iter()
                                    .map(|v| to_i64(v, col))
                                    .collect::<Result<_, _>>()?,
                            )),
                            (_, _, col) => return Err(type_err(col, "name={v,...}")),
                        }
                    }
                    EngineMessage::DomainValues { time, values }
                }
            }
        }
        "success" | "clear" => {
            let args: Vec<_> = it.collect();
            exactly(tag, &args, 0, "no arguments")?;
            if tag == "success" {
                EngineMessage::Success
            } else {
                EngineMessage::Clear
            }
        }
        "error" => {
            let args: Vec<_> = it.collect();
            exactly(tag, &args, 1, "a message")?;
            EngineMessage::Error {
                message: string(args.into_iter().next().expect("arity"))?,
            }
        }
        other => {
            return Err(DecodeError {
                column: 2,
                kind: DecodeErrorKind::UnknownTag(other.to_string()),
            })
        }
    };
    Ok(msg)
}

pub fn decode_control(line: &str) -> Result<ControlMessage, DecodeError> {
    let (tag, args) = split_frame(line)?;
    let none = |m: ControlMessage| exactly(tag, &args, 0, "no arguments").map(|_| m);
    match tag {
        "showSize" => none(ControlMessage::ShowSize),
        "showInterval" => none(ControlMessage::ShowInterval),
        "showValues" => none(ControlMessage::ShowValues),
        "backtrack" => none(ControlMessage::Backtrack),
        "backtrackInteraction" => none(ControlMessage::BacktrackInteraction),
        "clear" => none(ControlMessage::Clear),
        "execute" => {
            exactly(tag, &args, 1, "a goal")?;
            Ok(ControlMessage::Execute(string(
                args.into_iter().next().expect("arity"),
            )?))
        }
        other => Err(DecodeError {
            column: 2,
            kind: DecodeErrorKind::UnknownTag(other.to_string()),
        }),
    }
}

pub fn decode(line: &str, direction: Direction) -> Result<Message, DecodeError> {
    match direction {
        Direction::EngineToGui => decode_engine(line).map(Message::Engine),
        Direction::GuiToEngine => decode_control(line).map(Message::Control),
    }
}
