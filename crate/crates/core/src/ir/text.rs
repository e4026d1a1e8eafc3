use thiserror::Error;

use super::{FeatureStructure, Number, Symbol, Value};
use crate::sexpr::{self, Bracket, Node, Pos, SExpr, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("duplicate slot {slot} at line {}, column {}", pos.line, pos.col)]
    DuplicateSlot { slot: String, pos: Pos },
}

fn syntax(pos: Pos, msg: impl Into<String>) -> IrError {
    IrError::Syntax(SyntaxError::new(pos, msg))
}

/// Parses one bracketed structure. `#` starts a comment.
pub fn parse_ir(text: &str) -> Result<FeatureStructure, IrError> {
    let exprs = sexpr::read_all(text, '#')?;
    let mut iter = exprs.into_iter();
    let Some(first) = iter.next() else {
        return Err(syntax(Pos { line: 1, col: 1 }, "empty input, expected '['"));
    };
    if let Some(extra) = iter.next() {
        return Err(syntax(extra.pos, "unexpected content after structure"));
    }
    structure_from(&first)
}

/// Parses a single value: a structure, number, symbol or quoted string.
pub fn parse_value(text: &str) -> Result<Value, IrError> {
    let exprs = sexpr::read_all(text, '#')?;
    match exprs.as_slice() {
        [one] => value_from(one),
        [] => Err(syntax(Pos { line: 1, col: 1 }, "empty input")),
        [_, extra, ..] => Err(syntax(extra.pos, "unexpected content after value")),
    }
}

pub(crate) fn structure_from(expr: &SExpr) -> Result<FeatureStructure, IrError> {
    let Node::List(Bracket::Square, items) = &expr.node else {
        return Err(syntax(
            expr.pos,
            format!(
                "expected '[' to open a structure, found {}",
                expr.describe()
            ),
        ));
    };
    let mut fs = FeatureStructure::new();
    for item in items {
        let pair = match &item.node {
            Node::List(Bracket::Round, pair) => pair,
            _ => {
                return Err(syntax(
                    item.pos,
                    format!("expected '(SLOT value)', found {}", item.describe()),
                ))
            }
        };
        let [slot, value] = pair.as_slice() else {
            return Err(syntax(
                item.pos,
                "a slot pair needs exactly a name and a value",
            ));
        };
        let name = match slot.as_atom() {
            Some(a) if Symbol::is_valid(a) => Symbol::new(a),
            _ => return Err(syntax(slot.pos, "slot name must be a symbol")),
        };
        if fs.get(name.as_str()).is_some() {
            return Err(IrError::DuplicateSlot {
                slot: name.to_string(),
                pos: slot.pos,
            });
        }
        let v = value_from(value)?;
        fs.slots_mut().push((name, v));
    }
    Ok(fs)
}

pub(crate) fn atom_value(atom: &str) -> Option<Value> {
    if let Some(n) = parse_number(atom) {
        return Some(Value::Number(n));
    }
    Symbol::is_valid(atom).then(|| Value::Symbol(Symbol::new(atom)))
}

pub(crate) fn value_from(expr: &SExpr) -> Result<Value, IrError> {
    match &expr.node {
        Node::Str(s) => Ok(Value::Text(s.clone())),
        Node::Atom(a) => atom_value(a).ok_or_else(|| syntax(expr.pos, format!("bad atom '{a}'"))),
        Node::List(Bracket::Square, _) => Ok(Value::Struct(structure_from(expr)?)),
        Node::List(Bracket::Round, _) => Err(syntax(expr.pos, "a pair is not a value; use [...]")),
    }
}

pub(crate) fn parse_number(s: &str) -> Option<Number> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let (int_part, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match frac {
        None => s.parse().ok().map(Number::Int),
        Some(f) if !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()) => {
            s.parse().ok().map(Number::Decimal)
        }
        Some(_) => None,
    }
}

pub fn serialize_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, None);
    out
}

/// Single-line text in stored slot order.
pub fn serialize_ir(fs: &FeatureStructure) -> String {
    let mut out = String::new();
    write_struct(&mut out, fs, None);
    out
}

/// Multi-line layout with one top-level slot per line.
pub fn serialize_pretty(fs: &FeatureStructure) -> String {
    let mut out = String::new();
    write_struct(&mut out, fs, Some(0));
    out
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>) {
    match v {
        Value::Symbol(s) => out.push_str(s.as_str()),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::Text(t) => out.push_str(&sexpr::quote(t)),
        Value::Struct(fs) => write_struct(out, fs, indent),
    }
}

fn write_struct(out: &mut String, fs: &FeatureStructure, indent: Option<usize>) {
    out.push('[');
    for (i, (k, v)) in fs.iter().enumerate() {
        if i > 0 {
            match indent {
                Some(n) => {
                    out.push('\n');
                    out.extend(std::iter::repeat_n(' ', n + 1));
                }
                None => out.push(' '),
            }
        }
        out.push('(');
        out.push_str(k.as_str());
        out.push(' ');
        // only the top level is broken across lines
        write_value(out, v, None);
        out.push(')');
    }
    out.push(']');
}
