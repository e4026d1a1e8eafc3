//! BNF-style schema over feature structures.
//!
//! ```text
//! @root REPORT-STATEMENT
//! @strict on
//! REPORT-STATEMENT ::= THRESHOLD | CONFIRMATION
//! THRESHOLD ::= [ (COOP {THRESHOLD-EXCEEDING} REQ) (TIME TIME OPT) ]
//! TIME ::= [ (PRED {SEASON}) ... ]
//! ```
//!
//! Value specs are a nonterminal, `{A|B}`, `INT`, `DECIMAL`, `NUMBER`,
//! `TEXT`, `SYMBOL` or an integer range `lo..hi` (`hi` may be omitted).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{FeaturePath, Number, Symbol, Value};
use crate::diagnostics::ValidationReport;
use crate::sexpr::{Pos, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueSpec {
    NonTerminal(Symbol),
    Enum(Vec<Symbol>),
    Int,
    Decimal,
    Number,
    Text,
    Symbol,
    Range(i64, Option<i64>),
}

impl fmt::Display for ValueSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueSpec::NonTerminal(s) => write!(f, "{s}"),
            ValueSpec::Enum(syms) => {
                let names: Vec<_> = syms.iter().map(Symbol::as_str).collect();
                write!(f, "{{{}}}", names.join("|"))
            }
            ValueSpec::Int => f.write_str("INT"),
            ValueSpec::Decimal => f.write_str("DECIMAL"),
            ValueSpec::Number => f.write_str("NUMBER"),
            ValueSpec::Text => f.write_str("TEXT"),
            ValueSpec::Symbol => f.write_str("SYMBOL"),
            ValueSpec::Range(lo, Some(hi)) => write!(f, "{lo}..{hi}"),
            ValueSpec::Range(lo, None) => write!(f, "{lo}.."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSpec {
    pub slot: Symbol,
    pub spec: ValueSpec,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Alternative {
    Structure(Vec<SlotSpec>),
    Value(ValueSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrSchema {
    root: Symbol,
    strict: bool,
    productions: BTreeMap<Symbol, Vec<Alternative>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("undefined nonterminal {name} at line {}, column {}", pos.line, pos.col)]
    Undefined { name: String, pos: Pos },
    #[error("nonterminal {name} defined twice (line {})", pos.line)]
    Duplicate { name: String, pos: Pos },
    #[error("schema has no @root directive")]
    MissingRoot,
    #[error("more than one @root directive (line {})", pos.line)]
    MultipleRoots { pos: Pos },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Directive(String),
    Defines,
    Open(char),
    Close(char),
    Bar,
    Range(i64, Option<i64>),
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos {
                line: lineno + 1,
                col: i + 1,
            };
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            match c {
                '[' | '(' | '{' => {
                    out.push((Tok::Open(c), pos));
                    i += 1;
                }
                ']' | ')' | '}' => {
                    out.push((Tok::Close(c), pos));
                    i += 1;
                }
                '|' => {
                    out.push((Tok::Bar, pos));
                    i += 1;
                }
                ':' => {
                    if chars[i..].starts_with(&[':', ':', '=']) {
                        out.push((Tok::Defines, pos));
                        i += 3;
                    } else {
                        return Err(SyntaxError::new(pos, "expected '::='"));
                    }
                }
                _ => {
                    let start = i;
                    while i < chars.len()
                        && !chars[i].is_whitespace()
                        && !"[](){}|#".contains(chars[i])
                        && !(chars[i] == ':' && chars[i..].starts_with(&[':', ':', '=']))
                    {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    if let Some(d) = word.strip_prefix('@') {
                        out.push((Tok::Directive(d.to_ascii_lowercase()), pos));
                    } else if let Some((lo, hi)) = word.split_once("..") {
                        let lo = lo
                            .parse()
                            .map_err(|_| SyntaxError::new(pos, format!("bad range '{word}'")))?;
                        let hi = if hi.is_empty() {
                            None
                        } else {
                            Some(hi.parse().map_err(|_| {
                                SyntaxError::new(pos, format!("bad range '{word}'"))
                            })?)
                        };
                        out.push((Tok::Range(lo, hi), pos));
                    } else if Symbol::is_valid(&word) {
                        out.push((Tok::Ident(word.to_ascii_uppercase()), pos));
                    } else {
                        return Err(SyntaxError::new(pos, format!("unexpected '{word}'")));
                    }
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    refs: Vec<(Symbol, Pos)>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.at + 1).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks
            .get(self.at)
            .or(self.toks.last())
            .map(|(_, p)| *p)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        let pos = self.pos();
        match self.next() {
            Some((t, _)) if t == want => Ok(()),
            _ => Err(SyntaxError::new(pos, format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), SyntaxError> {
        let pos = self.pos();
        match self.next() {
            Some((Tok::Ident(s), p)) => Ok((s, p)),
            _ => Err(SyntaxError::new(pos, format!("expected {what}"))),
        }
    }

    fn value_spec(&mut self) -> Result<ValueSpec, SyntaxError> {
        let pos = self.pos();
        match self.next() {
            Some((Tok::Ident(s), p)) => Ok(match s.as_str() {
                "INT" => ValueSpec::Int,
                "DECIMAL" => ValueSpec::Decimal,
                "NUMBER" => ValueSpec::Number,
                "TEXT" => ValueSpec::Text,
                "SYMBOL" => ValueSpec::Symbol,
                _ => {
                    let sym = Symbol::new(&s);
                    self.refs.push((sym.clone(), p));
                    ValueSpec::NonTerminal(sym)
                }
            }),
            Some((Tok::Range(lo, hi), _)) => Ok(ValueSpec::Range(lo, hi)),
            Some((Tok::Open('{'), _)) => {
                let mut syms = vec![Symbol::new(&self.ident("enumerated symbol")?.0)];
                loop {
                    match self.next() {
                        Some((Tok::Bar, _)) => {
                            syms.push(Symbol::new(&self.ident("enumerated symbol")?.0))
                        }
                        Some((Tok::Close('}'), _)) => break,
                        _ => return Err(SyntaxError::new(pos, "unterminated '{'")),
                    }
                }
                Ok(ValueSpec::Enum(syms))
            }
            _ => Err(SyntaxError::new(pos, "expected a value spec")),
        }
    }

    fn alternative(&mut self) -> Result<Alternative, SyntaxError> {
        if self.peek() != Some(&Tok::Open('[')) {
            return Ok(Alternative::Value(self.value_spec()?));
        }
        self.next();
        let mut slots = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Close(']')) => {
                    self.next();
                    break;
                }
                Some(Tok::Open('(')) => {
                    self.next();
                    let (slot, slot_pos) = self.ident("slot name")?;
                    let spec = self.value_spec()?;
                    let (flag, flag_pos) = self.ident("REQ or OPT")?;
                    let required = match flag.as_str() {
                        "REQ" => true,
                        "OPT" => false,
                        _ => return Err(SyntaxError::new(flag_pos, "expected REQ or OPT")),
                    };
                    self.expect(Tok::Close(')'), "')'")?;
                    let slot = Symbol::new(&slot);
                    if slots.iter().any(|s: &SlotSpec| s.slot == slot) {
                        return Err(SyntaxError::new(
                            slot_pos,
                            format!("slot {slot} listed twice"),
                        ));
                    }
                    slots.push(SlotSpec {
                        slot,
                        spec,
                        required,
                    });
                }
                _ => return Err(SyntaxError::new(self.pos(), "expected '(' or ']'")),
            }
        }
        Ok(Alternative::Structure(slots))
    }
}

pub fn parse_schema(text: &str) -> Result<IrSchema, SchemaError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        refs: Vec::new(),
    };
    let mut root: Option<(Symbol, Pos)> = None;
    let mut strict = true;
    let mut productions = BTreeMap::new();
    while let Some(tok) = p.peek().cloned() {
        let pos = p.pos();
        match tok {
            Tok::Directive(d) if d == "root" => {
                p.next();
                if root.is_some() {
                    return Err(SchemaError::MultipleRoots { pos });
                }
                let (name, npos) = p.ident("root nonterminal")?;
                root = Some((Symbol::new(&name), npos));
            }
            Tok::Directive(d) if d == "strict" => {
                p.next();
                let (flag, fpos) = p.ident("on or off")?;
                strict = match flag.as_str() {
                    "ON" => true,
                    "OFF" => false,
                    _ => return Err(SyntaxError::new(fpos, "expected on or off").into()),
                };
            }
            Tok::Directive(d) => {
                return Err(SyntaxError::new(pos, format!("unknown directive @{d}")).into())
            }
            Tok::Ident(_) if p.peek2() == Some(&Tok::Defines) => {
                let (name, npos) = p.ident("nonterminal")?;
                p.next();
                let mut alts = vec![p.alternative()?];
                while p.peek() == Some(&Tok::Bar) {
                    p.next();
                    alts.push(p.alternative()?);
                }
                let name = Symbol::new(&name);
                if productions.insert(name.clone(), alts).is_some() {
                    return Err(SchemaError::Duplicate {
                        name: name.to_string(),
                        pos: npos,
                    });
                }
            }
            _ => return Err(SyntaxError::new(pos, "expected a production 'NAME ::= ...'").into()),
        }
    }
    let Some((root, root_pos)) = root else {
        return Err(SchemaError::MissingRoot);
    };
    if !productions.contains_key(&root) {
        return Err(SchemaError::Undefined {
            name: root.to_string(),
            pos: root_pos,
        });
    }
    for (name, pos) in &p.refs {
        if !productions.contains_key(name) {
            return Err(SchemaError::Undefined {
                name: name.to_string(),
                pos: *pos,
            });
        }
    }
    Ok(IrSchema {
        root,
        strict,
        productions,
    })
}

fn join(prefix: &str, slot: &Symbol) -> String {
    if prefix.is_empty() {
        slot.to_string()
    } else {
        format!("{prefix}.{slot}")
    }
}

impl IrSchema {
    pub fn root(&self) -> &Symbol {
        &self.root
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn alternatives(&self, nonterminal: &str) -> Option<&[Alternative]> {
        self.productions
            .get(&Symbol::new(nonterminal))
            .map(Vec::as_slice)
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &Symbol> {
        self.productions.keys()
    }

    /// Symbols allowed for `slot` in any structure alternative reachable from
    /// the root, e.g. the COOP enumeration.
    pub fn enumerated_values(&self, slot: &str) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for alts in self.productions.values() {
            for alt in alts {
                if let Alternative::Structure(slots) = alt {
                    for s in slots.iter().filter(|s| s.slot == slot) {
                        if let ValueSpec::Enum(syms) = &s.spec {
                            out.extend(syms.iter().cloned());
                        }
                    }
                }
            }
        }
        out
    }

    /// Slot specs reachable from `specs` by following `path`. Empty when the
    /// path is not legal under any alternative.
    pub fn resolve_path(&self, specs: &[ValueSpec], path: &FeaturePath) -> Vec<ValueSpec> {
        let mut current: Vec<ValueSpec> = specs.to_vec();
        for seg in path.segments() {
            let mut next = Vec::new();
            for alt in self.expand(&current) {
                if let Alternative::Structure(slots) = alt {
                    for s in slots.iter().filter(|s| &s.slot == seg) {
                        if !next.contains(&s.spec) {
                            next.push(s.spec.clone());
                        }
                    }
                }
            }
            current = next;
            if current.is_empty() {
                break;
            }
        }
        current
    }

    /// Flattens nonterminal references into their concrete alternatives.
    pub fn expand(&self, specs: &[ValueSpec]) -> Vec<Alternative> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<ValueSpec> = specs.iter().rev().cloned().collect();
        while let Some(spec) = stack.pop() {
            match spec {
                ValueSpec::NonTerminal(nt) => {
                    if !seen.insert(nt.clone()) {
                        continue;
                    }
                    if let Some(alts) = self.productions.get(&nt) {
                        for alt in alts.iter().rev() {
                            match alt {
                                Alternative::Value(v) => stack.push(v.clone()),
                                s => out.push(s.clone()),
                            }
                        }
                    }
                }
                other => out.push(Alternative::Value(other)),
            }
        }
        out
    }

    fn check_spec(
        &self,
        v: &Value,
        spec: &ValueSpec,
        path: &str,
        depth: usize,
    ) -> ValidationReport {
        let mut rep = ValidationReport::new();
        let describe = |v: &Value| -> String {
            match v {
                Value::Struct(_) => "a structure".into(),
                other => format!("'{other}'"),
            }
        };
        match spec {
            ValueSpec::NonTerminal(nt) => return self.check_nonterminal(v, nt, path, depth + 1),
            ValueSpec::Enum(syms) => match v {
                Value::Symbol(s) if syms.contains(s) => {}
                _ => rep.error(
                    path,
                    format!("expected one of {spec}, found {}", describe(v)),
                ),
            },
            ValueSpec::Int => {
                if !matches!(v, Value::Number(Number::Int(_))) {
                    rep.error(path, format!("expected an integer, found {}", describe(v)));
                }
            }
            ValueSpec::Decimal => {
                if !matches!(v, Value::Number(Number::Decimal(_))) {
                    rep.error(path, format!("expected a decimal, found {}", describe(v)));
                }
            }
            ValueSpec::Number => {
                if !matches!(v, Value::Number(_)) {
                    rep.error(path, format!("expected a number, found {}", describe(v)));
                }
            }
            ValueSpec::Text => {
                if !matches!(v, Value::Text(_)) {
                    rep.error(path, format!("expected text, found {}", describe(v)));
                }
            }
            ValueSpec::Symbol => {
                if !matches!(v, Value::Symbol(_)) {
                    rep.error(path, format!("expected a symbol, found {}", describe(v)));
                }
            }
            ValueSpec::Range(lo, hi) => match v {
                Value::Number(Number::Int(i)) if i >= lo && hi.is_none_or(|h| *i <= h) => {}
                _ => rep.error(
                    path,
                    format!("expected an integer in {spec}, found {}", describe(v)),
                ),
            },
        }
        rep
    }

    fn check_alternative(
        &self,
        v: &Value,
        alt: &Alternative,
        path: &str,
        depth: usize,
    ) -> ValidationReport {
        let slots = match alt {
            Alternative::Value(spec) => return self.check_spec(v, spec, path, depth),
            Alternative::Structure(slots) => slots,
        };
        let mut rep = ValidationReport::new();
        let Value::Struct(fs) = v else {
            rep.error(path, "expected a structure");
            return rep;
        };
        for s in slots {
            let here = join(path, &s.slot);
            match fs.get(s.slot.as_str()) {
                Some(inner) => rep.extend(self.check_spec(inner, &s.spec, &here, depth)),
                None if s.required => rep.error(here, "required slot is missing"),
                None => {}
            }
        }
        for name in fs.slot_names() {
            if !slots.iter().any(|s| &s.slot == name) {
                let here = join(path, name);
                if self.strict {
                    rep.error(here, "unknown slot");
                } else {
                    rep.warning(here, "unknown slot");
                }
            }
        }
        rep
    }

    fn check_nonterminal(
        &self,
        v: &Value,
        nt: &Symbol,
        path: &str,
        depth: usize,
    ) -> ValidationReport {
        let mut rep = ValidationReport::new();
        if depth > 256 {
            rep.error(path, "schema recursion too deep");
            return rep;
        }
        let Some(alts) = self.productions.get(nt) else {
            rep.error(path, format!("undefined nonterminal {nt}"));
            return rep;
        };
        let mut best: Option<ValidationReport> = None;
        for alt in alts {
            let r = self.check_alternative(v, alt, path, depth);
            if !r.has_errors() {
                return r;
            }
            if best
                .as_ref()
                .is_none_or(|b| r.error_count() < b.error_count())
            {
                best = Some(r);
            }
        }
        best.unwrap_or_else(|| {
            rep.error(path, format!("{nt} has no alternatives"));
            rep
        })
    }
}

/// Checks a structure against the schema root. Never panics; an empty
/// report means the structure conforms.
pub fn validate(fs: &super::FeatureStructure, schema: &IrSchema) -> ValidationReport {
    schema.check_nonterminal(&Value::Struct(fs.clone()), &schema.root, "", 0)
}

/// Checks any value against a single spec.
pub fn validate_value(v: &Value, spec: &ValueSpec, schema: &IrSchema) -> ValidationReport {
    schema.check_spec(v, spec, "", 0)
}
