//! Feature structures: the intermediate representation shared by the text
//! organizer and the realizer.

mod edit;
mod hash;
pub mod schema;
mod text;

use std::fmt;

pub use edit::{Edit, EditError};
pub use hash::{canonical_form, canonical_hash, Digest};
pub use schema::{parse_schema, validate, IrSchema, SchemaError};
pub use text::{parse_ir, parse_value, serialize_ir, serialize_pretty, serialize_value, IrError};
pub(crate) use text::{parse_number as text_number, value_from};

/// An uppercase identifier. Input is case-folded on construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(s: &str) -> Symbol {
        Symbol(s.to_ascii_uppercase())
    }

    /// True for a letter followed by letters, digits, `-` or `_`.
    pub fn is_valid(s: &str) -> bool {
        let mut chars = s.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl PartialEq<str> for Symbol {
    fn eq(&self, other: &str) -> bool {
        self.0.eq_ignore_ascii_case(other)
    }
}

impl PartialEq<&str> for Symbol {
    fn eq(&self, other: &&str) -> bool {
        self.0.eq_ignore_ascii_case(other)
    }
}

/// Integers and decimals are kept apart; `600` and `600.0` are different values.
#[derive(Debug, Clone, Copy)]
pub enum Number {
    Int(i64),
    Decimal(f64),
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Int(a), Number::Int(b)) => a == b,
            (Number::Decimal(a), Number::Decimal(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Number {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Decimal(d) => d,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Decimal(d) => {
                let s = format!("{d}");
                if s.contains('.') {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Symbol(Symbol),
    Number(Number),
    Text(String),
    Struct(FeatureStructure),
}

impl Value {
    pub fn sym(s: &str) -> Value {
        Value::Symbol(Symbol::new(s))
    }

    pub fn int(i: i64) -> Value {
        Value::Number(Number::Int(i))
    }

    pub fn decimal(d: f64) -> Value {
        Value::Number(Number::Decimal(d))
    }

    pub fn text(s: &str) -> Value {
        Value::Text(s.to_string())
    }

    pub fn is_atomic(&self) -> bool {
        !matches!(self, Value::Struct(_))
    }

    pub fn as_struct(&self) -> Option<&FeatureStructure> {
        match self {
            Value::Struct(fs) => Some(fs),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self {
            Value::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(t) => Some(t),
            _ => None,
        }
    }

    /// Value at `path` below this value; the empty path is the value itself.
    pub fn get_path(&self, path: &[Symbol]) -> Option<&Value> {
        match path.split_first() {
            None => Some(self),
            Some((head, rest)) => self.as_struct()?.get(head.as_str())?.get_path(rest),
        }
    }

    pub fn digest(&self) -> Digest {
        hash::value_digest(self)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_value(self))
    }
}

impl From<FeatureStructure> for Value {
    fn from(fs: FeatureStructure) -> Self {
        Value::Struct(fs)
    }
}

/// Attribute-value matrix. Slot order is kept for printing but ignored by
/// equality.
#[derive(Debug, Clone, Default)]
pub struct FeatureStructure {
    slots: Vec<(Symbol, Value)>,
}

impl PartialEq for FeatureStructure {
    fn eq(&self, other: &Self) -> bool {
        self.slots.len() == other.slots.len()
            && self
                .slots
                .iter()
                .all(|(k, v)| other.get(k.as_str()) == Some(v))
    }
}

impl FeatureStructure {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from pairs; panics on a duplicate slot. Meant for literals in
    /// code and tests.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Value)>,
        S: AsRef<str>,
    {
        let mut fs = FeatureStructure::new();
        for (k, v) in pairs {
            let k = Symbol::new(k.as_ref());
            assert!(fs.get(k.as_str()).is_none(), "duplicate slot {k}");
            fs.slots.push((k, v));
        }
        fs
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Value)> {
        self.slots.iter().map(|(k, v)| (k, v))
    }

    pub fn slot_names(&self) -> impl Iterator<Item = &Symbol> {
        self.slots.iter().map(|(k, _)| k)
    }

    pub fn get(&self, slot: &str) -> Option<&Value> {
        self.slots
            .iter()
            .find(|(k, _)| k.0.eq_ignore_ascii_case(slot))
            .map(|(_, v)| v)
    }

    pub fn get_path(&self, path: &FeaturePath) -> Option<&Value> {
        let (head, rest) = path.0.split_first()?;
        self.get(head.as_str())?.get_path(rest)
    }

    /// Replaces the slot in place if present, otherwise appends it.
    pub fn with(mut self, slot: &str, value: Value) -> Self {
        self.put(Symbol::new(slot), value);
        self
    }

    pub(crate) fn put(&mut self, slot: Symbol, value: Value) {
        match self.slots.iter_mut().find(|(k, _)| *k == slot) {
            Some(entry) => entry.1 = value,
            None => self.slots.push((slot, value)),
        }
    }

    pub(crate) fn remove(&mut self, slot: &Symbol) -> Option<Value> {
        let idx = self.slots.iter().position(|(k, _)| k == slot)?;
        Some(self.slots.remove(idx).1)
    }

    pub(crate) fn position(&self, slot: &Symbol) -> Option<usize> {
        self.slots.iter().position(|(k, _)| k == slot)
    }

    pub(crate) fn slots_mut(&mut self) -> &mut Vec<(Symbol, Value)> {
        &mut self.slots
    }

    /// Applies an edit and returns the new structure; `self` is untouched.
    pub fn edit(&self, op: &Edit) -> Result<FeatureStructure, EditError> {
        edit::apply(self, op)
    }

    pub fn digest(&self) -> Digest {
        canonical_hash(self)
    }
}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_ir(self))
    }
}

/// Dotted slot path such as `TIME.NAME.YEAR`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeaturePath(Vec<Symbol>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid feature path '{0}'")]
pub struct PathError(pub String);

impl FeaturePath {
    pub fn parse(s: &str) -> Result<FeaturePath, PathError> {
        let segs: Vec<&str> = s.split('.').collect();
        if s.is_empty() || !segs.iter().all(|seg| Symbol::is_valid(seg)) {
            return Err(PathError(s.to_string()));
        }
        Ok(FeaturePath(segs.into_iter().map(Symbol::new).collect()))
    }

    pub fn from_symbols(segs: Vec<Symbol>) -> Result<FeaturePath, PathError> {
        if segs.is_empty() {
            return Err(PathError(String::new()));
        }
        Ok(FeaturePath(segs))
    }

    pub fn segments(&self) -> &[Symbol] {
        &self.0
    }

    pub fn first(&self) -> &Symbol {
        &self.0[0]
    }

    pub fn child(&self, slot: &Symbol) -> FeaturePath {
        let mut segs = self.0.clone();
        segs.push(slot.clone());
        FeaturePath(segs)
    }

    pub fn parent(&self) -> Option<FeaturePath> {
        (self.0.len() > 1).then(|| FeaturePath(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn last(&self) -> &Symbol {
        self.0.last().expect("paths are non-empty")
    }
}

impl fmt::Display for FeaturePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(s.as_str())?;
        }
        Ok(())
    }
}

impl std::str::FromStr for FeaturePath {
    type Err = PathError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeaturePath::parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clash;

/// Unifies two atomic values; `None` stands for an unbound feature.
pub fn unify_atomic(a: Option<&Value>, b: Option<&Value>) -> Result<Option<Value>, Clash> {
    match (a, b) {
        (None, None) => Ok(None),
        (Some(x), None) | (None, Some(x)) => Ok(Some(x.clone())),
        (Some(x), Some(y)) if x == y => Ok(Some(x.clone())),
        _ => Err(Clash),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unify_cases() {
        let fem = Value::sym("FEM");
        let masc = Value::sym("MASC");
        assert_eq!(unify_atomic(Some(&fem), Some(&fem)), Ok(Some(fem.clone())));
        assert_eq!(unify_atomic(None, Some(&masc)), Ok(Some(masc.clone())));
        assert_eq!(unify_atomic(Some(&fem), Some(&masc)), Err(Clash));
        assert_eq!(unify_atomic(None, None), Ok(None));
    }

    #[test]
    fn equality_ignores_slot_order() {
        let a = FeatureStructure::from_pairs([("A", Value::int(1)), ("B", Value::int(2))]);
        let b = FeatureStructure::from_pairs([("B", Value::int(2)), ("A", Value::int(1))]);
        assert_eq!(a, b);
        assert_ne!(a, b.clone().with("B", Value::int(3)));
    }

    #[test]
    fn int_and_decimal_differ() {
        assert_ne!(Value::int(600), Value::decimal(600.0));
        assert_eq!(Number::Decimal(600.0).to_string(), "600.0");
    }

    #[test]
    fn path_parse() {
        let p = FeaturePath::parse("time.name.year").unwrap();
        assert_eq!(p.to_string(), "TIME.NAME.YEAR");
        assert!(FeaturePath::parse("").is_err());
        assert!(FeaturePath::parse("A..B").is_err());
        assert!(FeaturePath::parse("1A").is_err());
    }
}
