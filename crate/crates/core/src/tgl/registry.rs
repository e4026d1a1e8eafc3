//! Test predicates and text functions available to rules.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{Arg, CallArg, Test};
use crate::ir::{Number, Symbol, Value};

/// What a predicate sees: the rule's input and the run language.
pub struct TestInput<'a> {
    pub input: &'a Value,
    pub language: &'a Symbol,
}

pub type PredicateFn = Arc<dyn Fn(&[Arg], &TestInput<'_>) -> bool + Send + Sync>;
/// Functions map evaluated arguments (absent = `None`) to a text fragment;
/// `None` makes the calling action fail.
pub type FunctionFn = Arc<dyn Fn(&[Option<Value>]) -> Option<String> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionKind {
    Predicate,
    Function,
}

#[derive(Clone)]
pub enum Extension {
    Predicate(PredicateFn),
    Function(FunctionFn),
}

impl Extension {
    pub fn kind(&self) -> ExtensionKind {
        match self {
            Extension::Predicate(_) => ExtensionKind::Predicate,
            Extension::Function(_) => ExtensionKind::Function,
        }
    }
}

#[derive(Clone)]
struct Entry {
    arity: usize,
    ext: Extension,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("'{0}' is already registered")]
    AlreadyBound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
}

/// Name → predicate/function table. One namespace for both kinds.
#[derive(Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

fn struct_path<'a>(input: &'a Value, arg: Option<&Arg>) -> Option<&'a Value> {
    let path = arg?.as_path()?;
    input.get_path(path.segments())
}

fn values_equal(v: &Value, arg: &Arg) -> bool {
    match (v, arg) {
        (Value::Number(a), Arg::Number(b)) => a.as_f64() == b.as_f64(),
        _ => arg.to_value().is_some_and(|w| &w == v),
    }
}

/// Lower case with hyphens turned into spaces.
fn symbol_words(s: &Symbol) -> String {
    s.as_str().to_lowercase().replace('-', " ")
}

impl Registry {
    pub fn empty() -> Registry {
        Registry::default()
    }

    pub fn with_builtins() -> Registry {
        let mut r = Registry::empty();
        let mut pred = |name: &str, arity: usize, f: fn(&[Arg], &TestInput<'_>) -> bool| {
            r.register(name, arity, Extension::Predicate(Arc::new(f)))
                .expect("builtin names are distinct");
        };
        pred("coop-eq", 1, |a, t| {
            struct_path(t.input, Some(&Arg::Symbol("COOP".into())))
                .is_some_and(|v| values_equal(v, &a[0]))
        });
        pred("path-present", 1, |a, t| {
            struct_path(t.input, a.first()).is_some()
        });
        pred("path-absent", 1, |a, t| {
            struct_path(t.input, a.first()).is_none()
        });
        pred("path-eq", 2, |a, t| {
            struct_path(t.input, a.first()).is_some_and(|v| values_equal(v, &a[1]))
        });
        pred("path-neq", 2, |a, t| {
            struct_path(t.input, a.first()).is_some_and(|v| !values_equal(v, &a[1]))
        });
        pred("path-gt", 2, |a, t| {
            let (Some(Value::Number(v)), Arg::Number(n)) = (struct_path(t.input, a.first()), &a[1])
            else {
                return false;
            };
            v.as_f64() > n.as_f64()
        });
        pred("self-eq", 1, |a, t| values_equal(t.input, &a[0]));
        pred("lang-eq", 1, |a, t| match &a[0] {
            Arg::Symbol(s) => t.language == s.as_str(),
            _ => false,
        });
        pred("threshold-value-p", 0, |_, t| {
            struct_path(t.input, Some(&Arg::Symbol("THRESHOLD-VALUE".into()))).is_some()
        });

        let mut fun = |name: &str, arity: usize, f: fn(&[Option<Value>]) -> Option<String>| {
            r.register(name, arity, Extension::Function(Arc::new(f)))
                .expect("builtin names are distinct");
        };
        fun("text", 1, |a| {
            Some(match a[0].as_ref()? {
                Value::Text(t) => t.clone(),
                Value::Symbol(s) => symbol_words(s),
                Value::Number(n) => n.to_string(),
                Value::Struct(_) => return None,
            })
        });
        fun("number", 1, |a| match a[0].as_ref()? {
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        });
        fun("decimal1", 1, |a| match a[0].as_ref()? {
            Value::Number(n) => Some(format!("{:.1}", n.as_f64())),
            _ => None,
        });
        fun("decimal-comma", 1, |a| match a[0].as_ref()? {
            Value::Number(n) => Some(format!("{:.1}", n.as_f64()).replace('.', ",")),
            _ => None,
        });
        fun("season-year", 2, |a| {
            let season = a[0].as_ref()?.as_symbol()?;
            let Number::Int(year) = a[1].as_ref()?.as_number()? else {
                return None;
            };
            Some(if season == "WINTER" {
                format!("{year}/{:02}", (year + 1).rem_euclid(100))
            } else {
                year.to_string()
            })
        });
        fun("spaced", 1, |a| match a[0].as_ref()? {
            Value::Text(t) => Some(t.replace('-', " ")),
            Value::Symbol(s) => Some(symbol_words(s)),
            _ => None,
        });
        r
    }

    pub fn register(
        &mut self,
        name: &str,
        arity: usize,
        ext: Extension,
    ) -> Result<(), RegistryError> {
        let key = name.to_ascii_lowercase();
        if self.entries.contains_key(&key) {
            return Err(RegistryError::AlreadyBound(key));
        }
        self.entries.insert(key, Entry { arity, ext });
        Ok(())
    }

    pub fn register_predicate<F>(
        &mut self,
        name: &str,
        arity: usize,
        f: F,
    ) -> Result<(), RegistryError>
    where
        F: Fn(&[Arg], &TestInput<'_>) -> bool + Send + Sync + 'static,
    {
        self.register(name, arity, Extension::Predicate(Arc::new(f)))
    }

    pub fn register_function<F>(
        &mut self,
        name: &str,
        arity: usize,
        f: F,
    ) -> Result<(), RegistryError>
    where
        F: Fn(&[Option<Value>]) -> Option<String> + Send + Sync + 'static,
    {
        self.register(name, arity, Extension::Function(Arc::new(f)))
    }

    /// Kind and arity of a registered name.
    pub fn lookup(&self, name: &str) -> Option<(ExtensionKind, usize)> {
        self.entries
            .get(&name.to_ascii_lowercase())
            .map(|e| (e.ext.kind(), e.arity))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn predicate(&self, name: &str) -> Option<&PredicateFn> {
        match self.entries.get(name).map(|e| &e.ext) {
            Some(Extension::Predicate(f)) => Some(f),
            _ => None,
        }
    }

    fn function(&self, name: &str) -> Option<&FunctionFn> {
        match self.entries.get(name).map(|e| &e.ext) {
            Some(Extension::Function(f)) => Some(f),
            _ => None,
        }
    }
}

/// Evaluates a precondition. A test whose argument count does not match the
/// registered arity is false.
pub fn eval_test(
    test: &Test,
    input: &Value,
    registry: &Registry,
    language: &Symbol,
) -> Result<bool, EvalError> {
    let f = registry
        .predicate(&test.predicate)
        .ok_or_else(|| EvalError::UnknownPredicate(test.predicate.clone()))?;
    let (_, arity) = registry.lookup(&test.predicate).expect("present");
    if test.args.len() != arity {
        return Ok(false);
    }
    Ok(f(&test.args, &TestInput { input, language }))
}

/// Runs a text function on the current input. `Ok(None)` means the function
/// produced nothing and the action fails.
pub fn eval_call(
    function: &str,
    args: &[CallArg],
    input: &Value,
    registry: &Registry,
) -> Result<Option<String>, EvalError> {
    let f = registry
        .function(function)
        .ok_or_else(|| EvalError::UnknownFunction(function.to_string()))?;
    let (_, arity) = registry.lookup(function).expect("present");
    if args.len() != arity {
        return Ok(None);
    }
    let values: Vec<Option<Value>> = args
        .iter()
        .map(|a| match a {
            CallArg::Accessor(acc) => acc.eval(input).cloned(),
            CallArg::Literal(lit) => lit.to_value(),
        })
        .collect();
    Ok(f(&values))
}
