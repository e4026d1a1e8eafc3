//! The production-rule grammar language.
//!
//! Rules use the `defproduction` form:
//!
//! ```text
//! (defproduction threshold-exceeding "WU01"
//!   (:PRECOND (:CAT DECL
//!              :TEST ((coop-eq 'threshold-exceeding) (threshold-value-p)))
//!    :ACTIONS (:TEMPLATE (:OPTRULE PPtime (get-param 'time))
//!                        (:RULE THTYPE (self))
//!                        "(" (:RULE VAL (get-param 'threshold-value)) ") "
//!              :CONSTRAINTS (:GENDER (THTYPE EXCEEDS) :EQ))
//!    :PREF 0
//!    :LANG FR))
//! ```
//!
//! `:PREF` and `:LANG` are optional (defaults `0` and `ANY`). Constraint
//! participants name constituents by category, with `CAT@2` for the second
//! occurrence, or `SELF` for the rule's own exported features. Besides
//! `:EQ`, an equation can introduce a value with `:VAL <atom>`.

mod lint;
mod parse;
mod print;
mod registry;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::ir::{FeaturePath, Number, Symbol, Value};
use crate::sexpr::Pos;

pub use lint::lint_grammar;
pub use parse::{parse_grammar, TglError};
pub use print::print_grammar;
pub use registry::{
    eval_call, eval_test, EvalError, Extension, ExtensionKind, FunctionFn, PredicateFn, Registry,
    RegistryError, TestInput,
};

/// Literal argument of a test or function call. Symbols keep their dots and
/// double as feature paths.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Symbol(String),
    Number(Number),
    Text(String),
}

impl Arg {
    pub fn as_path(&self) -> Option<FeaturePath> {
        match self {
            Arg::Symbol(s) => FeaturePath::parse(s).ok(),
            _ => None,
        }
    }

    pub fn to_value(&self) -> Option<Value> {
        match self {
            Arg::Symbol(s) => Symbol::is_valid(s).then(|| Value::sym(s)),
            Arg::Number(n) => Some(Value::Number(*n)),
            Arg::Text(t) => Some(Value::Text(t.clone())),
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Symbol(s) => write!(f, "'{s}"),
            Arg::Number(n) => write!(f, "{n}"),
            Arg::Text(t) => f.write_str(&crate::sexpr::quote(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Test {
    pub predicate: String,
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Accessor {
    GetParam(FeaturePath),
    SelfInput,
}

impl Accessor {
    /// Absent when the path does not exist below `input`.
    pub fn eval<'a>(&self, input: &'a Value) -> Option<&'a Value> {
        match self {
            Accessor::SelfInput => Some(input),
            Accessor::GetParam(path) => input.get_path(path.segments()),
        }
    }
}

/// Free function form of [`Accessor::eval`].
pub fn eval_accessor<'a>(accessor: &Accessor, input: &'a Value) -> Option<&'a Value> {
    accessor.eval(input)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CallArg {
    Accessor(Accessor),
    Literal(Arg),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Canned(String),
    Rule {
        category: Symbol,
        accessor: Accessor,
    },
    OptRule {
        category: Symbol,
        accessor: Accessor,
    },
    Call {
        function: String,
        args: Vec<CallArg>,
    },
}

impl Action {
    /// Category and accessor of a rule-activating action.
    pub fn subrule(&self) -> Option<(&Symbol, &Accessor, bool)> {
        match self {
            Action::Rule { category, accessor } => Some((category, accessor, false)),
            Action::OptRule { category, accessor } => Some((category, accessor, true)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Participant {
    SelfRef,
    /// Category plus 1-based occurrence among the rule's subrule actions.
    Constituent(Symbol, usize),
}

impl fmt::Display for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Participant::SelfRef => f.write_str("SELF"),
            Participant::Constituent(c, 1) => write!(f, "{c}"),
            Participant::Constituent(c, n) => write!(f, "{c}@{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquationKind {
    Equal,
    Assign(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEquation {
    pub feature: Symbol,
    pub participants: Vec<Participant>,
    pub kind: EquationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TglRule {
    pub name: String,
    pub id: String,
    pub category: Symbol,
    pub tests: Vec<Test>,
    pub actions: Vec<Action>,
    pub constraints: Vec<FeatureEquation>,
    pub pref: i64,
    pub lang: Symbol,
    pub pos: Pos,
}

impl TglRule {
    /// Index of the action a participant refers to.
    pub fn resolve(&self, p: &Participant) -> Option<usize> {
        let Participant::Constituent(cat, occ) = p else {
            return None;
        };
        self.actions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.subrule().is_some_and(|(c, _, _)| c == cat))
            .nth(occ.checked_sub(1)?)
            .map(|(i, _)| i)
    }

    pub fn matches_language(&self, lang: &Symbol) -> bool {
        self.lang == "ANY" || &self.lang == lang
    }
}

/// Parsed rules plus the registry their tests and calls resolve against.
#[derive(Clone)]
pub struct Grammar {
    rules: Vec<TglRule>,
    by_category: HashMap<Symbol, Vec<usize>>,
    by_id: HashMap<String, usize>,
    registry: Arc<Registry>,
}

impl fmt::Debug for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grammar")
            .field("rules", &self.rules.len())
            .finish()
    }
}

impl Grammar {
    pub fn new(registry: Arc<Registry>) -> Grammar {
        Grammar {
            rules: Vec::new(),
            by_category: HashMap::new(),
            by_id: HashMap::new(),
            registry,
        }
    }

    /// Parses rule text against the built-in registry.
    pub fn parse(text: &str) -> Result<Grammar, TglError> {
        parse_grammar(text)
    }

    /// Parses rule text and appends the rules; rule ids must stay unique.
    pub fn add_source(&mut self, text: &str) -> Result<(), TglError> {
        for rule in parse::parse_rules(text)? {
            self.push(rule)?;
        }
        Ok(())
    }

    pub fn push(&mut self, rule: TglRule) -> Result<(), TglError> {
        if self.by_id.contains_key(&rule.id) {
            return Err(TglError::DuplicateId {
                id: rule.id.clone(),
                pos: rule.pos,
            });
        }
        let idx = self.rules.len();
        self.by_id.insert(rule.id.clone(), idx);
        self.by_category
            .entry(rule.category.clone())
            .or_default()
            .push(idx);
        self.rules.push(rule);
        Ok(())
    }

    pub fn rules(&self) -> &[TglRule] {
        &self.rules
    }

    pub fn rule(&self, id: &str) -> Option<&TglRule> {
        self.by_id.get(id).map(|&i| &self.rules[i])
    }

    /// Index of a rule in file order.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Rules of a category in file order, all languages.
    pub fn rules_for<'a>(&'a self, category: &Symbol) -> impl Iterator<Item = &'a TglRule> + 'a {
        self.by_category
            .get(category)
            .into_iter()
            .flatten()
            .map(|&i| &self.rules[i])
    }

    pub fn has_category(&self, category: &Symbol) -> bool {
        self.by_category.contains_key(category)
    }

    /// Language tags used by rules, without `ANY`.
    pub fn languages(&self) -> BTreeSet<Symbol> {
        self.rules
            .iter()
            .filter(|r| r.lang != "ANY")
            .map(|r| r.lang.clone())
            .collect()
    }

    /// Rules usable for a language: its own plus `ANY`.
    pub fn rule_count_for(&self, lang: &Symbol) -> usize {
        self.rules
            .iter()
            .filter(|r| r.matches_language(lang))
            .count()
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn set_pref(&mut self, id: &str, pref: i64) -> bool {
        match self.by_id.get(id) {
            Some(&i) => {
                self.rules[i].pref = pref;
                true
            }
            None => false,
        }
    }
}

/// Maps an IR `LANGUAGE` value (FRENCH, GERMAN, ENGLISH) onto the short rule
/// tag; other symbols pass through.
pub fn language_tag(v: &Value) -> Option<Symbol> {
    let s = v.as_symbol()?;
    Some(Symbol::new(match s.as_str() {
        "FRENCH" => "FR",
        "GERMAN" => "DE",
        "ENGLISH" => "EN",
        other => other,
    }))
}

/// Inverse of [`language_tag`] for the three bundled languages.
pub fn language_name(tag: &Symbol) -> Symbol {
    Symbol::new(match tag.as_str() {
        "FR" => "FRENCH",
        "DE" => "GERMAN",
        "EN" => "ENGLISH",
        other => other,
    })
}
