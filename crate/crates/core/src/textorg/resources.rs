//! Readers for skeleton, restructuring-schema and aggregation-rule files.
//!
//! All three use the parenthesized notation with `;` comments:
//!
//! ```text
//! (skeleton THRESHOLD-EXCEEDING
//!   (statement CONFIRMATION :when CONFIRM :uses (POLLUTANT PERIOD))
//!   (canned STATION :when DESCRIBE-STATION)
//!   (statement THRESHOLD-EXCEEDING :period COMPARE
//!              :uses (SITE POLLUTANT PERIOD LEGISLATION) :fallback NO-DATA))
//!
//! (schema threshold-value
//!   :match ((present AMOUNT) (present UNIT))
//!   :edits ((reify AMOUNT AMOUNT) (rename AMOUNT THRESHOLD-VALUE)
//!           (move UNIT THRESHOLD-VALUE.UNIT))
//!   :yields ((present THRESHOLD-VALUE.AMOUNT)))
//!
//! (memory TIME SITE)
//! (rule elide-time :when ((memory-eq TIME)) :edits ((delete TIME)))
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ir::{value_from, Edit, FeaturePath, Symbol, Value};
use crate::sexpr::{self, Pos, SExpr, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResourceError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("line {}, column {}: {message}", pos.line, pos.col)]
    Invalid { pos: Pos, message: String },
    #[error("aggregation rule {rule} edits COOP")]
    TouchesCoop { rule: String },
    #[error("duplicate {what} {name}")]
    Duplicate { what: &'static str, name: String },
}

fn invalid(pos: Pos, message: impl Into<String>) -> ResourceError {
    ResourceError::Invalid {
        pos,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SkeletonItem {
    Statement {
        assertion: Symbol,
        /// Context flag that must be set for the slot to be filled.
        when: Option<Symbol>,
        /// Binding supplying the statement's period.
        period: Symbol,
        uses: Vec<Symbol>,
        fallback: Option<Symbol>,
    },
    Canned {
        /// Binding whose value is the canned-text key.
        binding: Symbol,
        when: Option<Symbol>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub report_type: Symbol,
    pub items: Vec<SkeletonItem>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkeletonSet {
    skeletons: BTreeMap<Symbol, Skeleton>,
}

impl SkeletonSet {
    pub fn get(&self, report_type: &Symbol) -> Option<&Skeleton> {
        self.skeletons.get(report_type)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Skeleton> {
        self.skeletons.values()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Present(FeaturePath),
    Absent(FeaturePath),
    Eq(FeaturePath, Value),
    /// The discourse memory holds an equal value for the path.
    MemoryEq(FeaturePath),
    /// The previous statement has an equal value at the path.
    PreviousEq(FeaturePath),
}

impl Condition {
    pub fn path(&self) -> &FeaturePath {
        match self {
            Condition::Present(p)
            | Condition::Absent(p)
            | Condition::Eq(p, _)
            | Condition::MemoryEq(p)
            | Condition::PreviousEq(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestructuringSchema {
    pub name: String,
    pub matches: Vec<Condition>,
    pub edits: Vec<Edit>,
    pub yields: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationRule {
    pub name: String,
    pub when: Vec<Condition>,
    pub edits: Vec<Edit>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregationRules {
    /// Paths recorded in the discourse memory.
    pub memory: Vec<FeaturePath>,
    pub rules: Vec<AggregationRule>,
}

fn keyword(e: &SExpr) -> Option<String> {
    e.as_atom()
        .filter(|a| a.starts_with(':') && a.len() > 1)
        .map(|a| a[1..].to_ascii_uppercase())
}

fn symbol(e: &SExpr, what: &str) -> Result<Symbol, ResourceError> {
    e.as_atom()
        .filter(|a| Symbol::is_valid(a))
        .map(Symbol::new)
        .ok_or_else(|| invalid(e.pos, format!("expected {what}")))
}

fn path(e: &SExpr) -> Result<FeaturePath, ResourceError> {
    e.as_atom()
        .and_then(|a| FeaturePath::parse(a).ok())
        .ok_or_else(|| invalid(e.pos, "expected a feature path"))
}

fn name(e: &SExpr) -> Result<String, ResourceError> {
    e.as_atom()
        .map(str::to_ascii_lowercase)
        .ok_or_else(|| invalid(e.pos, "expected a name"))
}

fn list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], ResourceError> {
    e.as_list()
        .ok_or_else(|| invalid(e.pos, format!("expected a list of {what}")))
}

/// Keyword/value pairs following a form's head.
fn options<'a>(
    items: &'a [SExpr],
    allowed: &[&str],
) -> Result<BTreeMap<String, &'a SExpr>, ResourceError> {
    let mut out = BTreeMap::new();
    let mut i = 0;
    while i < items.len() {
        let kw = keyword(&items[i]).ok_or_else(|| invalid(items[i].pos, "expected a keyword"))?;
        if !allowed.contains(&kw.as_str()) {
            return Err(invalid(items[i].pos, format!("unknown option :{kw}")));
        }
        let v = items
            .get(i + 1)
            .ok_or_else(|| invalid(items[i].pos, format!(":{kw} needs a value")))?;
        if out.insert(kw.clone(), v).is_some() {
            return Err(invalid(items[i].pos, format!("repeated option :{kw}")));
        }
        i += 2;
    }
    Ok(out)
}

fn head<'a>(e: &'a SExpr, expected: &str) -> Result<&'a [SExpr], ResourceError> {
    let items = e
        .as_list()
        .filter(|l| l.first().is_some_and(|h| h.is_keyword(expected)))
        .ok_or_else(|| invalid(e.pos, format!("expected ({expected} ...)")))?;
    Ok(&items[1..])
}

fn value(e: &SExpr) -> Result<Value, ResourceError> {
    value_from(e).map_err(|err| invalid(e.pos, err.to_string()))
}

pub fn parse_edit(e: &SExpr) -> Result<Edit, ResourceError> {
    let items = list(e, "edit arguments")?;
    let op = items
        .first()
        .and_then(SExpr::as_atom)
        .map(str::to_ascii_lowercase)
        .ok_or_else(|| invalid(e.pos, "expected an edit such as (delete PATH)"))?;
    let args = &items[1..];
    let arity = |n: usize| -> Result<(), ResourceError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(invalid(e.pos, format!("{op} takes {n} argument(s)")))
        }
    };
    Ok(match op.as_str() {
        "set" => {
            arity(2)?;
            Edit::Set(path(&args[0])?, value(&args[1])?)
        }
        "delete" => {
            arity(1)?;
            Edit::Delete(path(&args[0])?)
        }
        "reify" => {
            arity(2)?;
            Edit::Reify(path(&args[0])?, symbol(&args[1], "a slot name")?)
        }
        "raise" => {
            arity(1)?;
            Edit::Raise(path(&args[0])?)
        }
        "rename" => {
            arity(2)?;
            Edit::Rename(path(&args[0])?, symbol(&args[1], "a slot name")?)
        }
        "move" => {
            arity(2)?;
            Edit::Move(path(&args[0])?, path(&args[1])?)
        }
        other => return Err(invalid(e.pos, format!("unknown edit {other}"))),
    })
}

fn parse_condition(e: &SExpr, with_memory: bool) -> Result<Condition, ResourceError> {
    let items = list(e, "condition arguments")?;
    let op = items
        .first()
        .and_then(SExpr::as_atom)
        .map(str::to_ascii_lowercase)
        .ok_or_else(|| invalid(e.pos, "expected a condition such as (present PATH)"))?;
    let args = &items[1..];
    let cond = match (op.as_str(), args) {
        ("present", [p]) => Condition::Present(path(p)?),
        ("absent", [p]) => Condition::Absent(path(p)?),
        ("eq", [p, v]) => Condition::Eq(path(p)?, value(v)?),
        ("memory-eq", [p]) if with_memory => Condition::MemoryEq(path(p)?),
        ("previous-eq", [p]) if with_memory => Condition::PreviousEq(path(p)?),
        _ => return Err(invalid(e.pos, format!("bad condition ({op} ...)"))),
    };
    Ok(cond)
}

fn conditions(e: Option<&&SExpr>, with_memory: bool) -> Result<Vec<Condition>, ResourceError> {
    match e {
        None => Ok(Vec::new()),
        Some(e) => list(e, "conditions")?
            .iter()
            .map(|c| parse_condition(c, with_memory))
            .collect(),
    }
}

fn edits(e: Option<&&SExpr>, pos: Pos) -> Result<Vec<Edit>, ResourceError> {
    let e = e.ok_or_else(|| invalid(pos, "missing :edits"))?;
    list(e, "edits")?.iter().map(parse_edit).collect()
}

fn when(opts: &BTreeMap<String, &SExpr>) -> Result<Option<Symbol>, ResourceError> {
    opts.get("WHEN").map(|e| symbol(e, "a flag")).transpose()
}

pub fn parse_skeletons(text: &str) -> Result<SkeletonSet, ResourceError> {
    let mut set = SkeletonSet::default();
    for form in sexpr::read_all(text, ';')? {
        let rest = head(&form, "skeleton")?;
        let Some(first) = rest.first() else {
            return Err(invalid(form.pos, "skeleton needs a report type"));
        };
        let report_type = symbol(first, "a report type")?;
        let mut items = Vec::new();
        for item in &rest[1..] {
            let parts = list(item, "skeleton items")?;
            let kind = parts
                .first()
                .and_then(SExpr::as_atom)
                .map(str::to_ascii_lowercase)
                .unwrap_or_default();
            let target = parts
                .get(1)
                .ok_or_else(|| invalid(item.pos, "skeleton item needs a name"))?;
            match kind.as_str() {
                "statement" => {
                    let opts = options(&parts[2..], &["WHEN", "PERIOD", "USES", "FALLBACK"])?;
                    let uses = match opts.get("USES") {
                        Some(u) => list(u, "bindings")?
                            .iter()
                            .map(|b| symbol(b, "a binding name"))
                            .collect::<Result<_, _>>()?,
                        None => Vec::new(),
                    };
                    items.push(SkeletonItem::Statement {
                        assertion: symbol(target, "an assertion type")?,
                        when: when(&opts)?,
                        period: match opts.get("PERIOD") {
                            Some(p) => symbol(p, "a binding name")?,
                            None => Symbol::new("PERIOD"),
                        },
                        uses,
                        fallback: opts
                            .get("FALLBACK")
                            .map(|f| symbol(f, "an assertion type"))
                            .transpose()?,
                    });
                }
                "canned" => {
                    let opts = options(&parts[2..], &["WHEN"])?;
                    items.push(SkeletonItem::Canned {
                        binding: symbol(target, "a binding name")?,
                        when: when(&opts)?,
                    });
                }
                _ => {
                    return Err(invalid(
                        item.pos,
                        "expected (statement ...) or (canned ...)",
                    ))
                }
            }
        }
        if set.skeletons.contains_key(&report_type) {
            return Err(ResourceError::Duplicate {
                what: "skeleton",
                name: report_type.to_string(),
            });
        }
        set.skeletons
            .insert(report_type.clone(), Skeleton { report_type, items });
    }
    Ok(set)
}

pub fn parse_schemata(text: &str) -> Result<Vec<RestructuringSchema>, ResourceError> {
    let mut out: Vec<RestructuringSchema> = Vec::new();
    for form in sexpr::read_all(text, ';')? {
        let rest = head(&form, "schema")?;
        let Some(first) = rest.first() else {
            return Err(invalid(form.pos, "schema needs a name"));
        };
        let name = name(first)?;
        let opts = options(&rest[1..], &["MATCH", "EDITS", "YIELDS"])?;
        if out.iter().any(|s| s.name == name) {
            return Err(ResourceError::Duplicate {
                what: "schema",
                name,
            });
        }
        out.push(RestructuringSchema {
            name,
            matches: conditions(opts.get("MATCH"), false)?,
            edits: edits(opts.get("EDITS"), form.pos)?,
            yields: conditions(opts.get("YIELDS"), false)?,
        });
    }
    Ok(out)
}

fn touches_coop(edit: &Edit) -> bool {
    let hits = |p: &FeaturePath| p.first() == "COOP";
    match edit {
        Edit::Set(p, _) | Edit::Delete(p) | Edit::Reify(p, _) | Edit::Raise(p) => hits(p),
        Edit::Rename(p, s) => hits(p) || s == "COOP",
        Edit::Move(a, b) => hits(a) || hits(b),
    }
}

pub fn parse_aggregation(text: &str) -> Result<AggregationRules, ResourceError> {
    let mut out = AggregationRules::default();
    for form in sexpr::read_all(text, ';')? {
        let items = form
            .as_list()
            .ok_or_else(|| invalid(form.pos, "expected (memory ...) or (rule ...)"))?;
        let kind = items
            .first()
            .and_then(SExpr::as_atom)
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match kind.as_str() {
            "memory" => {
                for p in &items[1..] {
                    let p = path(p)?;
                    if !out.memory.contains(&p) {
                        out.memory.push(p);
                    }
                }
            }
            "rule" => {
                let Some(first) = items.get(1) else {
                    return Err(invalid(form.pos, "rule needs a name"));
                };
                let rule_name = name(first)?;
                let opts = options(&items[2..], &["WHEN", "EDITS"])?;
                let edits = edits(opts.get("EDITS"), form.pos)?;
                if edits.iter().any(touches_coop) {
                    return Err(ResourceError::TouchesCoop { rule: rule_name });
                }
                if out.rules.iter().any(|r| r.name == rule_name) {
                    return Err(ResourceError::Duplicate {
                        what: "aggregation rule",
                        name: rule_name,
                    });
                }
                out.rules.push(AggregationRule {
                    name: rule_name,
                    when: conditions(opts.get("WHEN"), true)?,
                    edits,
                });
            }
            _ => return Err(invalid(form.pos, "expected (memory ...) or (rule ...)")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skeleton_file() {
        let set = parse_skeletons(
            "; comment
            (skeleton THRESHOLD-EXCEEDING
              (statement CONFIRMATION :when CONFIRM :uses (POLLUTANT PERIOD))
              (canned STATION :when DESCRIBE-STATION)
              (statement THRESHOLD-EXCEEDING :period COMPARE :uses (SITE) :fallback NO-DATA))",
        )
        .unwrap();
        let sk = set.get(&Symbol::new("THRESHOLD-EXCEEDING")).unwrap();
        assert_eq!(sk.items.len(), 3);
        match &sk.items[2] {
            SkeletonItem::Statement {
                period,
                fallback,
                uses,
                when,
                ..
            } => {
                assert_eq!(period.as_str(), "COMPARE");
                assert_eq!(fallback.as_ref().unwrap().as_str(), "NO-DATA");
                assert_eq!(uses.len(), 1);
                assert!(when.is_none());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_file() {
        let s = parse_schemata(
            "(schema threshold-value :match ((present AMOUNT) (eq COOP THRESHOLD-EXCEEDING))
               :edits ((reify AMOUNT AMOUNT) (rename AMOUNT THRESHOLD-VALUE) (move UNIT THRESHOLD-VALUE.UNIT)
                       (set X.Y \"t\") (raise R) (delete Q))
               :yields ((present THRESHOLD-VALUE.AMOUNT)))",
        )
        .unwrap();
        assert_eq!(s[0].edits.len(), 6);
        assert_eq!(
            s[0].matches[1],
            Condition::Eq("COOP".parse().unwrap(), Value::sym("THRESHOLD-EXCEEDING"))
        );
        assert!(parse_schemata("(schema s :match ((memory-eq TIME)) :edits ())").is_err());
    }

    #[test]
    fn aggregation_file() {
        let r = parse_aggregation(
            "(memory TIME SITE)
             (rule elide-time :when ((memory-eq TIME)) :edits ((delete TIME)))
             (rule either :when ((previous-eq COOP) (previous-eq EXCEEDS.STATUS)) :edits ((set CORRESPONDENCE YES)))",
        )
        .unwrap();
        assert_eq!(r.memory.len(), 2);
        assert_eq!(r.rules.len(), 2);
        assert_eq!(
            parse_aggregation("(rule bad :when () :edits ((delete COOP)))").unwrap_err(),
            ResourceError::TouchesCoop { rule: "bad".into() }
        );
    }
}
