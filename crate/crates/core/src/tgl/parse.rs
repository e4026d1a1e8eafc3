use std::sync::Arc;

use thiserror::Error;

use super::{
    Accessor, Action, Arg, CallArg, EquationKind, FeatureEquation, Grammar, Participant, Registry,
    Test, TglRule,
};
use crate::ir::{FeaturePath, Symbol, Value};
use crate::sexpr::{self, Node, Pos, SExpr, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TglError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("duplicate rule id \"{id}\" at line {}", pos.line)]
    DuplicateId { id: String, pos: Pos },
    #[error("unknown action keyword {keyword} at line {}, column {}", pos.line, pos.col)]
    UnknownAction { keyword: String, pos: Pos },
    #[error("rule \"{id}\" has an empty template (line {})", pos.line)]
    EmptyTemplate { id: String, pos: Pos },
}

fn err(pos: Pos, msg: impl Into<String>) -> TglError {
    TglError::Syntax(SyntaxError::new(pos, msg))
}

/// Parses a rule file into a grammar backed by the built-in registry.
pub fn parse_grammar(text: &str) -> Result<Grammar, TglError> {
    let mut g = Grammar::new(Arc::new(Registry::with_builtins()));
    g.add_source(text)?;
    Ok(g)
}

pub(super) fn parse_rules(text: &str) -> Result<Vec<TglRule>, TglError> {
    let exprs = sexpr::read_all(text, ';')?;
    exprs.iter().map(rule_from).collect()
}

fn keyword(e: &SExpr) -> Option<String> {
    e.as_atom()
        .filter(|a| a.starts_with(':') && a.len() > 1)
        .map(|a| a[1..].to_ascii_uppercase())
}

/// Splits a keyword/value list into pairs. Values are single expressions.
fn plist<'a>(items: &'a [SExpr], what: &str) -> Result<Vec<(String, &'a SExpr, Pos)>, TglError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let Some(kw) = keyword(&items[i]) else {
            return Err(err(items[i].pos, format!("expected a keyword in {what}")));
        };
        let Some(value) = items.get(i + 1) else {
            return Err(err(items[i].pos, format!(":{kw} needs a value")));
        };
        out.push((kw, value, items[i].pos));
        i += 2;
    }
    Ok(out)
}

fn symbol_atom(e: &SExpr, what: &str) -> Result<Symbol, TglError> {
    match e.as_atom() {
        Some(a) if Symbol::is_valid(a.trim_start_matches('\'')) => {
            Ok(Symbol::new(a.trim_start_matches('\'')))
        }
        _ => Err(err(e.pos, format!("expected {what}"))),
    }
}

fn rule_from(expr: &SExpr) -> Result<TglRule, TglError> {
    let Some(items) = expr.as_list() else {
        return Err(err(expr.pos, "expected (defproduction ...)"));
    };
    if !items.first().is_some_and(|h| h.is_keyword("defproduction")) {
        return Err(err(expr.pos, "expected (defproduction ...)"));
    }
    let [_, name, id, body] = items else {
        return Err(err(
            expr.pos,
            "defproduction takes a name, a quoted id and a body",
        ));
    };
    let name = name
        .as_atom()
        .ok_or_else(|| err(name.pos, "rule name must be an atom"))?
        .to_ascii_lowercase();
    let Node::Str(id_str) = &id.node else {
        return Err(err(id.pos, "rule id must be a quoted string"));
    };
    let id_str = id_str.clone();
    let body_items = body
        .as_list()
        .ok_or_else(|| err(body.pos, "rule body must be a list"))?;

    let mut category = None;
    let mut tests = Vec::new();
    let mut actions = None;
    let mut constraints = Vec::new();
    let mut pref = 0;
    let mut lang = Symbol::new("ANY");
    for (kw, value, kpos) in plist(body_items, "rule body")? {
        match kw.as_str() {
            "PRECOND" => {
                let pre = value
                    .as_list()
                    .ok_or_else(|| err(value.pos, ":PRECOND takes a list"))?;
                for (pk, pv, _) in plist(pre, ":PRECOND")? {
                    match pk.as_str() {
                        "CAT" => category = Some(symbol_atom(pv, "a category symbol")?),
                        "TEST" => {
                            let list = pv
                                .as_list()
                                .ok_or_else(|| err(pv.pos, ":TEST takes a list of tests"))?;
                            tests = list.iter().map(test_from).collect::<Result<_, _>>()?;
                        }
                        other => {
                            return Err(err(pv.pos, format!("unknown :PRECOND field :{other}")))
                        }
                    }
                }
            }
            "ACTIONS" => {
                let list = value
                    .as_list()
                    .ok_or_else(|| err(value.pos, ":ACTIONS takes a list"))?;
                let (acts, cons) = actions_from(list, value.pos)?;
                actions = Some(acts);
                constraints = cons;
            }
            "PREF" => {
                pref = value
                    .as_atom()
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| err(value.pos, ":PREF takes an integer"))?;
            }
            "LANG" => lang = symbol_atom(value, "a language tag")?,
            other => return Err(err(kpos, format!("unknown rule field :{other}"))),
        }
    }
    let category = category.ok_or_else(|| err(expr.pos, "rule has no :CAT"))?;
    let actions = actions.unwrap_or_default();
    if actions.is_empty() {
        return Err(TglError::EmptyTemplate {
            id: id_str,
            pos: expr.pos,
        });
    }
    Ok(TglRule {
        name,
        id: id_str,
        category,
        tests,
        actions,
        constraints,
        pref,
        lang,
        pos: expr.pos,
    })
}

fn arg_from(e: &SExpr) -> Result<Arg, TglError> {
    match &e.node {
        Node::Str(s) => Ok(Arg::Text(s.clone())),
        Node::Atom(a) => {
            let raw = a.trim_start_matches('\'');
            if let Some(n) = crate::ir::text_number(raw) {
                return Ok(Arg::Number(n));
            }
            if raw.split('.').all(Symbol::is_valid) {
                Ok(Arg::Symbol(raw.to_ascii_uppercase()))
            } else {
                Err(err(e.pos, format!("bad argument '{a}'")))
            }
        }
        Node::List(..) => Err(err(e.pos, "expected a literal argument")),
    }
}

fn test_from(e: &SExpr) -> Result<Test, TglError> {
    let items = e
        .as_list()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| err(e.pos, "a test is (predicate args...)"))?;
    let predicate = items[0]
        .as_atom()
        .ok_or_else(|| err(items[0].pos, "predicate name must be an atom"))?
        .to_ascii_lowercase();
    let args = items[1..].iter().map(arg_from).collect::<Result<_, _>>()?;
    Ok(Test { predicate, args })
}

fn accessor_from(e: &SExpr) -> Result<Accessor, TglError> {
    let items = e
        .as_list()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| err(e.pos, "expected an accessor: (self) or (get-param 'slot)"))?;
    match (
        items[0].as_atom().map(str::to_ascii_lowercase).as_deref(),
        &items[1..],
    ) {
        (Some("self"), []) => Ok(Accessor::SelfInput),
        (Some("get-param"), [p]) => {
            let raw = p
                .as_atom()
                .map(|a| a.trim_start_matches('\''))
                .ok_or_else(|| err(p.pos, "get-param takes a slot path"))?;
            FeaturePath::parse(raw)
                .map(Accessor::GetParam)
                .map_err(|_| err(p.pos, format!("bad slot path '{raw}'")))
        }
        _ => Err(err(
            e.pos,
            "expected an accessor: (self) or (get-param 'slot)",
        )),
    }
}

fn action_from(e: &SExpr) -> Result<Action, TglError> {
    match &e.node {
        Node::Str(s) => Ok(Action::Canned(s.clone())),
        Node::List(_, items) if !items.is_empty() => {
            let kw = keyword(&items[0])
                .ok_or_else(|| err(items[0].pos, "expected an action keyword"))?;
            match kw.as_str() {
                "RULE" | "OPTRULE" => {
                    let [_, cat, acc] = items.as_slice() else {
                        return Err(err(e.pos, format!("(:{kw} CATEGORY accessor)")));
                    };
                    let category = symbol_atom(cat, "a category")?;
                    let accessor = accessor_from(acc)?;
                    Ok(if kw == "RULE" {
                        Action::Rule { category, accessor }
                    } else {
                        Action::OptRule { category, accessor }
                    })
                }
                "CALL" => {
                    let function = items
                        .get(1)
                        .and_then(SExpr::as_atom)
                        .ok_or_else(|| err(e.pos, "(:CALL function args...)"))?
                        .to_ascii_lowercase();
                    let args = items[2..]
                        .iter()
                        .map(|a| match a.node {
                            Node::List(..) => accessor_from(a).map(CallArg::Accessor),
                            _ => arg_from(a).map(CallArg::Literal),
                        })
                        .collect::<Result<_, _>>()?;
                    Ok(Action::Call { function, args })
                }
                _ => Err(TglError::UnknownAction {
                    keyword: format!(":{kw}"),
                    pos: items[0].pos,
                }),
            }
        }
        _ => Err(err(e.pos, "expected a string or an action list")),
    }
}

fn actions_from(
    items: &[SExpr],
    pos: Pos,
) -> Result<(Vec<Action>, Vec<FeatureEquation>), TglError> {
    let mut actions = Vec::new();
    let mut constraints = Vec::new();
    let mut i = 0;
    let mut seen_template = false;
    while i < items.len() {
        match keyword(&items[i]).as_deref() {
            Some("TEMPLATE") => {
                seen_template = true;
                i += 1;
                while i < items.len() && keyword(&items[i]).is_none() {
                    actions.push(action_from(&items[i])?);
                    i += 1;
                }
            }
            Some("CONSTRAINTS") => {
                let list = items
                    .get(i + 1)
                    .and_then(SExpr::as_list)
                    .ok_or_else(|| err(items[i].pos, ":CONSTRAINTS takes a list"))?;
                constraints = equations_from(list)?;
                i += 2;
            }
            Some(other) => {
                return Err(err(
                    items[i].pos,
                    format!("unknown :ACTIONS field :{other}"),
                ))
            }
            None => return Err(err(items[i].pos, "expected :TEMPLATE or :CONSTRAINTS")),
        }
    }
    if !seen_template {
        return Err(err(pos, ":ACTIONS has no :TEMPLATE"));
    }
    Ok((actions, constraints))
}

fn participant_from(e: &SExpr) -> Result<Participant, TglError> {
    let a = e
        .as_atom()
        .ok_or_else(|| err(e.pos, "expected a constituent name"))?;
    if a.eq_ignore_ascii_case("self") {
        return Ok(Participant::SelfRef);
    }
    let (cat, occ) = match a.split_once('@') {
        Some((c, n)) => (
            c,
            n.parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| err(e.pos, format!("bad occurrence index in '{a}'")))?,
        ),
        None => (a, 1),
    };
    if !Symbol::is_valid(cat) {
        return Err(err(e.pos, format!("bad constituent '{a}'")));
    }
    Ok(Participant::Constituent(Symbol::new(cat), occ))
}

fn equations_from(items: &[SExpr]) -> Result<Vec<FeatureEquation>, TglError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let feature = keyword(&items[i])
            .filter(|k| Symbol::is_valid(k))
            .ok_or_else(|| err(items[i].pos, "expected a feature keyword like :GENDER"))?;
        let parts = items
            .get(i + 1)
            .and_then(SExpr::as_list)
            .ok_or_else(|| err(items[i].pos, "expected a participant list"))?;
        let participants: Vec<Participant> = parts
            .iter()
            .map(participant_from)
            .collect::<Result<_, _>>()?;
        if participants.is_empty() {
            return Err(err(items[i].pos, "equation has no participants"));
        }
        let kind_expr = items
            .get(i + 2)
            .ok_or_else(|| err(items[i].pos, "expected :EQ or :VAL"))?;
        let kind = match keyword(kind_expr).as_deref() {
            Some("EQ") => {
                i += 3;
                EquationKind::Equal
            }
            Some("VAL") => {
                let v = items
                    .get(i + 3)
                    .ok_or_else(|| err(kind_expr.pos, ":VAL needs a value"))?;
                let value = match arg_from(v)? {
                    Arg::Symbol(s) if Symbol::is_valid(&s) => Value::sym(&s),
                    Arg::Number(n) => Value::Number(n),
                    Arg::Text(t) => Value::Text(t),
                    Arg::Symbol(s) => return Err(err(v.pos, format!("bad feature value '{s}'"))),
                };
                i += 4;
                EquationKind::Assign(value)
            }
            _ => return Err(err(kind_expr.pos, "expected :EQ or :VAL")),
        };
        out.push(FeatureEquation {
            feature: Symbol::new(&feature),
            participants,
            kind,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE_RULE: &str = r#"
(defproduction  threshold-exceeding "WU01"
  (:PRECOND (:CAT DECL
             :TEST ((coop-eq 'threshold-exceeding) (threshold-value-p)))
   :ACTIONS (:TEMPLATE  (:OPTRULE PPtime (get-param 'time))
                        (:OPTRULE SITEV (get-param 'site))
                        (:RULE THTYPE (self))
                        (:OPTRULE POLL (get-param 'pollutant))
                        (:OPTRULE DUR (get-param 'duration))
                        "(" (:RULE VAL (get-param 'threshold-value))
                            (:OPTRULE LAW (get-param 'law-name)) ") "
                        (:RULE EXCEEDS (get-param 'exceeds)) "."
             :CONSTRAINTS (:GENDER (THTYPE EXCEEDS) :EQ))))
"#;

    #[test]
    fn sample_rule_parses() {
        let g = parse_grammar(SAMPLE_RULE).unwrap();
        assert_eq!(g.rules().len(), 1);
        let r = &g.rules()[0];
        assert_eq!(r.id, "WU01");
        assert_eq!(r.name, "threshold-exceeding");
        assert_eq!(r.category.as_str(), "DECL");
        assert_eq!(r.tests.len(), 2);
        assert_eq!(
            r.tests[0].args,
            vec![Arg::Symbol("THRESHOLD-EXCEEDING".into())]
        );
        assert_eq!(r.actions.len(), 11);
        let canned: Vec<_> = r
            .actions
            .iter()
            .filter_map(|a| match a {
                Action::Canned(s) => Some(s.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(canned, vec!["(", ") ", "."]);
        assert_eq!(
            r.actions.iter().filter(|a| a.subrule().is_some()).count(),
            8
        );
        assert_eq!(r.constraints.len(), 1);
        let eq = &r.constraints[0];
        assert_eq!(eq.feature.as_str(), "GENDER");
        assert_eq!(eq.kind, EquationKind::Equal);
        assert_eq!(r.resolve(&eq.participants[0]), Some(2));
        assert_eq!(r.resolve(&eq.participants[1]), Some(9));
        assert_eq!(r.pref, 0);
        assert_eq!(r.lang.as_str(), "ANY");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = r#"
            (defproduction a "WU01" (:PRECOND (:CAT DECL) :ACTIONS (:TEMPLATE "x")))
            (defproduction b "WU01" (:PRECOND (:CAT DECL) :ACTIONS (:TEMPLATE "y")))"#;
        assert!(matches!(
            parse_grammar(text),
            Err(TglError::DuplicateId { ref id, .. }) if id == "WU01"
        ));
    }

    #[test]
    fn empty_template_rejected() {
        let text = r#"(defproduction a "A1" (:PRECOND (:CAT DECL) :ACTIONS (:TEMPLATE)))"#;
        assert!(matches!(
            parse_grammar(text),
            Err(TglError::EmptyTemplate { .. })
        ));
    }

    #[test]
    fn unknown_action_keyword() {
        let text = r#"(defproduction a "A1" (:PRECOND (:CAT DECL) :ACTIONS (:TEMPLATE (:MAYBE X (self)))))"#;
        assert!(matches!(
            parse_grammar(text),
            Err(TglError::UnknownAction { ref keyword, .. }) if keyword == ":MAYBE"
        ));
    }

    #[test]
    fn pref_lang_and_assignments() {
        let text = r#"
          (defproduction fem "T1"
            (:PRECOND (:CAT THTYPE :TEST ((self-eq 'vorwarnstufe)))
             :ACTIONS (:TEMPLATE "la valeur " (:CALL text (self) "x")
                       :CONSTRAINTS (:GENDER (SELF) :VAL FEM :NUMBER (SELF X@2) :EQ))
             :PREF -3 :LANG fr))"#;
        let g = parse_grammar(text).unwrap();
        let r = &g.rules()[0];
        assert_eq!(r.pref, -3);
        assert_eq!(r.lang.as_str(), "FR");
        assert_eq!(
            r.constraints[0].kind,
            EquationKind::Assign(Value::sym("FEM"))
        );
        assert_eq!(
            r.constraints[1].participants,
            vec![
                Participant::SelfRef,
                Participant::Constituent(Symbol::new("X"), 2)
            ]
        );
        match &r.actions[1] {
            Action::Call { function, args } => {
                assert_eq!(function, "text");
                assert_eq!(args.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_location() {
        let err = parse_grammar(
            "(defproduction a \"A1\"\n  (:PRECOND (:CAT DECL) :ACTIONS (:TEMPLATE \"x\")",
        )
        .unwrap_err();
        assert!(
            matches!(err, TglError::Syntax(ref e) if e.pos.line == 2 && e.pos.col == 3),
            "{err:?}"
        );
    }
}
