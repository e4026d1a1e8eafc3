use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Accessor, Action, CallArg, ExtensionKind, Grammar, Participant, TglRule};
use crate::diagnostics::ValidationReport;
use crate::ir::schema::ValueSpec;
use crate::ir::{IrSchema, Symbol};

fn loc(r: &TglRule) -> String {
    format!("rule {}", r.id)
}

/// Checks a grammar against its registry and an IR schema.
///
/// Errors: subrule categories without rules for some language, unknown or
/// misused predicates and functions, equations naming missing constituents.
/// Warnings: accessor paths the schema cannot produce for the category's
/// input, and rules unreachable from `start`. Accessor checking and
/// reachability are skipped when `start` is `None`.
pub fn lint_grammar(g: &Grammar, schema: &IrSchema, start: Option<&Symbol>) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let languages = g.languages();
    for r in g.rules() {
        check_categories(g, r, &languages, &mut rep);
        check_extensions(g, r, &mut rep);
        for eq in &r.constraints {
            for p in &eq.participants {
                if matches!(p, Participant::Constituent(..)) && r.resolve(p).is_none() {
                    rep.error(
                        loc(r),
                        format!(
                            "equation on {} names {p}, which is not a constituent",
                            eq.feature
                        ),
                    );
                }
            }
        }
    }
    if let Some(start) = start {
        if !g.has_category(start) {
            rep.error("", format!("start category {start} has no rules"));
        }
        check_accessors(g, schema, start, &mut rep);
        let reached = reachable(g, start);
        for r in g.rules() {
            if !reached.contains(&r.category) {
                rep.warning(
                    loc(r),
                    format!("category {} is unreachable from {start}", r.category),
                );
            }
        }
    }
    rep
}

fn check_categories(
    g: &Grammar,
    r: &TglRule,
    languages: &BTreeSet<Symbol>,
    rep: &mut ValidationReport,
) {
    let needed: Vec<Symbol> = if r.lang == "ANY" {
        languages.iter().cloned().collect()
    } else {
        vec![r.lang.clone()]
    };
    let mut reported = BTreeSet::new();
    for a in &r.actions {
        let Some((cat, _, _)) = a.subrule() else {
            continue;
        };
        if !reported.insert(cat.clone()) {
            continue;
        }
        if !g.has_category(cat) {
            rep.error(
                loc(r),
                format!("dangling category {cat}: no rule has this category"),
            );
            continue;
        }
        for lang in &needed {
            if !g.rules_for(cat).any(|c| c.matches_language(lang)) {
                rep.error(
                    loc(r),
                    format!("dangling category {cat}: no rule for language {lang}"),
                );
            }
        }
    }
}

fn check_extensions(g: &Grammar, r: &TglRule, rep: &mut ValidationReport) {
    let reg = g.registry();
    for t in &r.tests {
        match reg.lookup(&t.predicate) {
            None => rep.error(loc(r), format!("unknown predicate {}", t.predicate)),
            Some((ExtensionKind::Function, _)) => rep.error(
                loc(r),
                format!("{} is a function, not a predicate", t.predicate),
            ),
            Some((_, arity)) if arity != t.args.len() => rep.error(
                loc(r),
                format!(
                    "predicate {} takes {arity} argument(s), given {}",
                    t.predicate,
                    t.args.len()
                ),
            ),
            _ => {}
        }
    }
    for a in &r.actions {
        let Action::Call { function, args } = a else {
            continue;
        };
        match reg.lookup(function) {
            None => rep.error(loc(r), format!("unknown function {function}")),
            Some((ExtensionKind::Predicate, _)) => {
                rep.error(loc(r), format!("{function} is a predicate, not a function"))
            }
            Some((_, arity)) if arity != args.len() => rep.error(
                loc(r),
                format!(
                    "function {function} takes {arity} argument(s), given {}",
                    args.len()
                ),
            ),
            _ => {}
        }
    }
}

fn reachable(g: &Grammar, start: &Symbol) -> BTreeSet<Symbol> {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(cat) = queue.pop_front() {
        for r in g.rules_for(&cat) {
            for a in &r.actions {
                if let Some((c, _, _)) = a.subrule() {
                    if seen.insert(c.clone()) {
                        queue.push_back(c.clone());
                    }
                }
            }
        }
    }
    seen
}

fn accessor_specs(schema: &IrSchema, input: &[ValueSpec], acc: &Accessor) -> Vec<ValueSpec> {
    match acc {
        Accessor::SelfInput => input.to_vec(),
        Accessor::GetParam(p) => schema.resolve_path(input, p),
    }
}

/// Propagates the possible input specs of each category from the schema
/// root and warns about accessor paths that resolve to nothing.
fn check_accessors(g: &Grammar, schema: &IrSchema, start: &Symbol, rep: &mut ValidationReport) {
    let mut inputs: BTreeMap<Symbol, Vec<ValueSpec>> = BTreeMap::new();
    inputs.insert(
        start.clone(),
        vec![ValueSpec::NonTerminal(schema.root().clone())],
    );
    let mut visited = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(cat) = queue.pop_front() {
        let specs = inputs[&cat].clone();
        for r in g.rules_for(&cat) {
            for a in &r.actions {
                let Some((child, acc, _)) = a.subrule() else {
                    continue;
                };
                let out = accessor_specs(schema, &specs, acc);
                let entry = inputs.entry(child.clone()).or_default();
                let before = entry.len();
                for s in out {
                    if !entry.contains(&s) {
                        entry.push(s);
                    }
                }
                if entry.len() > before || visited.insert(child.clone()) {
                    queue.push_back(child.clone());
                }
            }
        }
    }
    let mut warned = BTreeSet::new();
    for r in g.rules() {
        let Some(specs) = inputs.get(&r.category).filter(|s| !s.is_empty()) else {
            continue;
        };
        let mut accessors: Vec<&Accessor> = Vec::new();
        for a in &r.actions {
            match a {
                Action::Rule { accessor, .. } | Action::OptRule { accessor, .. } => {
                    accessors.push(accessor)
                }
                Action::Call { args, .. } => {
                    accessors.extend(args.iter().filter_map(|c| match c {
                        CallArg::Accessor(acc) => Some(acc),
                        CallArg::Literal(_) => None,
                    }))
                }
                Action::Canned(_) => {}
            }
        }
        for acc in accessors {
            if let Accessor::GetParam(p) = acc {
                if schema.resolve_path(specs, p).is_empty()
                    && warned.insert((r.id.clone(), p.clone()))
                {
                    rep.warning(
                        loc(r),
                        format!(
                            "path {p} is not legal for the input of category {}",
                            r.category
                        ),
                    );
                }
            }
        }
    }
}
