//! Production-system interpreter for TGL grammars.
//!
//! A category is expanded by trying its rules in conflict order (preference
//! descending, then file order). An applicable rule runs its actions left to
//! right: sub-categories are expanded depth first, and the combinations of
//! their alternatives are searched with conflict-directed backjumping, an
//! equation being checked as soon as its last constituent is bound.
//! Expansions of sub-categories are memoized per (category, input digest,
//! language) within one run.

mod equations;
mod postprocess;
mod trace;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ir::{Digest, Symbol, Value};
use crate::tgl::{
    eval_call, eval_test, language_tag, Accessor, Action, EvalError, Grammar, Participant, TglRule,
};

pub use equations::{check_equations, Features};
pub use postprocess::postprocess;
pub use trace::{format_trace, format_trace_json, TraceEvent, TraceKind};

pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options {
    /// Language tag for rule filtering; taken from the input's LANGUAGE slot
    /// when unset. With neither, rules of every language compete.
    pub language: Option<Symbol>,
    pub memoize: bool,
    pub max_depth: usize,
    /// Makes `derive_all` report an empty result as an error.
    pub strict: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            language: None,
            memoize: true,
            max_depth: DEFAULT_MAX_DEPTH,
            strict: false,
        }
    }
}

impl Options {
    pub fn for_language(lang: &str) -> Options {
        Options {
            language: Some(Symbol::new(lang)),
            ..Options::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constituent {
    Text(String),
    Derived(Arc<DerivationResult>),
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationResult {
    pub category: Symbol,
    pub rule_id: String,
    /// Concatenated fragments before [`postprocess`].
    pub text: String,
    pub features: Features,
    /// One entry per template action.
    pub children: Vec<Constituent>,
}

impl DerivationResult {
    /// Normalized surface text.
    pub fn output(&self) -> String {
        postprocess(&self.text)
    }

    /// Rule ids in pre-order.
    pub fn trail(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_trail(&mut out);
        out
    }

    fn collect_trail(&self, out: &mut Vec<String>) {
        out.push(self.rule_id.clone());
        for c in &self.children {
            if let Constituent::Derived(d) = c {
                d.collect_trail(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailureNote {
    pub depth: usize,
    pub category: String,
    pub rule: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeriveError {
    #[error("no derivation for category {category} (input {digest})")]
    NoDerivation {
        category: Symbol,
        digest: String,
        /// Failures recorded at the greatest depth reached.
        deepest: Vec<FailureNote>,
    },
    #[error("rule {rule}: required value {path} is absent (category {category})")]
    RequiredValueAbsent {
        rule: String,
        category: Symbol,
        path: String,
    },
    #[error("derivation deeper than {limit} levels at category {category}")]
    DepthExceeded { category: Symbol, limit: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Language used for a run: the explicit option, else the input's
/// LANGUAGE slot.
pub fn run_language(input: &Value, opts: &Options) -> Option<Symbol> {
    opts.language
        .clone()
        .or_else(|| input.as_struct()?.get("LANGUAGE").and_then(language_tag))
}

fn candidates<'g>(g: &'g Grammar, cat: &Symbol, lang: Option<&Symbol>) -> Vec<&'g TglRule> {
    let mut rules: Vec<&TglRule> = g
        .rules_for(cat)
        .filter(|r| lang.is_none_or(|l| r.matches_language(l)))
        .collect();
    rules.sort_by_key(|r| std::cmp::Reverse(r.pref));
    rules
}

fn tests_pass(
    g: &Grammar,
    rule: &TglRule,
    input: &Value,
    lang: Option<&Symbol>,
) -> Result<bool, EvalError> {
    let any = Symbol::new("ANY");
    let lang = lang.unwrap_or(&any);
    for t in &rule.tests {
        if !eval_test(t, input, g.registry(), lang)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The conflict set: rules of `cat` for `language` whose tests all hold,
/// by preference descending then file order.
pub fn applicable_rules<'g>(
    g: &'g Grammar,
    cat: &Symbol,
    input: &Value,
    language: Option<&Symbol>,
) -> Result<Vec<&'g TglRule>, EvalError> {
    let mut out = Vec::new();
    for r in candidates(g, cat, language) {
        if tests_pass(g, r, input, language)? {
            out.push(r);
        }
    }
    Ok(out)
}

enum Slot {
    Text(String),
    Skipped,
    Var(usize),
}

struct RuleFrame<'r> {
    rule: &'r TglRule,
    slots: Vec<Slot>,
    lists: Vec<Arc<Vec<Arc<DerivationResult>>>>,
    /// Equations to check when each variable level is bound.
    eager: Vec<Vec<usize>>,
    /// Variable levels each equation depends on.
    eq_levels: Vec<BTreeSet<usize>>,
    depth: usize,
    digest: String,
}

/// Completed alternatives per (category, input digest, language).
type MemoTable = HashMap<(Symbol, Digest, Option<Symbol>), Arc<Vec<Arc<DerivationResult>>>>;

struct Run<'g> {
    g: &'g Grammar,
    lang: Option<Symbol>,
    opts: Options,
    memo: MemoTable,
    events: Option<Vec<TraceEvent>>,
    deepest: Vec<FailureNote>,
    absent: Option<DeriveError>,
}

impl<'g> Run<'g> {
    fn emit(&mut self, depth: usize, kind: TraceKind, cat: &Symbol, rule: &str, digest: &str) {
        if let Some(ev) = self.events.as_mut() {
            ev.push(TraceEvent {
                depth,
                kind,
                category: cat.to_string(),
                rule: rule.to_string(),
                digest: digest.to_string(),
            });
        }
    }

    fn note(&mut self, depth: usize, cat: &Symbol, rule: &str, reason: String) {
        let current = self.deepest.first().map_or(0, |n| n.depth);
        if depth > current {
            self.deepest.clear();
        }
        if depth >= current || self.deepest.is_empty() {
            self.deepest.push(FailureNote {
                depth,
                category: cat.to_string(),
                rule: rule.to_string(),
                reason,
            });
        }
    }

    fn expand(
        &mut self,
        cat: &Symbol,
        input: &Value,
        depth: usize,
        limit: Option<usize>,
    ) -> Result<Arc<Vec<Arc<DerivationResult>>>, DeriveError> {
        if depth > self.opts.max_depth {
            return Err(DeriveError::DepthExceeded {
                category: cat.clone(),
                limit: self.opts.max_depth,
            });
        }
        let digest = input.digest();
        let short = digest.short();
        let key = (cat.clone(), digest, self.lang.clone());
        let cacheable = self.opts.memoize && limit.is_none();
        if cacheable {
            if let Some(hit) = self.memo.get(&key).cloned() {
                self.emit(depth, TraceKind::MemoHit, cat, "-", &short);
                return Ok(hit);
            }
        }
        let mut results = Vec::new();
        let mut applicable = 0;
        for rule in candidates(self.g, cat, self.lang.as_ref()) {
            if limit.is_some_and(|l| results.len() >= l) {
                break;
            }
            self.emit(depth, TraceKind::TryRule, cat, &rule.id, &short);
            if !tests_pass(self.g, rule, input, self.lang.as_ref())? {
                self.emit(depth, TraceKind::RejectedTest, cat, &rule.id, &short);
                continue;
            }
            applicable += 1;
            self.emit(depth, TraceKind::Applicable, cat, &rule.id, &short);
            let before = results.len();
            self.derive_rule(rule, input, depth, &short, limit, &mut results)?;
            let kind = if results.len() > before {
                TraceKind::Success
            } else {
                TraceKind::Fail
            };
            self.emit(depth, kind, cat, &rule.id, &short);
        }
        if results.is_empty() {
            self.emit(depth, TraceKind::Fail, cat, "-", &short);
            let reason = if applicable == 0 {
                "no applicable rule".to_string()
            } else {
                format!("all {applicable} applicable rule(s) failed")
            };
            self.note(depth, cat, "-", reason);
        }
        let results = Arc::new(results);
        if cacheable {
            self.memo.insert(key, results.clone());
        }
        Ok(results)
    }

    fn derive_rule(
        &mut self,
        rule: &TglRule,
        input: &Value,
        depth: usize,
        digest: &str,
        // total size of `out` at which to stop
        limit: Option<usize>,
        out: &mut Vec<Arc<DerivationResult>>,
    ) -> Result<(), DeriveError> {
        let mut frame = RuleFrame {
            rule,
            slots: Vec::with_capacity(rule.actions.len()),
            lists: Vec::new(),
            eager: Vec::new(),
            eq_levels: Vec::new(),
            depth,
            digest: digest.to_string(),
        };
        for action in &rule.actions {
            let slot = match action {
                Action::Canned(s) => Slot::Text(s.clone()),
                Action::Call { function, args } => {
                    match eval_call(function, args, input, self.g.registry())? {
                        Some(t) => Slot::Text(t),
                        None => {
                            self.note(
                                depth,
                                &rule.category,
                                &rule.id,
                                format!("function {function} produced no text"),
                            );
                            return Ok(());
                        }
                    }
                }
                Action::Rule { category, accessor } | Action::OptRule { category, accessor } => {
                    let optional = matches!(action, Action::OptRule { .. });
                    match accessor.eval(input) {
                        None if optional => Slot::Skipped,
                        None => {
                            let path = match accessor {
                                Accessor::GetParam(p) => p.to_string(),
                                Accessor::SelfInput => "(self)".into(),
                            };
                            self.note(
                                depth,
                                &rule.category,
                                &rule.id,
                                format!("required value {path} is absent"),
                            );
                            if self.absent.is_none() {
                                self.absent = Some(DeriveError::RequiredValueAbsent {
                                    rule: rule.id.clone(),
                                    category: category.clone(),
                                    path,
                                });
                            }
                            return Ok(());
                        }
                        Some(child) => {
                            let list = self.expand(category, child, depth + 1, None)?;
                            if list.is_empty() {
                                return Ok(());
                            }
                            frame.lists.push(list);
                            Slot::Var(frame.lists.len() - 1)
                        }
                    }
                }
            };
            frame.slots.push(slot);
        }
        let nvars = frame.lists.len();
        frame.eager = vec![Vec::new(); nvars];
        for (e, eq) in rule.constraints.iter().enumerate() {
            let levels: BTreeSet<usize> = eq
                .participants
                .iter()
                .filter(|p| !matches!(p, Participant::SelfRef))
                .filter_map(|p| rule.resolve(p))
                .filter_map(|a| match frame.slots.get(a) {
                    Some(Slot::Var(k)) => Some(*k),
                    _ => None,
                })
                .collect();
            if let Some(&last) = levels.iter().next_back() {
                frame.eager[last].push(e);
            }
            frame.eq_levels.push(levels);
        }
        let mut choice = vec![0; nvars];
        self.search(&frame, 0, &mut choice, limit, out);
        Ok(())
    }

    fn bound<'a>(
        frame: &'a RuleFrame<'_>,
        choice: &[usize],
        upto: usize,
    ) -> Vec<Option<&'a Features>> {
        frame
            .slots
            .iter()
            .map(|s| match s {
                Slot::Var(k) if *k <= upto => Some(&frame.lists[*k][choice[*k]].features),
                _ => None,
            })
            .collect()
    }

    /// Returns the conflict set of `level` and whether the limit was reached.
    fn search(
        &mut self,
        frame: &RuleFrame<'_>,
        level: usize,
        choice: &mut Vec<usize>,
        limit: Option<usize>,
        out: &mut Vec<Arc<DerivationResult>>,
    ) -> (BTreeSet<usize>, bool) {
        let nvars = frame.lists.len();
        let rule = frame.rule;
        if level == nvars {
            let all: BTreeSet<usize> = (0..nvars).collect();
            let bound = Self::bound(frame, choice, usize::MAX);
            match check_equations(rule, &bound) {
                Ok(features) => {
                    out.push(Arc::new(Self::build(frame, choice, features)));
                    let full = limit.is_some_and(|l| out.len() >= l);
                    return (all, full);
                }
                Err(_) => {
                    self.emit(
                        frame.depth,
                        TraceKind::ConstraintClash,
                        &rule.category,
                        &rule.id,
                        &frame.digest,
                    );
                    self.note(
                        frame.depth,
                        &rule.category,
                        &rule.id,
                        "feature clash on exported features".into(),
                    );
                    return (all, false);
                }
            }
        }
        let mut conflict = BTreeSet::new();
        for alt in 0..frame.lists[level].len() {
            choice[level] = alt;
            let mut clashed = false;
            if !frame.eager[level].is_empty() {
                let bound = Self::bound(frame, choice, level);
                for &e in &frame.eager[level] {
                    let eq = &rule.constraints[e];
                    if !equations::constituents_agree(rule, eq, &bound) {
                        conflict.extend(frame.eq_levels[e].iter().copied().filter(|&l| l != level));
                        self.emit(
                            frame.depth,
                            TraceKind::ConstraintClash,
                            &rule.category,
                            &rule.id,
                            &frame.digest,
                        );
                        self.note(
                            frame.depth,
                            &rule.category,
                            &rule.id,
                            format!("{} clash", eq.feature),
                        );
                        clashed = true;
                        break;
                    }
                }
            }
            if clashed {
                continue;
            }
            let (sub, full) = self.search(frame, level + 1, choice, limit, out);
            if full {
                return (sub, true);
            }
            if !sub.contains(&level) {
                conflict.extend(sub);
                return (conflict, false);
            }
            conflict.extend(sub.into_iter().filter(|&l| l != level));
        }
        (conflict, false)
    }

    fn build(frame: &RuleFrame<'_>, choice: &[usize], features: Features) -> DerivationResult {
        let mut text = String::new();
        let mut children = Vec::with_capacity(frame.slots.len());
        for s in &frame.slots {
            match s {
                Slot::Text(t) => {
                    text.push_str(t);
                    children.push(Constituent::Text(t.clone()));
                }
                Slot::Skipped => children.push(Constituent::Skipped),
                Slot::Var(k) => {
                    let child = frame.lists[*k][choice[*k]].clone();
                    text.push_str(&child.text);
                    children.push(Constituent::Derived(child));
                }
            }
        }
        DerivationResult {
            category: frame.rule.category.clone(),
            rule_id: frame.rule.id.clone(),
            text,
            features,
            children,
        }
    }
}

fn run(
    g: &Grammar,
    cat: &Symbol,
    input: &Value,
    opts: &Options,
    limit: Option<usize>,
    trace: bool,
    require: bool,
) -> (Result<Vec<DerivationResult>, DeriveError>, Vec<TraceEvent>) {
    let mut r = Run {
        g,
        lang: run_language(input, opts),
        opts: opts.clone(),
        memo: HashMap::new(),
        events: trace.then(Vec::new),
        deepest: Vec::new(),
        absent: None,
    };
    let outcome = r.expand(cat, input, 0, limit).map(|list| {
        list.iter()
            .map(|d| Arc::try_unwrap(d.clone()).unwrap_or_else(|a| (*a).clone()))
            .collect::<Vec<_>>()
    });
    let outcome = match outcome {
        Ok(list) if list.is_empty() && require => {
            Err(r
                .absent
                .take()
                .unwrap_or_else(|| DeriveError::NoDerivation {
                    category: cat.clone(),
                    digest: input.digest().short(),
                    deepest: std::mem::take(&mut r.deepest),
                }))
        }
        other => other,
    };
    (outcome, r.events.unwrap_or_default())
}

/// First derivation in conflict order.
pub fn derive(
    g: &Grammar,
    cat: &Symbol,
    input: &Value,
    opts: &Options,
) -> Result<DerivationResult, DeriveError> {
    run_with_trace_opt(g, cat, input, opts, false).0
}

/// Up to `limit` derivations in search order. An empty list is an error only
/// with [`Options::strict`].
pub fn derive_all(
    g: &Grammar,
    cat: &Symbol,
    input: &Value,
    opts: &Options,
    limit: usize,
) -> Result<Vec<DerivationResult>, DeriveError> {
    run(g, cat, input, opts, Some(limit.max(1)), false, opts.strict).0
}

/// [`derive_all`] together with its trace.
pub fn derive_all_with_trace(
    g: &Grammar,
    cat: &Symbol,
    input: &Value,
    opts: &Options,
    limit: usize,
) -> (Result<Vec<DerivationResult>, DeriveError>, Vec<TraceEvent>) {
    run(g, cat, input, opts, Some(limit.max(1)), true, opts.strict)
}

/// [`derive`] together with the events of the search, in execution order.
pub fn run_with_trace(
    g: &Grammar,
    cat: &Symbol,
    input: &Value,
    opts: &Options,
) -> (Result<DerivationResult, DeriveError>, Vec<TraceEvent>) {
    run_with_trace_opt(g, cat, input, opts, true)
}

fn run_with_trace_opt(
    g: &Grammar,
    cat: &Symbol,
    input: &Value,
    opts: &Options,
    trace: bool,
) -> (Result<DerivationResult, DeriveError>, Vec<TraceEvent>) {
    let (res, events) = run(g, cat, input, opts, Some(1), trace, true);
    (res.map(|mut v| v.swap_remove(0)), events)
}

/// Re-evaluates every rule's equations over a derivation tree and checks
/// that texts are the concatenation of their fragments.
pub fn audit(g: &Grammar, d: &DerivationResult) -> Result<(), String> {
    let rule = g
        .rule(&d.rule_id)
        .ok_or_else(|| format!("unknown rule {}", d.rule_id))?;
    if d.children.len() != rule.actions.len() {
        return Err(format!(
            "rule {}: {} children for {} actions",
            d.rule_id,
            d.children.len(),
            rule.actions.len()
        ));
    }
    let mut text = String::new();
    let mut bound = Vec::with_capacity(d.children.len());
    for c in &d.children {
        match c {
            Constituent::Text(t) => {
                text.push_str(t);
                bound.push(None);
            }
            Constituent::Skipped => bound.push(None),
            Constituent::Derived(child) => {
                audit(g, child)?;
                text.push_str(&child.text);
                bound.push(Some(&child.features));
            }
        }
    }
    if text != d.text {
        return Err(format!(
            "rule {}: text is not the concatenation of its fragments",
            d.rule_id
        ));
    }
    match check_equations(rule, &bound) {
        Ok(f) if f == d.features => Ok(()),
        Ok(_) => Err(format!(
            "rule {}: exported features differ on re-evaluation",
            d.rule_id
        )),
        Err(_) => Err(format!(
            "rule {}: equations clash on re-evaluation",
            d.rule_id
        )),
    }
}
