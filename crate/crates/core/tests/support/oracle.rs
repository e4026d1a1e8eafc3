//! Brute-force reference derivation: exhaustive expansion without
//! memoization or backjumping, plus generators for small random grammars
//! and inputs.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use shallowgen::engine::DerivationResult;
use shallowgen::ir::{Symbol, Value};
use shallowgen::tgl::{
    eval_call, eval_test, Accessor, Action, EquationKind, Grammar, Participant, TglRule,
};

pub type Feats = BTreeMap<Symbol, Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub trail: Vec<String>,
    pub text: String,
    pub features: Feats,
}

impl Tree {
    pub fn of(d: &DerivationResult) -> Tree {
        Tree {
            trail: d.trail(),
            text: d.text.clone(),
            features: d.features.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    Depth,
    Eval(String),
    TooBig,
}

pub struct Oracle<'g> {
    pub grammar: &'g Grammar,
    pub lang: Option<Symbol>,
    pub max_depth: usize,
    pub max_list: usize,
}

enum Choice {
    Text(String),
    Skipped,
    Sub(Vec<Tree>),
}

impl<'g> Oracle<'g> {
    pub fn new(grammar: &'g Grammar, lang: Option<&str>) -> Self {
        Oracle {
            grammar,
            lang: lang.map(Symbol::new),
            max_depth: 64,
            max_list: 4000,
        }
    }

    fn ordered(&self, cat: &Symbol) -> Vec<&'g TglRule> {
        let mut rules: Vec<&TglRule> = self
            .grammar
            .rules()
            .iter()
            .filter(|r| &r.category == cat)
            .filter(|r| match &self.lang {
                Some(l) => r.lang == "ANY" || &r.lang == l,
                None => true,
            })
            .collect();
        // stable: equal preferences keep file order
        rules.sort_by_key(|r| std::cmp::Reverse(r.pref));
        rules
    }

    pub fn expand(
        &self,
        cat: &Symbol,
        input: &Value,
        depth: usize,
    ) -> Result<Vec<Tree>, OracleError> {
        if depth > self.max_depth {
            return Err(OracleError::Depth);
        }
        let any = Symbol::new("ANY");
        let lang = self.lang.as_ref().unwrap_or(&any);
        let mut out = Vec::new();
        'rules: for rule in self.ordered(cat) {
            for t in &rule.tests {
                let ok = eval_test(t, input, self.grammar.registry(), lang)
                    .map_err(|e| OracleError::Eval(e.to_string()))?;
                if !ok {
                    continue 'rules;
                }
            }
            let mut choices = Vec::new();
            for action in &rule.actions {
                let c = match action {
                    Action::Canned(s) => Choice::Text(s.clone()),
                    Action::Call { function, args } => {
                        match eval_call(function, args, input, self.grammar.registry())
                            .map_err(|e| OracleError::Eval(e.to_string()))?
                        {
                            Some(t) => Choice::Text(t),
                            None => continue 'rules,
                        }
                    }
                    Action::Rule { category, accessor }
                    | Action::OptRule { category, accessor } => {
                        let value = match accessor {
                            Accessor::SelfInput => Some(input),
                            Accessor::GetParam(p) => input.get_path(p.segments()),
                        };
                        match value {
                            None if matches!(action, Action::OptRule { .. }) => Choice::Skipped,
                            None => continue 'rules,
                            Some(v) => {
                                let sub = self.expand(category, v, depth + 1)?;
                                if sub.is_empty() {
                                    continue 'rules;
                                }
                                Choice::Sub(sub)
                            }
                        }
                    }
                };
                choices.push(c);
            }
            self.product(rule, &choices, &mut out)?;
        }
        Ok(out)
    }

    fn product(
        &self,
        rule: &TglRule,
        choices: &[Choice],
        out: &mut Vec<Tree>,
    ) -> Result<(), OracleError> {
        let sizes: Vec<usize> = choices
            .iter()
            .map(|c| match c {
                Choice::Sub(v) => v.len(),
                _ => 1,
            })
            .collect();
        let mut idx = vec![0usize; choices.len()];
        loop {
            let picked: Vec<Option<&Tree>> = choices
                .iter()
                .zip(&idx)
                .map(|(c, &i)| match c {
                    Choice::Sub(v) => Some(&v[i]),
                    _ => None,
                })
                .collect();
            if let Some(features) = equations(rule, &picked) {
                let mut trail = vec![rule.id.clone()];
                let mut text = String::new();
                for (c, p) in choices.iter().zip(&picked) {
                    match (c, p) {
                        (Choice::Text(t), _) => text.push_str(t),
                        (Choice::Sub(_), Some(t)) => {
                            text.push_str(&t.text);
                            trail.extend(t.trail.iter().cloned());
                        }
                        _ => {}
                    }
                }
                out.push(Tree {
                    trail,
                    text,
                    features,
                });
                if out.len() > self.max_list {
                    return Err(OracleError::TooBig);
                }
            }
            // odometer, last position fastest
            let mut pos = choices.len();
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < sizes[pos] {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

fn constituent<'a>(
    rule: &TglRule,
    picked: &[Option<&'a Tree>],
    cat: &Symbol,
    occ: usize,
    f: &Symbol,
) -> Option<&'a Value> {
    let mut seen = 0;
    for (a, p) in rule.actions.iter().zip(picked) {
        let c = match a {
            Action::Rule { category, .. } | Action::OptRule { category, .. } => category,
            _ => continue,
        };
        if c == cat {
            seen += 1;
            if seen == occ {
                return p.and_then(|t| t.features.get(f));
            }
        }
    }
    None
}

fn meet(acc: &mut Option<Value>, v: Option<&Value>) -> bool {
    match (acc.as_ref(), v) {
        (_, None) => true,
        (None, Some(v)) => {
            *acc = Some(v.clone());
            true
        }
        (Some(a), Some(v)) => a == v,
    }
}

/// Exported features, or `None` on a clash.
pub fn equations(rule: &TglRule, picked: &[Option<&Tree>]) -> Option<Feats> {
    let mut exported = Feats::new();
    for eq in &rule.constraints {
        match &eq.kind {
            EquationKind::Equal => {
                let mut acc = None;
                let mut to_self = false;
                for p in &eq.participants {
                    let v = match p {
                        Participant::SelfRef => {
                            to_self = true;
                            exported.get(&eq.feature).cloned()
                        }
                        Participant::Constituent(c, n) => {
                            constituent(rule, picked, c, *n, &eq.feature).cloned()
                        }
                    };
                    if !meet(&mut acc, v.as_ref()) {
                        return None;
                    }
                }
                if let (true, Some(v)) = (to_self, acc) {
                    exported.insert(eq.feature.clone(), v);
                }
            }
            EquationKind::Assign(value) => {
                for p in &eq.participants {
                    let current = match p {
                        Participant::SelfRef => exported.get(&eq.feature).cloned(),
                        Participant::Constituent(c, n) => {
                            constituent(rule, picked, c, *n, &eq.feature).cloned()
                        }
                    };
                    if current.as_ref().is_some_and(|c| c != value) {
                        return None;
                    }
                    if matches!(p, Participant::SelfRef) {
                        exported.insert(eq.feature.clone(), value.clone());
                    }
                }
            }
        }
    }
    Some(exported)
}

const SLOTS: [&str; 3] = ["a", "b", "a.b"];
const ATOMS: [&str; 3] = ["x", "y", "z"];

/// Source of an acyclic grammar: category `Ci` only refers to `Cj` with
/// `j > i`, so every derivation is at most `categories` levels deep.
pub fn random_grammar_source<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(2..=10);
    let mut out = String::new();
    let mut id = 0;
    for c in 0..n {
        for _ in 0..rng.gen_range(1..=4) {
            id += 1;
            out.push_str(&random_rule(rng, c, n, id));
        }
    }
    out
}

fn random_rule<R: Rng>(rng: &mut R, c: usize, n: usize, id: usize) -> String {
    let mut tests = Vec::new();
    if rng.gen_bool(0.4) {
        tests.push(match rng.gen_range(0..4) {
            0 => format!("(path-present '{})", SLOTS.choose(rng).unwrap()),
            1 => format!("(path-absent '{})", SLOTS.choose(rng).unwrap()),
            2 => format!(
                "(path-eq '{} '{})",
                SLOTS.choose(rng).unwrap(),
                ATOMS.choose(rng).unwrap()
            ),
            _ => format!("(self-eq '{})", ATOMS.choose(rng).unwrap()),
        });
    }
    let mut actions = Vec::new();
    let mut subs: Vec<String> = Vec::new();
    for k in 0..rng.gen_range(1..=4) {
        let roll = rng.gen_range(0..10);
        if c + 1 < n && roll < 5 && subs.len() < 3 {
            let target = format!("C{}", rng.gen_range(c + 1..n));
            let accessor = match rng.gen_range(0..3) {
                0 => "(self)".to_string(),
                _ => format!("(get-param '{})", SLOTS.choose(rng).unwrap()),
            };
            let kind = if rng.gen_bool(0.3) {
                ":OPTRULE"
            } else {
                ":RULE"
            };
            actions.push(format!("({kind} {target} {accessor})"));
            subs.push(target);
        } else if roll == 9 {
            actions.push("(:CALL text (self))".to_string());
        } else {
            actions.push(format!("\"r{id}.{k} \""));
        }
    }
    let mut constraints = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        let participant = |rng: &mut R, subs: &[String]| -> String {
            let cat = subs.choose(rng).unwrap().clone();
            let count = subs.iter().filter(|s| **s == cat).count();
            let occ = rng.gen_range(1..=count);
            if occ == 1 {
                cat
            } else {
                format!("{cat}@{occ}")
            }
        };
        let feature = if rng.gen_bool(0.8) {
            "GENDER"
        } else {
            "NUMBER"
        };
        let value = if rng.gen_bool(0.5) { "MASC" } else { "FEM" };
        match rng.gen_range(0..4) {
            0 if subs.len() >= 2 => {
                let (a, b) = (participant(rng, &subs), participant(rng, &subs));
                constraints.push(format!(":{feature} ({a} {b}) :EQ"));
            }
            1 if !subs.is_empty() => {
                let a = participant(rng, &subs);
                constraints.push(format!(":{feature} (SELF {a}) :EQ"));
            }
            2 if !subs.is_empty() => {
                let a = participant(rng, &subs);
                constraints.push(format!(":{feature} ({a}) :VAL {value}"));
            }
            _ => constraints.push(format!(":{feature} (SELF) :VAL {value}")),
        }
    }
    let test_part = if tests.is_empty() {
        String::new()
    } else {
        format!(" :TEST ({})", tests.join(" "))
    };
    let constraint_part = if constraints.is_empty() {
        String::new()
    } else {
        format!("\n             :CONSTRAINTS ({})", constraints.join(" "))
    };
    let pref = rng.gen_range(0..3);
    let lang = ["ANY", "ANY", "EN", "FR"].choose(rng).unwrap();
    format!(
        "(defproduction r{id} \"R{id:03}\"\n  (:PRECOND (:CAT C{c}{test_part})\n   :ACTIONS (:TEMPLATE {}{constraint_part})\n   :PREF {pref}\n   :LANG {lang}))\n",
        actions.join(" ")
    )
}

/// Small input: atoms or structures over slots `A` and `B`, two levels deep.
pub fn random_input<R: Rng>(rng: &mut R, depth: usize) -> Value {
    if depth == 0 || rng.gen_bool(0.25) {
        return Value::sym(&ATOMS.choose(rng).unwrap().to_uppercase());
    }
    let mut pairs = Vec::new();
    for slot in ["A", "B"] {
        if rng.gen_bool(0.7) {
            pairs.push((slot.to_string(), random_input(rng, depth - 1)));
        }
    }
    Value::Struct(shallowgen::ir::FeatureStructure::from_pairs(pairs))
}

#[derive(Debug, Default)]
pub struct Comparison {
    pub grammars: usize,
    pub inputs: usize,
    pub derivations: usize,
    pub discrepancies: Vec<String>,
    pub audit_failures: Vec<String>,
}

fn status<T>(r: &Result<T, shallowgen::engine::DeriveError>) -> &'static str {
    if r.is_ok() {
        "ok"
    } else {
        "error"
    }
}

/// Compares derive and derive_all, with and without memoization, against
/// the brute-force expansion on `grammars` random grammars with
/// `inputs_per` random inputs each. Grammars whose expansion explodes are
/// replaced.
pub fn compare_random<R: Rng>(rng: &mut R, grammars: usize, inputs_per: usize) -> Comparison {
    use shallowgen::engine::{audit, derive, derive_all, Options};
    let mut cmp = Comparison::default();
    let start = Symbol::new("C0");
    while cmp.grammars < grammars {
        let source = random_grammar_source(rng);
        let g =
            Grammar::parse(&source).unwrap_or_else(|e| panic!("generated grammar: {e}\n{source}"));
        let lang = ["EN", "FR"].choose(rng).unwrap();
        let inputs: Vec<Value> = (0..inputs_per).map(|_| random_input(rng, 3)).collect();
        let oracle = Oracle::new(&g, Some(lang));
        let expected: Result<Vec<Vec<Tree>>, OracleError> =
            inputs.iter().map(|i| oracle.expand(&start, i, 0)).collect();
        let Ok(expected) = expected else {
            continue;
        };
        cmp.grammars += 1;
        for (input, want) in inputs.iter().zip(expected) {
            cmp.inputs += 1;
            for memoize in [true, false] {
                let opts = Options {
                    memoize,
                    ..Options::for_language(lang)
                };
                let mut note = |what: &str| {
                    cmp.discrepancies
                        .push(format!("{what} (memoize {memoize}) on {input:?}\n{source}"))
                };
                let all = derive_all(&g, &start, input, &opts, usize::MAX);
                match &all {
                    Ok(list) if list.iter().map(Tree::of).collect::<Vec<_>>() == want => {}
                    _ => note("derive_all differs"),
                }
                let first = derive(&g, &start, input, &opts);
                match (&first, want.first()) {
                    (Ok(d), Some(t)) if &Tree::of(d) == t => {}
                    (Err(_), None) => {}
                    _ => note(&format!("derive differs ({})", status(&first))),
                }
                let cut = rng.gen_range(1..=3);
                match derive_all(&g, &start, input, &opts, cut) {
                    Ok(list)
                        if list.iter().map(Tree::of).collect::<Vec<_>>()
                            == want[..want.len().min(cut)] => {}
                    _ => note("limited derive_all is not a prefix"),
                }
                let strict = Options {
                    strict: true,
                    ..opts
                };
                if status(&derive_all(&g, &start, input, &strict, usize::MAX)) != status(&first) {
                    note("strict failure status differs from derive");
                }
                for d in all.iter().flatten() {
                    cmp.derivations += 1;
                    if let Err(e) = audit(&g, d) {
                        cmp.audit_failures.push(e);
                    }
                }
            }
        }
    }
    cmp
}
