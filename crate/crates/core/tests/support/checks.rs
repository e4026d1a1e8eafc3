//! Single-case randomized checks, each returning a description of the
//! first violation found.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use shallowgen::engine::{
    applicable_rules, audit, derive, derive_all, postprocess, Constituent, DerivationResult,
    Options,
};
use shallowgen::ir::{
    parse_ir, serialize_ir, validate, Edit, FeaturePath, FeatureStructure, Symbol, Value,
};
use shallowgen::pack::Pack;
use shallowgen::textorg::{aggregate, DiscourseMemory};
use shallowgen::tgl::{Accessor, Action, Grammar};

use super::oracle;

pub type Check = Result<(), String>;

fn fail<T>(msg: String) -> Result<T, String> {
    Err(msg)
}

const SLOTS: &[&str] = &[
    "COOP", "TIME", "NAME", "YEAR", "SITE", "EXCEEDS", "STATUS", "TIMES", "A", "B-2", "X_Y",
];
const CHARS: &[char] = &[
    'a', 'Z', '0', ' ', 'ä', 'ö', 'é', 'µ', '³', '"', '\\', '\n', '\t', '.', ',', '(', ']', '#',
    '-',
];

pub fn random_atom<R: Rng>(rng: &mut R) -> Value {
    match rng.gen_range(0..5) {
        0 => Value::sym(&format!(
            "{}{}",
            ["S", "FEM", "NO", "A-B"].choose(rng).unwrap(),
            rng.gen_range(0..99)
        )),
        1 => Value::int(rng.gen_range(-1_000_000..1_000_000)),
        2 => Value::decimal(rng.gen_range(-1e6..1e6)),
        3 => Value::text("Völklingen-City"),
        _ => {
            let n = rng.gen_range(0..12);
            Value::Text((0..n).map(|_| *CHARS.choose(rng).unwrap()).collect())
        }
    }
}

pub fn random_structure<R: Rng>(rng: &mut R, depth: usize) -> FeatureStructure {
    let mut fs = FeatureStructure::new();
    for _ in 0..rng.gen_range(0..5) {
        let slot = *SLOTS.choose(rng).unwrap();
        if fs.get(slot).is_some() {
            continue;
        }
        let v = if depth > 0 && rng.gen_bool(0.4) {
            Value::Struct(random_structure(rng, depth - 1))
        } else {
            random_atom(rng)
        };
        fs = fs.with(slot, v);
    }
    fs
}

fn leaf_paths(fs: &FeatureStructure, prefix: &[Symbol], out: &mut Vec<(FeaturePath, Value)>) {
    for (k, v) in fs.iter() {
        let mut segs = prefix.to_vec();
        segs.push(k.clone());
        out.push((FeaturePath::from_symbols(segs.clone()).unwrap(), v.clone()));
        if let Value::Struct(inner) = v {
            leaf_paths(inner, &segs, out);
        }
    }
}

fn overlaps(a: &FeaturePath, b: &FeaturePath) -> bool {
    let n = a.segments().len().min(b.segments().len());
    a.segments()[..n] == b.segments()[..n]
}

pub fn ir_round_trip<R: Rng>(rng: &mut R) -> Check {
    let fs = random_structure(rng, 3);
    let text = serialize_ir(&fs);
    match parse_ir(&text) {
        Ok(back) if back == fs && serialize_ir(&back) == text => Ok(()),
        other => fail(format!("{text} read back as {other:?}")),
    }
}

pub fn path_algebra<R: Rng>(rng: &mut R) -> Check {
    let fs = random_structure(rng, 3);
    let mut all = Vec::new();
    leaf_paths(&fs, &[], &mut all);
    let v = random_atom(rng);
    let target = match all.choose(rng) {
        Some((p, Value::Struct(_))) => p.child(&Symbol::new("NEW")),
        Some((p, _)) => p.clone(),
        None => FeaturePath::parse("NEW").unwrap(),
    };
    let set = fs
        .edit(&Edit::Set(target.clone(), v.clone()))
        .map_err(|e| e.to_string())?;
    if set.get_path(&target) != Some(&v) {
        return fail(format!("set {target} on {fs} lost the value"));
    }
    let deleted = set
        .edit(&Edit::Delete(target.clone()))
        .map_err(|e| e.to_string())?;
    if deleted.get_path(&target).is_some() {
        return fail(format!("delete {target} on {set} left a value"));
    }
    for (p, old) in &all {
        if !overlaps(p, &target)
            && (set.get_path(p) != Some(old) || deleted.get_path(p) != Some(old))
        {
            return fail(format!("editing {target} changed {p} in {fs}"));
        }
    }
    Ok(())
}

pub fn postprocess_idempotent<R: Rng>(rng: &mut R) -> Check {
    let pieces = [
        "en", " hiver", "  ", ".", ",", "(", ")", "µg/m³", "600.0", "à", " l'", "été", "\n", "?",
        "x",
    ];
    let raw: String = (0..rng.gen_range(0..20))
        .map(|_| *pieces.choose(rng).unwrap())
        .collect();
    let once = postprocess(&raw);
    let twice = postprocess(&once);
    if once == twice {
        Ok(())
    } else {
        fail(format!("{raw:?}: {once:?} then {twice:?}"))
    }
}

/// A corpus statement with randomized time, site and exceedance outcome.
pub fn random_statement<R: Rng>(
    rng: &mut R,
    pack: &Pack,
    corpus: &[FeatureStructure],
) -> FeatureStructure {
    let mut fs = corpus.choose(rng).unwrap().clone();
    let times = [
        None,
        Some("[(PRED SEASON) (NAME [(SEASON WINTER) (YEAR 1996)])]"),
        Some("[(PRED SEASON) (NAME [(SEASON WINTER) (YEAR 1995)])]"),
        Some("[(PRED YEAR) (YEAR 1995)]"),
    ];
    fs = match times.choose(rng).unwrap() {
        Some(t) => fs
            .edit(&Edit::Set(
                FeaturePath::parse("TIME").unwrap(),
                Value::Struct(parse_ir(t).unwrap()),
            ))
            .unwrap(),
        None => fs
            .edit(&Edit::Delete(FeaturePath::parse("TIME").unwrap()))
            .unwrap_or(fs),
    };
    if fs.get("SITE").is_some() {
        let site = ["Völklingen-City", "Saarbrücken-East"].choose(rng).unwrap();
        fs = fs
            .edit(&Edit::Set(
                FeaturePath::parse("SITE").unwrap(),
                Value::text(site),
            ))
            .unwrap();
    }
    if fs.get("EXCEEDS").is_some() {
        let e = if rng.gen_bool(0.5) {
            "[(STATUS YES) (TIMES 2)]"
        } else {
            "[(STATUS NO) (TIMES 0)]"
        };
        fs = fs
            .edit(&Edit::Set(
                FeaturePath::parse("EXCEEDS").unwrap(),
                Value::Struct(parse_ir(e).unwrap()),
            ))
            .unwrap();
    }
    if !validate(&fs, &pack.schema).is_clean() {
        return corpus[0].clone();
    }
    fs
}

pub fn aggregation_safety<R: Rng>(rng: &mut R, pack: &Pack, corpus: &[FeatureStructure]) -> Check {
    let statements: Vec<FeatureStructure> = (0..rng.gen_range(0..8))
        .map(|_| random_statement(rng, pack, corpus))
        .collect();
    let run = |s: &[FeatureStructure]| {
        aggregate(
            s,
            &pack.aggregation,
            &mut DiscourseMemory::new(),
            &pack.schema,
        )
        .map_err(|e| e.to_string())
    };
    let once = run(&statements)?;
    if once.len() != statements.len() {
        return fail("statement count changed".into());
    }
    for (before, after) in statements.iter().zip(&once) {
        if before.get("COOP") != after.get("COOP") {
            return fail(format!("COOP changed: {before} -> {after}"));
        }
        let report = validate(after, &pack.schema);
        if !report.is_clean() {
            return fail(format!("{after} no longer validates: {report}"));
        }
    }
    let twice = run(&once)?;
    if twice != once {
        return fail("aggregation is not idempotent".into());
    }
    Ok(())
}

/// Raw text of `d` without the optional constituents read from `target`;
/// every optional path met is pushed onto `out`.
pub fn text_without(
    g: &Grammar,
    d: &DerivationResult,
    at: &[Symbol],
    target: &FeaturePath,
    out: &mut Vec<FeaturePath>,
) -> String {
    let rule = g.rule(&d.rule_id).expect("derivation rule exists");
    let mut text = String::new();
    for (action, child) in rule.actions.iter().zip(&d.children) {
        match child {
            Constituent::Text(t) => text.push_str(t),
            Constituent::Skipped => {}
            Constituent::Derived(sub) => {
                let (accessor, optional) = match action {
                    Action::Rule { accessor, .. } => (accessor, false),
                    Action::OptRule { accessor, .. } => (accessor, true),
                    _ => unreachable!("derived constituent from {action:?}"),
                };
                let mut path = at.to_vec();
                if let Accessor::GetParam(p) = accessor {
                    path.extend(p.segments().iter().cloned());
                }
                if optional {
                    if let Ok(here) = FeaturePath::from_symbols(path.clone()) {
                        let hit = &here == target;
                        out.push(here);
                        if hit {
                            continue;
                        }
                    }
                }
                text.push_str(&text_without(g, sub, &path, target, out));
            }
        }
    }
    text
}

fn squeeze(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Deletes one optional slot that the derivation reads and checks that the
/// output loses exactly that fragment. `Ok(false)` when the statement has no
/// such slot.
pub fn optional_slot_neutral(
    pack: &Pack,
    lang: &str,
    ir: &FeatureStructure,
    pick: usize,
) -> Result<bool, String> {
    let g = pack
        .grammar(&Symbol::new(lang))
        .map_err(|e| e.to_string())?;
    let opts = Options::for_language(lang);
    let start = &pack.manifest.start;
    let full = derive(g, start, &Value::Struct(ir.clone()), &opts)
        .map_err(|e| format!("{lang} {ir}: {e}"))?;
    let mut candidates = Vec::new();
    text_without(
        g,
        &full,
        &[],
        &FeaturePath::parse("NONE").unwrap(),
        &mut candidates,
    );
    candidates.retain(|p| ir.get_path(p).is_some());
    candidates.dedup();
    if candidates.is_empty() {
        return Ok(false);
    }
    let target = candidates[pick % candidates.len()].clone();
    let reduced = ir
        .edit(&Edit::Delete(target.clone()))
        .map_err(|e| e.to_string())?;
    if !validate(&reduced, &pack.schema).is_clean() {
        return Ok(false);
    }
    let expected = text_without(g, &full, &[], &target, &mut Vec::new());
    let got = derive(g, start, &Value::Struct(reduced), &opts)
        .map_err(|e| format!("{lang} without {target}: {e}"))?;
    if squeeze(&got.text) != squeeze(&expected) {
        return fail(format!(
            "{lang} without {target}: {:?} instead of {:?}",
            got.text, expected
        ));
    }
    Ok(true)
}

pub fn optrule_neutrality<R: Rng>(
    rng: &mut R,
    pack: &Pack,
    corpus: &[FeatureStructure],
) -> Result<bool, String> {
    let lang = *["FR", "EN", "DE"].choose(rng).unwrap();
    let ir = random_statement(rng, pack, corpus);
    optional_slot_neutral(pack, lang, &ir, rng.gen())
}

/// Raises a derivable conflict-set member above its competitors and checks
/// that derive then uses it. `Ok(false)` when the draw has no competition.
pub fn preference_argmax<R: Rng>(rng: &mut R) -> Result<bool, String> {
    let g = Grammar::parse(&oracle::random_grammar_source(rng)).map_err(|e| e.to_string())?;
    let input = oracle::random_input(rng, 3);
    let cat = g.rules().choose(rng).unwrap().category.clone();
    let lang = ["", "EN", "FR"].choose(rng).unwrap();
    let lang = (!lang.is_empty()).then(|| Symbol::new(lang));
    let opts = Options {
        language: lang.clone(),
        ..Options::default()
    };
    let Ok(set) = applicable_rules(&g, &cat, &input, lang.as_ref()) else {
        return Ok(false);
    };
    if set.len() < 2 {
        return Ok(false);
    }
    let chosen = set.choose(rng).unwrap().id.clone();
    let top = set.iter().map(|r| r.pref).max().unwrap();
    let Ok(all) = derive_all(&g, &cat, &input, &opts, 10_000) else {
        return Ok(false);
    };
    if !all.iter().any(|d| d.rule_id == chosen) {
        return Ok(false);
    }
    let mut boosted = g.clone();
    boosted.set_pref(&chosen, top + 1);
    let d = derive(&boosted, &cat, &input, &opts).map_err(|e| format!("boosted {chosen}: {e}"))?;
    audit(&boosted, &d)?;
    if d.rule_id != chosen {
        return fail(format!("boosted {chosen} but derive used {}", d.rule_id));
    }
    Ok(true)
}
