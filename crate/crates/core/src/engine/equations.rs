use std::collections::BTreeMap;

use crate::ir::{unify_atomic, Clash, Symbol, Value};
use crate::tgl::{EquationKind, FeatureEquation, Participant, TglRule};

/// Flat feature bindings exported by a derivation.
pub type Features = BTreeMap<Symbol, Value>;

/// Evaluates every equation of `rule` given the features of its constituents,
/// indexed by action position (`None` for canned text, calls and skipped
/// optional actions). Returns the features exported through `SELF`.
pub fn check_equations(rule: &TglRule, bound: &[Option<&Features>]) -> Result<Features, Clash> {
    let mut exported = Features::new();
    for eq in &rule.constraints {
        apply_equation(rule, eq, bound, &mut exported)?;
    }
    Ok(exported)
}

fn constituent<'a>(
    rule: &TglRule,
    p: &Participant,
    bound: &[Option<&'a Features>],
    feature: &Symbol,
) -> Option<&'a Value> {
    let idx = rule.resolve(p)?;
    bound.get(idx).copied().flatten()?.get(feature)
}

fn apply_equation(
    rule: &TglRule,
    eq: &FeatureEquation,
    bound: &[Option<&Features>],
    exported: &mut Features,
) -> Result<(), Clash> {
    match &eq.kind {
        EquationKind::Equal => {
            let mut acc: Option<Value> = None;
            let mut has_self = false;
            for p in &eq.participants {
                let v = match p {
                    Participant::SelfRef => {
                        has_self = true;
                        exported.get(&eq.feature)
                    }
                    _ => constituent(rule, p, bound, &eq.feature),
                };
                acc = unify_atomic(acc.as_ref(), v)?;
            }
            if has_self {
                if let Some(v) = acc {
                    exported.insert(eq.feature.clone(), v);
                }
            }
        }
        EquationKind::Assign(value) => {
            for p in &eq.participants {
                match p {
                    Participant::SelfRef => {
                        let v = unify_atomic(exported.get(&eq.feature), Some(value))?;
                        exported.insert(eq.feature.clone(), v.expect("bound"));
                    }
                    _ => {
                        unify_atomic(constituent(rule, p, bound, &eq.feature), Some(value))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks the constituent-only part of one equation. Used to prune as soon
/// as the last constituent participant is bound.
pub(super) fn constituents_agree(
    rule: &TglRule,
    eq: &FeatureEquation,
    bound: &[Option<&Features>],
) -> bool {
    let mut acc: Option<Value> = match &eq.kind {
        EquationKind::Equal => None,
        EquationKind::Assign(v) => Some(v.clone()),
    };
    for p in eq
        .participants
        .iter()
        .filter(|p| !matches!(p, Participant::SelfRef))
    {
        match unify_atomic(acc.as_ref(), constituent(rule, p, bound, &eq.feature)) {
            Ok(v) => acc = v,
            Err(Clash) => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tgl::parse_grammar;

    fn rule(constraints: &str) -> TglRule {
        let text = format!(
            r#"(defproduction r "R1" (:PRECOND (:CAT DECL)
                 :ACTIONS (:TEMPLATE (:RULE THTYPE (self)) "x" (:RULE EXCEEDS (self))
                           :CONSTRAINTS ({constraints}))))"#
        );
        parse_grammar(&text).unwrap().rules()[0].clone()
    }

    fn feats(pairs: &[(&str, &str)]) -> Features {
        pairs
            .iter()
            .map(|(k, v)| (Symbol::new(k), Value::sym(v)))
            .collect()
    }

    #[test]
    fn agreement() {
        let r = rule(":GENDER (THTYPE EXCEEDS) :EQ");
        let fem = feats(&[("GENDER", "FEM")]);
        let masc = feats(&[("GENDER", "MASC")]);
        let none = Features::new();
        assert_eq!(
            check_equations(&r, &[Some(&fem), None, Some(&fem)]),
            Ok(Features::new())
        );
        assert_eq!(
            check_equations(&r, &[Some(&fem), None, Some(&masc)]),
            Err(Clash)
        );
        assert!(check_equations(&r, &[Some(&none), None, Some(&fem)]).is_ok());
    }

    #[test]
    fn export_through_self() {
        let r = rule(":GENDER (SELF THTYPE EXCEEDS) :EQ :NUMBER (SELF) :VAL SG");
        let fem = feats(&[("GENDER", "FEM")]);
        let none = Features::new();
        assert_eq!(
            check_equations(&r, &[Some(&none), None, Some(&fem)]),
            Ok(feats(&[("GENDER", "FEM"), ("NUMBER", "SG")]))
        );
    }

    #[test]
    fn assignment_to_constituent() {
        let r = rule(":GENDER (EXCEEDS) :VAL FEM");
        let masc = feats(&[("GENDER", "MASC")]);
        assert_eq!(check_equations(&r, &[None, None, Some(&masc)]), Err(Clash));
        assert!(!constituents_agree(
            &r,
            &r.constraints[0],
            &[None, None, Some(&masc)]
        ));
    }
}
