use std::fmt::Write;

use super::{Accessor, Action, CallArg, EquationKind, Grammar, TglRule};
use crate::ir::serialize_value;

fn accessor(a: &Accessor) -> String {
    match a {
        Accessor::SelfInput => "(self)".into(),
        Accessor::GetParam(p) => format!("(get-param '{p})"),
    }
}

fn action(a: &Action) -> String {
    match a {
        Action::Canned(s) => crate::sexpr::quote(s),
        Action::Rule {
            category,
            accessor: acc,
        } => format!("(:RULE {category} {})", accessor(acc)),
        Action::OptRule {
            category,
            accessor: acc,
        } => {
            format!("(:OPTRULE {category} {})", accessor(acc))
        }
        Action::Call { function, args } => {
            let mut s = format!("(:CALL {function}");
            for arg in args {
                s.push(' ');
                match arg {
                    CallArg::Accessor(acc) => s.push_str(&accessor(acc)),
                    CallArg::Literal(lit) => s.push_str(&lit.to_string()),
                }
            }
            s.push(')');
            s
        }
    }
}

fn rule(r: &TglRule, out: &mut String) {
    let _ = writeln!(
        out,
        "(defproduction {} {}",
        r.name,
        crate::sexpr::quote(&r.id)
    );
    let _ = write!(out, "  (:PRECOND (:CAT {}", r.category);
    if !r.tests.is_empty() {
        out.push_str("\n             :TEST (");
        for (i, t) in r.tests.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "({}", t.predicate);
            for a in &t.args {
                let _ = write!(out, " {a}");
            }
            out.push(')');
        }
        out.push(')');
    }
    out.push_str(")\n   :ACTIONS (:TEMPLATE");
    for a in &r.actions {
        let _ = write!(out, "\n              {}", action(a));
    }
    if !r.constraints.is_empty() {
        out.push_str("\n             :CONSTRAINTS (");
        for (i, eq) in r.constraints.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let parts: Vec<String> = eq.participants.iter().map(|p| p.to_string()).collect();
            let _ = write!(out, ":{} ({})", eq.feature, parts.join(" "));
            match &eq.kind {
                EquationKind::Equal => out.push_str(" :EQ"),
                EquationKind::Assign(v) => {
                    let _ = write!(out, " :VAL {}", serialize_value(v));
                }
            }
        }
        out.push(')');
    }
    out.push(')');
    if r.pref != 0 {
        let _ = write!(out, "\n   :PREF {}", r.pref);
    }
    if r.lang != "ANY" {
        let _ = write!(out, "\n   :LANG {}", r.lang);
    }
    out.push_str("))\n");
}

/// Prints rules in file order in a normalized layout. Parsing the output
/// yields the same rules.
pub fn print_grammar(g: &Grammar) -> String {
    let mut out = String::new();
    for (i, r) in g.rules().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        rule(r, &mut out);
    }
    out
}
