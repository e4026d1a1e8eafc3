use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shallowgen::engine::{derive, derive_all, DeriveError, Options};
use shallowgen::ir::{Symbol, Value};
use shallowgen::tgl::Grammar;

#[path = "support/oracle.rs"]
mod oracle;

use oracle::{compare_random, Oracle, OracleError, Tree};

#[test]
fn memoized_search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let cmp = compare_random(&mut rng, 120, 10);
    assert_eq!(cmp.grammars, 120);
    assert!(
        cmp.discrepancies.is_empty(),
        "{}",
        cmp.discrepancies.join("\n---\n")
    );
    assert!(cmp.audit_failures.is_empty(), "{:?}", cmp.audit_failures);
    assert!(cmp.derivations > 0);
}

#[test]
fn oracle_agrees_on_clash_backtracking() {
    let g = Grammar::parse(
        r#"
        (defproduction top "T1"
          (:PRECOND (:CAT S)
           :ACTIONS (:TEMPLATE (:RULE N (self)) " " (:RULE A (self))
                     :CONSTRAINTS (:GENDER (N A) :EQ))))
        (defproduction noun-f "N1"
          (:PRECOND (:CAT N) :ACTIONS (:TEMPLATE "la" :CONSTRAINTS (:GENDER (SELF) :VAL FEM))))
        (defproduction noun-m "N2"
          (:PRECOND (:CAT N) :ACTIONS (:TEMPLATE "le" :CONSTRAINTS (:GENDER (SELF) :VAL MASC))))
        (defproduction adj-m "A1"
          (:PRECOND (:CAT A) :ACTIONS (:TEMPLATE "grand" :CONSTRAINTS (:GENDER (SELF) :VAL MASC))))
        (defproduction adj-f "A2"
          (:PRECOND (:CAT A) :ACTIONS (:TEMPLATE "grande" :CONSTRAINTS (:GENDER (SELF) :VAL FEM))))
        "#,
    )
    .unwrap();
    let input = Value::sym("X");
    let want = Oracle::new(&g, None)
        .expand(&Symbol::new("S"), &input, 0)
        .unwrap();
    let texts: Vec<&str> = want.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(texts, ["la grande", "le grand"]);
    let got = derive_all(&g, &Symbol::new("S"), &input, &Options::default(), 10).unwrap();
    assert_eq!(got.iter().map(Tree::of).collect::<Vec<_>>(), want);
    assert_eq!(
        derive(&g, &Symbol::new("S"), &input, &Options::default())
            .unwrap()
            .text,
        "la grande"
    );
}

#[test]
fn cycles_fail_in_both() {
    let g = Grammar::parse(
        r#"(defproduction loop "L1" (:PRECOND (:CAT S) :ACTIONS (:TEMPLATE "a" (:RULE S (self)))))"#,
    )
    .unwrap();
    let input = Value::sym("X");
    assert_eq!(
        Oracle::new(&g, None).expand(&Symbol::new("S"), &input, 0),
        Err(OracleError::Depth)
    );
    for memoize in [true, false] {
        let opts = Options {
            memoize,
            ..Options::default()
        };
        assert!(matches!(
            derive(&g, &Symbol::new("S"), &input, &opts),
            Err(DeriveError::DepthExceeded { .. })
        ));
    }
}
