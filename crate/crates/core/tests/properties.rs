//! Invariants checked over generated inputs.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use cardset::ilp::Rel;
use cardset::oracle::{eval_term, Valuation};
use cardset::term::normalize_int;
use cardset::{
    parse_formula, sat_card, Deadline, LinConstraint, LinProblem, Rational, SolveOptions, Sort, Substitution, Term, Var,
};
use common::FormulaGen;
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn int_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (-6i64..=6).prop_map(Term::int),
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::int_var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::sub(a, b)),
            inner.clone().prop_map(|a| Term::Neg(Box::new(a))),
            ((-4i64..=4), prop::sample::select(vec!["x", "y", "z"]))
                .prop_map(|(c, v)| Term::Scale(c.into(), Box::new(Term::int_var(v)))),
        ]
    })
}

/// Direct evaluation of an integer term.
fn eval_int(t: &Term, env: &BTreeMap<&str, i64>) -> i64 {
    match t {
        Term::Int(n) => i64::try_from(n).unwrap(),
        Term::Var(v) => env[v.name.as_str()],
        Term::Neg(a) => -eval_int(a, env),
        Term::Add(a, b) => eval_int(a, env) + eval_int(b, env),
        Term::Sub(a, b) => eval_int(a, env) - eval_int(b, env),
        Term::Scale(c, a) => i64::try_from(c).unwrap() * eval_int(a, env),
        other => panic!("not an integer term: {other}"),
    }
}

/// Ground sets over small integers, possibly with repeated elements.
fn ground_set() -> impl Strategy<Value = Term> {
    let elems = prop::collection::vec((0i64..3).prop_map(Term::int), 0..4).prop_map(Term::set_of);
    elems.prop_recursive(2, 16, 3, |inner| {
        prop::collection::vec(prop_oneof![(0i64..3).prop_map(Term::int), inner], 0..4).prop_map(Term::set_of)
    })
}

/// Set terms over the variables `X`, `Y` and the element variable `e`.
fn open_set() -> impl Strategy<Value = Term> {
    let tail = prop_oneof![Just(Term::Empty), Just(Term::set_var("X")), Just(Term::set_var("Y"))];
    let elem = prop_oneof![(0i64..3).prop_map(Term::int), Just(Term::var("e", Sort::Any))];
    (prop::collection::vec(elem, 0..3), tail).prop_map(|(es, t)| Term::set_with_tail(es, t))
}

fn formula_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FormulaGen { rng: &mut rng }.formula().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn linear_form_preserves_value(t in int_term(), x in -5i64..5, y in -5i64..5, z in -5i64..5) {
        let env = BTreeMap::from([("x", x), ("y", y), ("z", z)]);
        let lf = normalize_int(&t).unwrap();
        let got = lf.eval(&|v| env.get(v).map(|n| BigInt::from(*n))).unwrap();
        prop_assert_eq!(got, BigInt::from(eval_int(&t, &env)));
        prop_assert!(lf.coeffs.values().all(|c| *c != BigInt::from(0)));
        prop_assert_eq!(normalize_int(&lf.to_term()).unwrap(), lf);
    }

    #[test]
    fn ground_substitution_is_idempotent(t in open_set(), x in ground_set(), y in ground_set(), e in 0i64..3) {
        let s = Substitution::from_pairs([
            (Var::new("X", Sort::Set), x),
            (Var::new("Y", Sort::Set), y),
            (Var::new("e", Sort::Any), Term::int(e)),
        ]);
        let once = s.apply_term(&t);
        prop_assert!(once.is_ground());
        prop_assert_eq!(s.apply_term(&once), once);
    }

    #[test]
    fn deduplication_keeps_the_set(t in ground_set()) {
        let env = Valuation::new();
        prop_assert_eq!(eval_term(&t.dedup_elems(), &env), eval_term(&t, &env));
    }

    #[test]
    fn printing_then_parsing_is_identity(seed in any::<u64>()) {
        let src = formula_source(seed);
        let f = parse_formula(&src).unwrap();
        let again = parse_formula(&format!("{f}.")).unwrap();
        prop_assert_eq!(again, f);
    }

    #[test]
    fn strict_rows_tighten_on_integers(
        coeffs in prop::collection::vec(-4i64..=4, 1..4),
        rhs in -6i64..6,
        point in prop::collection::vec(-4i64..=4, 3),
    ) {
        let r = |n: i64| Rational::from_integer(n.into());
        let names = ["a", "b", "c"];
        let row = LinConstraint::new(
            coeffs.iter().enumerate().map(|(i, c)| (names[i].to_string(), r(*c))),
            Rel::Lt,
            r(rhs),
        );
        let mut p = LinProblem::new();
        p.push(row.clone());
        let tight = p.all_integer().normalized().remove(0);
        prop_assert_eq!(tight.rel, Rel::Le);
        let at: BTreeMap<String, Rational> = names.iter().zip(&point).map(|(n, v)| (n.to_string(), r(*v))).collect();
        prop_assert_eq!(tight.holds_at(&at), row.holds_at(&at));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn answers_come_in_a_fixed_order(seed in any::<u64>()) {
        let f = parse_formula(&formula_source(seed)).unwrap();
        let opts = || SolveOptions {
            deadline: Deadline::after(Duration::from_secs(3)),
            max_solutions: Some(8),
            ..SolveOptions::default()
        };
        let start = Instant::now();
        let first = sat_card(&f, &opts()).unwrap();
        let second = sat_card(&f, &opts()).unwrap();
        // A run cut short by the deadline may stop at a different answer.
        prop_assume!(start.elapsed() < Duration::from_secs(2));
        prop_assert_eq!(first, second);
    }
}
