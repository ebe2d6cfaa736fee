//! Documented input/output examples for each module.

mod common;

use std::collections::BTreeSet;

use cardset::ilp::{bb_inf, lp_feasible, IlpResult, LpResult, Rel};
use cardset::rewrite::{gen_size_leq, is_irreducible, remove_neq};
use cardset::rules::{rewrite, Fresh, Rewrite, RuleConfig};
use cardset::size::{
    build_res_z, encode_boolean, infer_size, sat_enumerate, solve_size, translate, SizeOptions, SizeVerdict,
};
use cardset::term::{normalize_int, sort_of};
use cardset::{
    parse, parse_formula, Constraint, Deadline, Formula, GoalState, LinConstraint, LinForm, LinProblem, ModelError,
    Rational, SolveOptions, Sort, Substitution, Term, Var,
};
use common::{answers, solve, solve_with};
use num_bigint::BigInt;

fn r(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn atoms(text: &str) -> Vec<Constraint> {
    parse_formula(text).unwrap().atoms().into_iter().cloned().collect()
}

fn answer_set(text: &str) -> BTreeSet<String> {
    answers(text).into_iter().collect()
}

// Terms and sorts.

#[test]
fn sort_of_terms() {
    assert_eq!(sort_of(&Term::Empty).unwrap(), Sort::Set);
    let t = Term::set_of([
        Term::add(Term::int(4), Term::int_var("K")),
        Term::Ur("f".into(), vec![Term::atom("a"), Term::atom("b")]),
    ]);
    assert_eq!(sort_of(&t).unwrap(), Sort::Set);
    let bad = Term::cons(Term::var("X", Sort::Any), Term::int(17));
    assert!(matches!(sort_of(&bad), Err(ModelError::IllSorted(_))));
}

#[test]
fn substitution_examples() {
    let x = Var::new("X", Sort::Set);
    let c = Constraint::Size(Term::set_var("X"), Term::int_var("N"));
    let s = Substitution::single(x, Term::Empty);
    assert_eq!(s.apply_constraint(&c), Constraint::Size(Term::Empty, Term::int_var("N")));
    assert_eq!(Substitution::new().apply_constraint(&c), c);

    let u = Constraint::Un(Term::set_var("B"), Term::set_var("C"), Term::set_var("A"));
    let tail = Term::cons(Term::var("X", Sort::Any), Term::set_var("N"));
    let s = Substitution::single(Var::new("A", Sort::Set), tail.clone());
    assert_eq!(
        s.apply_constraint(&u),
        Constraint::Un(Term::set_var("B"), Term::set_var("C"), tail)
    );
}

#[test]
fn linform_examples() {
    let one_plus_n = normalize_int(&Term::add(Term::int(1), Term::int_var("n"))).unwrap();
    let mut expect = LinForm::var("n");
    expect.constant = 1.into();
    assert_eq!(one_plus_n, expect);

    let zero = normalize_int(&Term::sub(Term::int_var("m"), Term::int_var("m"))).unwrap();
    assert_eq!(zero, LinForm::constant(0));

    let t = Term::add(
        Term::add(Term::Scale(2.into(), Box::new(Term::int_var("x"))), Term::int(3)),
        Term::int_var("x"),
    );
    let lf = normalize_int(&t).unwrap();
    assert_eq!(lf.constant, BigInt::from(3));
    assert_eq!(lf.coeffs.get("x"), Some(&BigInt::from(3)));
    assert_eq!(lf.eval(&|_| Some(BigInt::from(5))), Some(BigInt::from(18)));
}

// Parser.

#[test]
fn parses_a_conjunction_of_four_atoms() {
    let f = parse_formula("a in A & a nin B & un(A,B,C) & C = {X / D}.").unwrap();
    let names: Vec<&str> = f.atoms().iter().map(|c| c.name()).collect();
    assert_eq!(names.len(), 4);
    assert!(matches!(f, Formula::And(_)));
    assert!(matches!(f.atoms()[3], Constraint::Eq(_, Term::Cons(..))));
}

#[test]
fn integer_in_set_position_is_a_sort_error() {
    let e = parse_formula("un(A,B,23).").unwrap_err();
    assert!(e.is_sort_error(), "{e}");
}

#[test]
fn empty_braces_are_the_empty_set() {
    let f = parse_formula("X = {}.").unwrap();
    assert_eq!(f.atoms()[0], &Constraint::Eq(Term::set_var("X"), Term::Empty));
}

#[test]
fn script_without_macros_is_its_goal() {
    let s = parse("% a comment\nX = {1} & size(X,N).").unwrap();
    assert!(s.macros.is_empty());
    assert_eq!(parse_formula("X = {1} & size(X,N).").unwrap().atoms().len(), 2);
}

#[test]
fn macro_locals_are_distinct_per_call() {
    let text = "two(S) :- S = {X / T} & X nin T.\ntwo(A) & two(B).";
    let f = parse_formula(text).unwrap();
    let vars: BTreeSet<String> = f.vars().into_iter().map(|v| v.name).collect();
    // A, B plus two fresh copies of X and T.
    assert_eq!(vars.len(), 6, "{vars:?}");
}

#[test]
fn insert_verification_condition_parses_to_one_formula() {
    let text = "\
ins(S,X,T) :- X in S & T = S or X nin S & T = {X / S}.
ins(S,X,T) & size(S,N) & size(T,M) & M > N + 1.";
    let f = parse_formula(text).unwrap();
    assert!(f.atoms().len() >= 6);
}

// Rewriting.

#[test]
fn gen_size_leq_adds_one_bound_per_size_variable() {
    let f = parse_formula("size(A,N).").unwrap();
    assert_eq!(gen_size_leq(&f).atoms().len(), 2);
    let g = parse_formula("A = {1}.").unwrap();
    assert_eq!(gen_size_leq(&g), g);
    let h = parse_formula("size(A,N) & size(B,N).").unwrap();
    assert_eq!(gen_size_leq(&h).atoms().len(), 3);
}

#[test]
fn set_equality_with_duplicates_branches_and_succeeds() {
    let c = &atoms("{1} = {1,1}.")[0];
    let mut n = 0;
    match rewrite(c, &mut Fresh(&mut n), RuleConfig::default()) {
        Rewrite::Then(Formula::Or(alts)) => assert_eq!(alts.len(), 4),
        other => panic!("expected four alternatives, got {other:?}"),
    }
    assert!(solve("{1} = {1,1}.").is_sat());
}

#[test]
fn membership_binds_the_set() {
    let c = &atoms("x in A.")[0];
    let mut n = 0;
    match rewrite(c, &mut Fresh(&mut n), RuleConfig::default()) {
        Rewrite::Then(Formula::Atom(Constraint::Eq(Term::Var(v), Term::Cons(x, _)))) => {
            assert_eq!(v.name, "A");
            assert_eq!(*x, Term::atom("x"));
        }
        other => panic!("expected A = {{x / N}}, got {other:?}"),
    }
    let got = answer_set("x in A.");
    assert_eq!(got.len(), 1);
    assert!(got.iter().next().unwrap().starts_with("A = {x / _"), "{got:?}");
}

#[test]
fn nonmembership_in_a_cons_splits() {
    let c = &atoms("x nin {y / A}.")[0];
    let mut n = 0;
    match rewrite(c, &mut Fresh(&mut n), RuleConfig::default()) {
        Rewrite::Then(f) => {
            let names: Vec<&str> = f.atoms().iter().map(|c| c.name()).collect();
            assert_eq!(names, ["neq", "nin"]);
        }
        other => panic!("expected a conjunction, got {other:?}"),
    }
}

#[test]
fn ground_sizes() {
    assert_eq!(answer_set("size({1,2,3,1,4},M)."), BTreeSet::from(["M = 4".to_string()]));
    assert_eq!(answer_set("size({},M)."), BTreeSet::from(["M = 0".to_string()]));
    assert_eq!(answer_set("size({a,b},M)."), BTreeSet::from(["M = 2".to_string()]));
}

#[test]
fn inequality_without_size_is_left_alone() {
    assert_eq!(answer_set("A neq B."), BTreeSet::from(["A neq B".to_string()]));
    let mut st = GoalState::new(Formula::True, 0);
    st.store = atoms("A neq B.");
    assert!(remove_neq(&mut st).is_none());
}

#[test]
fn inequality_with_an_atom_may_hold_by_emptiness() {
    let mut st = GoalState::new(Formula::True, 0);
    st.store = vec![
        Constraint::Size(Term::set_var("A"), Term::int_var("N")),
        Constraint::Neq(Term::set_var("A"), Term::atom("b")),
    ];
    let alts = remove_neq(&mut st).expect("a sized set inequality");
    assert_eq!(alts.len(), 3);
    assert_eq!(
        alts[2].atoms(),
        [
            &Constraint::Eq(Term::set_var("A"), Term::Empty),
            &Constraint::Neq(Term::atom("b"), Term::Empty)
        ]
    );
    let mut f = 0;
    assert!(!matches!(rewrite(alts[2].atoms()[1], &mut Fresh(&mut f), RuleConfig::default()), Rewrite::False));
}

#[test]
fn irreducibility() {
    let st = GoalState::new(Formula::True, 0);
    assert!(is_irreducible(&atoms("un(A,B,C).")[0], &st));
    assert!(!is_irreducible(&atoms("size(A,0).")[0], &st));
    assert!(is_irreducible(&atoms("x nin A.")[0], &st));
}

#[test]
fn derived_constraints() {
    let mut n = 0;
    let sub = &atoms("subset(A,B).")[0];
    match rewrite(sub, &mut Fresh(&mut n), RuleConfig::default()) {
        Rewrite::Then(f) => assert_eq!(f.atoms()[0].name(), "un"),
        other => panic!("{other:?}"),
    }
    let nun = &atoms("nun(A,B,C).")[0];
    match rewrite(nun, &mut Fresh(&mut n), RuleConfig::default()) {
        Rewrite::Then(Formula::Or(alts)) => assert_eq!(alts.len(), 3),
        Rewrite::Then(Formula::And(parts)) => {
            assert!(parts.iter().any(|p| matches!(p, Formula::Or(a) if a.len() == 3)))
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(answer_set("inters({1},{1,2},X)."), BTreeSet::from(["X = {1}".to_string()]));
}

// Cardinality phase.

#[test]
fn translation() {
    let z = translate(&atoms("un(A,B,C) & size(A,5) & N =< M.")).unwrap();
    assert_eq!(z.unions, vec![["A".to_string(), "B".to_string(), "C".to_string()]]);
    assert_eq!(z.sizes, vec![("A".to_string(), LinForm::constant(5))]);
    assert_eq!(z.int_constraints.len(), 1);
    let row = &z.int_constraints[0];
    assert_eq!(row.rel, Rel::Le);
    assert_eq!(row.coeffs.get("N"), Some(&r(1)));
    assert_eq!(row.coeffs.get("M"), Some(&r(-1)));
}

#[test]
fn inference_adds_sizes_through_unions() {
    let z = translate(&atoms("un(A,B,C) & size(C,M).")).unwrap();
    let inferred = infer_size(&z);
    let sized: BTreeSet<&str> = inferred.sizes.iter().map(|(s, _)| s.as_str()).collect();
    assert_eq!(sized, BTreeSet::from(["A", "B", "C"]));
    assert!(inferred.int_constraints.len() > z.int_constraints.len());

    let plain = translate(&atoms("un(A,B,C).")).unwrap();
    assert_eq!(infer_size(&plain), plain);
}

#[test]
fn boolean_encoding_and_patterns() {
    let vars: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
    let z = translate(&atoms("un(A,B,C).")).unwrap();
    let cnf = encode_boolean(&z, &vars);
    assert_eq!(cnf.clauses.len(), 3);
    let pats = sat_enumerate(&cnf, &vars, &Deadline::none()).unwrap();
    let got: BTreeSet<(bool, bool, bool)> = pats.iter().map(|p| (p["A"], p["B"], p["C"])).collect();
    assert_eq!(got, BTreeSet::from([(true, false, true), (false, true, true), (true, true, true)]));

    let d = translate(&atoms("disj(A,B).")).unwrap();
    assert_eq!(encode_boolean(&d, &vars[..2]).clauses.len(), 1);
    let empty = translate(&atoms("N = 1.")).unwrap();
    assert!(encode_boolean(&empty, &[]).clauses.is_empty());

    let one = vec!["A".to_string()];
    let free = encode_boolean(&empty, &one);
    let pats = sat_enumerate(&free, &one, &Deadline::none()).unwrap();
    assert_eq!(pats.len(), 1);
    assert!(pats[0]["A"]);
}

#[test]
fn residue_of_an_arrangement() {
    let p0 = [("A".to_string(), true)].into_iter().collect();
    let regions = vec![(0usize, &p0)];
    let sizes = vec![("A".to_string(), LinForm::var("m"))];
    let rows = build_res_z(&regions, &sizes);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].rel, Rel::Lt);
    assert_eq!(rows[1].rel, Rel::Eq);
}

#[test]
fn size_solver_verdicts() {
    let d = Deadline::none();
    let o = SizeOptions::default();
    let unsat = atoms("un(A,B,C) & size(A,MA) & size(B,MB) & size(C,MC) & MA + MB < MC.");
    assert_eq!(solve_size(&unsat, &o, &d).unwrap(), SizeVerdict::Unsat);
    let sat = atoms("un(A,B,C) & size(A,MA) & size(C,MC) & MA < MC.");
    assert!(matches!(solve_size(&sat, &o, &d).unwrap(), SizeVerdict::Sat(_)));
}

#[test]
fn fixed_size_zero_is_the_empty_set() {
    let opts = SolveOptions { fix_size: true, ..SolveOptions::default() };
    let got: BTreeSet<String> =
        solve_with("size(A,0).", opts).answers().iter().map(|a| a.to_formula().to_string()).collect();
    assert_eq!(got, BTreeSet::from(["A = {}".to_string()]));
}

// Integer programming.

fn problem(rows: Vec<LinConstraint>) -> LinProblem {
    let mut p = LinProblem::new();
    for row in rows {
        p.push(row);
    }
    p.all_integer()
}

fn row(coeffs: &[(&str, i64)], rel: Rel, rhs: i64) -> LinConstraint {
    LinConstraint::new(coeffs.iter().map(|(v, c)| (v.to_string(), r(*c))), rel, r(rhs))
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let p = problem(vec![row(&[("x", 1)], Rel::Le, 1), row(&[("x", -1)], Rel::Le, -2)]);
    match lp_feasible(&p, &Deadline::none()).unwrap() {
        LpResult::Infeasible(Some(cert)) => assert!(cert.verify(&p.normalized())),
        other => panic!("{other:?}"),
    }
    assert_eq!(bb_inf(&p, &Deadline::none()).unwrap(), IlpResult::Infeasible);
}

#[test]
fn strict_and_weak_sum_bounds_conflict() {
    let p = problem(vec![
        row(&[("m3", 1), ("m1", -1), ("m2", -1)], Rel::Le, 0),
        row(&[("m3", -1), ("m1", 1), ("m2", 1)], Rel::Lt, 0),
    ]);
    match lp_feasible(&p, &Deadline::none()).unwrap() {
        LpResult::Infeasible(Some(cert)) => assert!(cert.verify(&p.normalized())),
        other => panic!("{other:?}"),
    }
}

#[test]
fn positive_region_below_a_bound_is_feasible() {
    let p = problem(vec![
        row(&[("v", -1)], Rel::Lt, 0),
        row(&[("v", 1), ("m", -1)], Rel::Eq, 0),
        row(&[("m", 1)], Rel::Le, 5),
    ]);
    assert!(matches!(lp_feasible(&p, &Deadline::none()).unwrap(), LpResult::Feasible(_)));
}

#[test]
fn integer_minima() {
    let mut p = problem(vec![
        row(&[("m", -1)], Rel::Le, -5),
        row(&[("n", -1)], Rel::Le, -5),
        row(&[("m", 1), ("n", -1)], Rel::Eq, 0),
    ]);
    p.objective = [("m".to_string(), r(1)), ("n".to_string(), r(1))].into_iter().collect();
    match bb_inf(&p, &Deadline::none()).unwrap() {
        IlpResult::Min { value, vertex } => {
            assert_eq!(value, r(10));
            assert_eq!(vertex["m"], BigInt::from(5));
            assert_eq!(vertex["n"], BigInt::from(5));
        }
        other => panic!("{other:?}"),
    }

    let mut p = problem(vec![row(&[("m", 1)], Rel::Eq, 0)]);
    p.objective = [("m".to_string(), r(1))].into_iter().collect();
    assert!(matches!(bb_inf(&p, &Deadline::none()).unwrap(), IlpResult::Min { value, .. } if value == r(0)));

    let mut p = problem(vec![row(&[("x", -2)], Rel::Le, -3), row(&[("x", 1)], Rel::Le, 4)]);
    p.objective = [("x".to_string(), r(1))].into_iter().collect();
    match bb_inf(&p, &Deadline::none()).unwrap() {
        IlpResult::Min { value, vertex } => {
            assert_eq!(value, r(2));
            assert_eq!(vertex["x"], BigInt::from(2));
        }
        other => panic!("{other:?}"),
    }
}
