//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line straight to stdout so the summary survives output capture.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use cardset::bench::{run_bench, BenchOptions, Expect, Verdict};
use cardset::ilp::{bb_inf, IlpResult, Rel};
use cardset::oracle::{eval_ground, ground_answer, oracle_sat, OracleVerdict, Scope, Valuation, Value};
use cardset::sat::Cnf;
use cardset::size::{sat_enumerate, SizeOptions};
use cardset::{Deadline, LinConstraint, LinProblem, Rational, SolveOptions, SolveResult, Term};
use common::{formula, random_suite_scope, grounding_scope, solve, solve_with, FormulaGen};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} - {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

const INSERT: &str = "sl_insert(Content,Size,E,Content_,Size_) :- un(Content,E,Content_) & Size_ is Size + 1.\n";
const CACHE: &str = "cache(Cont,N,Cache) :- 0 < N & size(Cont,S) & (S =< N & Cache = Cont or \
                     S > N & un(Rest,Cache,Cont) & disj(Rest,Cache) & size(Cache,N)).\n";

fn union_chain(prefix: &str, n: usize, out: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut prev = format!("{prefix}1");
    for i in 2..=n {
        let u = if i == n { out.to_string() } else { format!("U{i}") };
        parts.push(format!("un({prev},{prefix}{i},{u})"));
        prev = u;
    }
    parts
}

#[test]
fn criterion_1_goldens() {
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut check = |name: &str, src: String, ok: &dyn Fn(&SolveResult) -> bool| {
        let (r, d) = timed(|| solve(&src));
        slowest = slowest.max(d);
        if !ok(&r) || d >= Duration::from_secs(1) {
            failures.push(format!("{name} ({d:?}): {r:?}"));
        }
    };
    check(
        "un/size contradiction",
        "un(A,B,C) & size(A,M1) & size(B,M2) & size(B,M3) & M3 > M1 + M2.".into(),
        &|r| r.is_unsat(),
    );
    check(
        "un/size returned unchanged",
        "un(A,B,C) & size(A,M1) & size(B,M2) & size(B,M3) & M3 =< M1 + M2.".into(),
        &|r| {
            r.answers().len() == 1
                && r.answers()[0].bindings.is_empty()
                && r.answers()[0].residual.iter().filter(|c| c.name() == "size").count() == 3
        },
    );
    check("integer gap", "X > Y & X < Y + 1.".into(), &|r| r.is_unsat());
    check("un/un/neq", "un(A,B,C) & un(A,B,D) & C neq D.".into(), &|r| r.is_unsat());
    check("nested size", "size({{X},{Y}},N).".into(), &|r| {
        let got: BTreeSet<String> = r.answers().iter().map(|a| a.to_formula().to_string()).collect();
        got == BTreeSet::from(["N = 2 & X neq Y".to_string(), "N = 1 & Y = X".to_string()])
    });
    check(
        "insert VC",
        format!(
            "{INSERT}size(E,1) & inters(E,Content,M1) & size(M1,0) & size(Content,Size) & \
             sl_insert(Content,Size,E,Content_,Size_) & (Size_ =< 0 or size(Content_,M2) & M2 neq Size_)."
        ),
        &|r| r.is_unsat(),
    );
    check(
        "subset with equal sizes",
        "subset(A,B) & size(A,N) & size(B,N) & A neq B.".into(),
        &|r| r.is_unsat(),
    );
    check("cache query", format!("{CACHE}cache({{1,b,[2,q]}},2,Cache)."), &|r| {
        let got: BTreeSet<String> = r.answers().iter().map(|a| a.to_formula().to_string()).collect();
        r.answers().len() == 3
            && got
                == BTreeSet::from([
                    "Cache = {b,[2,q]}".to_string(),
                    "Cache = {1,[2,q]}".to_string(),
                    "Cache = {1,b}".to_string(),
                ])
    });
    check(
        "cache property",
        format!("{CACHE}cache(Cont,N,Cache) & size(Cont,M) & N < M & Cache = {{}}."),
        &|r| r.is_unsat(),
    );
    report(1, failures.is_empty(), &format!("9 goldens, slowest {slowest:?}"));
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn criterion_2_minimal_solution() {
    let opts = SolveOptions { fix_size: true, max_solutions: Some(1), ..SolveOptions::default() };
    let r = solve_with("size(A,M) & 1 =< M & subset(B,A) & size(B,N) & 5 =< N.", opts);
    let a = &r.answers()[0];
    let get = |v: &str| a.bindings.get(v).cloned();
    let elems: Vec<Term> = match get("A") {
        Some(t) => {
            let (es, tail) = t.set_spine();
            assert_eq!(*tail, Term::Empty);
            es.into_iter().cloned().collect()
        }
        None => Vec::new(),
    };
    let distinct: BTreeSet<&Term> = elems.iter().collect();
    let neqs = a.residual.iter().filter(|c| c.name() == "neq").count();
    let pass = get("M") == Some(Term::int(5))
        && get("N") == Some(Term::int(5))
        && get("B") == get("A")
        && elems.len() == 5
        && distinct.len() == 5
        && elems.iter().all(Term::is_var)
        && neqs == 10
        && a.residual.len() == 10;
    report(2, pass, &format!("answer {}", a.to_formula()));
    assert!(pass);
}

#[test]
fn criterion_3_inference_scaling() {
    let n = 20;
    let mut parts = union_chain("A", n, "B");
    parts.extend((1..=n).map(|i| format!("size(A{i},M{i})")));
    parts.push("size(B,K)".into());
    parts.push(format!("{} < K", (1..=n).map(|i| format!("M{i}")).collect::<Vec<_>>().join(" + ")));
    let src = format!("{}.", parts.join(" & "));
    let (r, d) = timed(|| solve(&src));
    let fast = r.is_unsat() && d < Duration::from_secs(1);
    let no_infer = SolveOptions {
        deadline: Deadline::after(Duration::from_secs(2)),
        size: SizeOptions { infer: false, ..SizeOptions::default() },
        ..SolveOptions::default()
    };
    let (r2, d2) = timed(|| solve_with(&src, no_infer));
    let contrast = match &r2 {
        SolveResult::Timeout => "timed out at 2 s".to_string(),
        other => format!("{} in {d2:?}", if other.is_unsat() { "unsat" } else { "sat (wrong)" }),
    };
    report(3, fast && !r2.is_sat(), &format!("with inference unsat in {d:?}; without inference {contrast}"));
    assert!(fast && !r2.is_sat());
}

#[test]
fn criterion_4_membership_scaling() {
    let mut parts = union_chain("A", 21, "U");
    parts.push("x in U".into());
    let src = format!("{}.", parts.join(" & "));
    let opts = SolveOptions { max_solutions: Some(1), ..SolveOptions::default() };
    let (r, d) = timed(|| solve_with(&src, opts));
    let pass = r.is_sat() && !r.answers()[0].residual.is_empty() && d < Duration::from_secs(1);
    report(4, pass, &format!("sat with {} residual atoms in {d:?}", r.answers().first().map_or(0, |a| a.residual.len())));
    assert!(pass);
}

/// Outcome of the agreement contract on one formula.
enum Agreement {
    Ok,
    Skipped,
    Violation(String),
}

fn agreement(src: &str) -> Agreement {
    let f = formula(src);
    let deadline = || Deadline::after(Duration::from_secs(5));
    let plain = SolveOptions { deadline: deadline(), max_solutions: Some(1), ..SolveOptions::default() };
    let verdict = cardset::sat_card(&f, &plain).expect("well-sorted input");
    if verdict.is_sat() {
        let fixed = SolveOptions { deadline: deadline(), fix_size: true, max_solutions: Some(1), ..SolveOptions::default() };
        let r = cardset::sat_card(&f, &fixed).expect("well-sorted input");
        let Some(answer) = r.answers().first() else {
            return if matches!(r, SolveResult::Timeout) {
                Agreement::Skipped
            } else {
                Agreement::Violation(format!("{src}: no minimal answer for a sat formula"))
            };
        };
        let inputs: Vec<_> = f.vars().into_iter().filter(|v| !v.is_fresh()).collect();
        match ground_answer(answer, &inputs, &grounding_scope()) {
            Err(_) => return Agreement::Skipped,
            Ok(None) => {
                return Agreement::Violation(format!("{src}: answer {} could not be grounded", answer.to_formula()))
            }
            Ok(Some(env)) => {
                if !eval_ground(&f, &env) {
                    return Agreement::Violation(format!("{src}: grounded answer {env:?} is false"));
                }
            }
        }
    }
    match oracle_sat(&f, &random_suite_scope()) {
        Ok(OracleVerdict::Sat(w)) if verdict.is_unsat() => {
            Agreement::Violation(format!("{src}: solver unsat but oracle found {w:?}"))
        }
        Ok(_) => Agreement::Ok,
        Err(_) if verdict.is_sat() => Agreement::Ok,
        Err(_) => Agreement::Skipped,
    }
}

#[test]
fn criterion_5_oracle_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e7_ca4d);
    let mut gen = FormulaGen { rng: &mut rng };
    let (mut ok, mut skipped) = (0, 0);
    let mut violations = Vec::new();
    let (_, d) = timed(|| {
        for _ in 0..1000 {
            let (src, _) = gen.formula();
            match agreement(&src) {
                Agreement::Ok => ok += 1,
                Agreement::Skipped => skipped += 1,
                Agreement::Violation(v) => violations.push(v),
            }
        }
    });
    report(
        5,
        violations.is_empty(),
        &format!("1000 formulas: {ok} checked, {skipped} beyond scope or budget, {} violations, {d:?}", violations.len()),
    );
    assert!(violations.is_empty(), "{violations:#?}");
}

fn random_problem(rng: &mut impl Rng) -> (LinProblem, Vec<(i64, i64)>) {
    let n = rng.gen_range(1..=5);
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let r = |x: i64| Rational::from_integer(BigInt::from(x));
    let mut p = LinProblem::new();
    let mut bounds = Vec::new();
    for v in &names {
        let (a, b) = (rng.gen_range(-8..=8), rng.gen_range(-8..=8));
        let (lo, hi) = (a.min(b), a.max(b));
        bounds.push((lo, hi));
        p.push(LinConstraint::lower(v, r(lo)));
        p.push(LinConstraint::upper(v, r(hi)));
    }
    for _ in 0..rng.gen_range(1..=4) {
        let coeffs: Vec<(String, Rational)> = names.iter().map(|v| (v.clone(), r(rng.gen_range(-5..=5)))).collect();
        let rel = [Rel::Eq, Rel::Le, Rel::Le, Rel::Lt][rng.gen_range(0..4)];
        p.push(LinConstraint::new(coeffs, rel, r(rng.gen_range(-8..=8))));
    }
    for v in &names {
        p.objective.insert(v.clone(), r(rng.gen_range(-5..=5)));
    }
    (p.all_integer(), bounds)
}

/// Minimum over the integer box by enumeration, in plain integers.
fn exhaustive_min(p: &LinProblem, bounds: &[(i64, i64)]) -> Option<i64> {
    let to_i = |x: &Rational| -> i64 { x.to_integer().try_into().unwrap() };
    let rows: Vec<(Vec<i64>, Rel, i64)> = p
        .constraints
        .iter()
        .map(|c| {
            let coeffs = (0..bounds.len()).map(|i| c.coeffs.get(&format!("x{i}")).map_or(0, to_i)).collect();
            (coeffs, c.rel, to_i(&c.rhs))
        })
        .collect();
    let obj: Vec<i64> = (0..bounds.len()).map(|i| p.objective.get(&format!("x{i}")).map_or(0, to_i)).collect();
    let mut point: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    let mut best: Option<i64> = None;
    loop {
        let ok = rows.iter().all(|(a, rel, b)| {
            let l: i64 = a.iter().zip(&point).map(|(x, y)| x * y).sum();
            match rel {
                Rel::Eq => l == *b,
                Rel::Le => l <= *b,
                Rel::Lt => l < *b,
            }
        });
        if ok {
            let v: i64 = obj.iter().zip(&point).map(|(x, y)| x * y).sum();
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        let mut i = 0;
        loop {
            if i == point.len() {
                return best;
            }
            if point[i] < bounds[i].1 {
                point[i] += 1;
                break;
            }
            point[i] = bounds[i].0;
            i += 1;
        }
    }
}

#[test]
fn criterion_6_ilp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11b);
    let mut bad = Vec::new();
    let mut feasible = 0;
    for i in 0..1000 {
        let (p, bounds) = random_problem(&mut rng);
        let expected = exhaustive_min(&p, &bounds);
        let got = bb_inf(&p, &Deadline::none()).unwrap();
        let ok = match (&got, expected) {
            (IlpResult::Infeasible, None) => true,
            (IlpResult::Min { value, vertex }, Some(m)) => {
                feasible += 1;
                let point: BTreeMap<String, Rational> =
                    vertex.iter().map(|(k, v)| (k.clone(), Rational::from_integer(v.clone()))).collect();
                *value == Rational::from_integer(m.into())
                    && p.constraints.iter().all(|c| c.holds_at(&point))
                    && p.objective_at(&point) == *value
            }
            _ => false,
        };
        if !ok {
            bad.push(format!("problem {i}: expected {expected:?}, got {got:?}"));
        }
    }
    report(6, bad.is_empty(), &format!("1000 problems ({feasible} feasible), {} disagreements", bad.len()));
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn criterion_7_sat_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc9f);
    let mut bad = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let mut cnf = Cnf::new(n);
        for _ in 0..rng.gen_range(0..=2 * n) {
            let len = rng.gen_range(1..=3);
            let clause: Vec<i32> = (0..len)
                .map(|_| {
                    let v = rng.gen_range(0..n);
                    if rng.gen_bool(0.5) { cardset::sat::pos(v) } else { cardset::sat::neg(v) }
                })
                .collect();
            cnf.add(clause);
        }
        let names: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
        let got: BTreeSet<Vec<bool>> = sat_enumerate(&cnf, &names, &Deadline::none())
            .unwrap()
            .into_iter()
            .map(|m| names.iter().map(|k| m[k]).collect())
            .collect();
        let mut expected = BTreeSet::new();
        for bits in 1u32..(1 << n) {
            let a: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            if cnf.eval(&a) {
                expected.insert(a);
            }
        }
        bad += (got != expected) as usize;
    }
    report(7, bad == 0, &format!("200 CNFs, {bad} disagreements with the truth table"));
    assert_eq!(bad, 0);
}

#[test]
fn criterion_8_corpus() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let jobs = std::thread::available_parallelism().map_or(2, |n| n.get()).min(8);
    let untimed = run_bench(&dir, &BenchOptions { timeout_millis: None, fix_size: false, jobs }).unwrap();
    let terminated = untimed.files.iter().all(|f| matches!(f.verdict, Verdict::Sat | Verdict::Unsat));
    let timed_run = run_bench(&dir, &BenchOptions { timeout_millis: Some(2000), fix_size: false, jobs: 1 }).unwrap();
    let total = timed_run.total();
    let solved = timed_run.solved();
    let annotated = timed_run.files.iter().all(|f| f.expected.is_some());
    let mismatches = untimed.mismatches() + timed_run.mismatches();
    let ratio = solved as f64 / total as f64;
    let sat_expected = timed_run.files.iter().filter(|f| f.expected == Some(Expect::Sat)).count();
    let pass = total >= 250 && terminated && annotated && mismatches == 0 && ratio >= 0.9;
    report(
        8,
        pass,
        &format!(
            "{total} files ({sat_expected} sat), all terminate untimed: {terminated}, {solved} solved at 2 s ({:.1}%), {mismatches} mismatches",
            ratio * 100.0
        ),
    );
    assert!(pass);
}

fn set_value(elems: &[&str]) -> Value {
    Value::Set(elems.iter().map(|e| Value::ur(*e)).collect())
}

fn subsets<'a>(universe: &[&'a str], max: usize) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    for bits in 0u32..(1 << universe.len()) {
        let s: Vec<&str> = (0..universe.len()).filter(|i| bits >> i & 1 == 1).map(|i| universe[i]).collect();
        if s.len() <= max {
            out.push(s);
        }
    }
    out
}

#[test]
fn criterion_9_size_lemmas() {
    let universe = ["a", "b", "c", "d"];
    let scope = Scope {
        ur_universe: universe.iter().map(|s| s.to_string()).collect(),
        int_box: (-1, 6),
        elem_ints: Vec::new(),
        max_nest: 0,
        max_width: 4,
        budget: 1_000_000,
    };
    let sat = |src: &str, env: &Valuation| -> bool {
        cardset::oracle::holds_with_locals(&formula(src), env, &scope).unwrap()
    };
    let mut ext_cases = 0;
    let mut bad = Vec::new();
    for x in universe {
        for a in subsets(&universe, 3) {
            for m in 0..=5 {
                let env: Valuation = [
                    ("X".to_string(), Value::ur(x)),
                    ("A".to_string(), set_value(&a)),
                    ("M".to_string(), Value::Int(m.into())),
                ]
                .into();
                let direct = eval_ground(&formula("size({X / A},M)."), &env);
                let expanded = sat(
                    "(X nin A & M = 1 + _n & size(A,_n) & 0 =< _n) or \
                     (A = {X / _S} & X nin _S & size(_S,_n) & M = 1 + _n & 0 =< _n).",
                    &env,
                );
                ext_cases += 1;
                if direct != expanded {
                    bad.push(format!("ext: x={x} A={a:?} m={m}: {direct} vs {expanded}"));
                }
            }
        }
    }
    let mut const_cases = 0;
    for c in 1..=3 {
        for a in subsets(&universe, 4) {
            let env: Valuation = [("A".to_string(), set_value(&a))].into();
            let direct = a.len() == c;
            let names: Vec<String> = (1..=c).map(|i| format!("_e{i}")).collect();
            let mut parts = vec![format!("A = {{{}}}", names.join(","))];
            for i in 0..c {
                for j in i + 1..c {
                    parts.push(format!("{} neq {}", names[i], names[j]));
                }
            }
            let expanded = sat(&format!("{}.", parts.join(" & ")), &env);
            const_cases += 1;
            if direct != expanded {
                bad.push(format!("const: c={c} A={a:?}: {direct} vs {expanded}"));
            }
        }
    }
    report(9, bad.is_empty(), &format!("{ext_cases} ext instances, {const_cases} const instances, {} disagreements", bad.len()));
    assert!(bad.is_empty(), "{bad:#?}");
}
