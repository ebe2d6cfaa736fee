//! Brute-force model finder over a finite scope. Slow and simple on purpose:
//! it shares no code with the rewriting solver and serves as ground truth
//! in tests.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::deadline::Deadline;
use crate::rewrite::{int_witness, AnswerFormula};
use crate::term::{Constraint, Formula, Sort, Term, Var};

/// A ground value of the interpretation domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Int(BigInt),
    Ur(String, Vec<Value>),
    Set(BTreeSet<Value>),
}

impl Value {
    pub fn empty() -> Value {
        Value::Set(BTreeSet::new())
    }

    pub fn ur(name: impl Into<String>) -> Value {
        Value::Ur(name.into(), Vec::new())
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    /// The value written back as a ground term.
    pub fn to_term(&self) -> Term {
        match self {
            Value::Int(n) => Term::Int(n.clone()),
            Value::Ur(f, args) => Term::Ur(f.clone(), args.iter().map(Value::to_term).collect()),
            Value::Set(s) => Term::set_of(s.iter().map(Value::to_term)),
        }
    }

    fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Int,
            Value::Ur(..) => Sort::Ur,
            Value::Set(_) => Sort::Set,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_term().fmt(f)
    }
}

pub type Valuation = BTreeMap<String, Value>;

/// The finite universe searched by [`oracle_sat`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    pub ur_universe: Vec<String>,
    /// Inclusive range for integer variables.
    pub int_box: (i64, i64),
    /// Integers that may occur as set elements.
    pub elem_ints: Vec<i64>,
    /// Nesting depth of set values: 0 means sets of atoms only.
    pub max_nest: usize,
    pub max_width: usize,
    /// Search nodes visited before giving up.
    pub budget: u64,
}

impl Default for Scope {
    fn default() -> Self {
        Scope {
            ur_universe: vec!["a".into(), "b".into(), "c".into()],
            int_box: (-4, 4),
            elem_ints: Vec::new(),
            max_nest: 1,
            max_width: 3,
            budget: 5_000_000,
        }
    }
}

impl Scope {
    fn atoms(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self.ur_universe.iter().map(Value::ur).collect();
        out.extend(self.elem_ints.iter().map(|&n| Value::Int(n.into())));
        out
    }

    /// Sets of depth at most `depth`, smallest first.
    fn sets(&self, depth: usize) -> Vec<Value> {
        let mut pool = self.atoms();
        if depth > 0 {
            pool.extend(self.sets(depth - 1));
        }
        let mut out = Vec::new();
        for k in 0..=self.max_width.min(pool.len()) {
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                out.push(Value::Set(idx.iter().map(|&i| pool[i].clone()).collect()));
                if !next_combination(&mut idx, pool.len()) {
                    break;
                }
            }
        }
        out
    }

    fn domain(&self, sort: Sort) -> Vec<Value> {
        match sort {
            Sort::Int => (self.int_box.0..=self.int_box.1).map(|n| Value::Int(n.into())).collect(),
            Sort::Ur => self.ur_universe.iter().map(Value::ur).collect(),
            Sort::Set => self.sets(self.max_nest),
            Sort::Any => {
                let mut d = self.atoms();
                if self.max_nest > 0 {
                    d.extend(self.sets(self.max_nest - 1));
                }
                d
            }
        }
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Sat(Valuation),
    UnsatWithinScope,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scope too large: search budget of {0} nodes exhausted")]
pub struct ScopeTooLarge(pub u64);

/// Value of a term, or `None` when a variable is unassigned or the term is
/// ill-formed under the valuation (for example a non-set tail).
pub fn eval_term(t: &Term, env: &Valuation) -> Option<Value> {
    Some(match t {
        Term::Var(v) => env.get(&v.name)?.clone(),
        Term::Empty => Value::empty(),
        Term::Cons(e, rest) => {
            let e = eval_term(e, env)?;
            let Value::Set(mut s) = eval_term(rest, env)? else { return None };
            s.insert(e);
            Value::Set(s)
        }
        Term::Int(n) => Value::Int(n.clone()),
        Term::Neg(a) => Value::Int(-int(a, env)?),
        Term::Add(a, b) => Value::Int(int(a, env)? + int(b, env)?),
        Term::Sub(a, b) => Value::Int(int(a, env)? - int(b, env)?),
        Term::Scale(c, a) => Value::Int(c * int(a, env)?),
        Term::Ur(f, args) => {
            Value::Ur(f.clone(), args.iter().map(|a| eval_term(a, env)).collect::<Option<_>>()?)
        }
    })
}

fn int(t: &Term, env: &Valuation) -> Option<BigInt> {
    match eval_term(t, env)? {
        Value::Int(n) => Some(n),
        _ => None,
    }
}

fn set(t: &Term, env: &Valuation) -> Option<BTreeSet<Value>> {
    match eval_term(t, env)? {
        Value::Set(s) => Some(s),
        _ => None,
    }
}

/// Truth of a constraint whose variables are all assigned. Set predicates
/// applied to non-sets are false; `nin` on a non-set is true.
pub fn eval_constraint(c: &Constraint, env: &Valuation) -> bool {
    use Constraint::*;
    let union = |a: &Term, b: &Term, c: &Term| -> Option<bool> {
        let (a, b, c) = (set(a, env)?, set(b, env)?, set(c, env)?);
        Some(a.union(&b).cloned().collect::<BTreeSet<_>>() == c)
    };
    let disjoint = |a: &Term, b: &Term| -> Option<bool> { Some(set(a, env)?.is_disjoint(&set(b, env)?)) };
    let cmp = |a: &Term, b: &Term| -> Option<std::cmp::Ordering> { Some(int(a, env)?.cmp(&int(b, env)?)) };
    let r = match c {
        Eq(a, b) => eval_term(a, env).zip(eval_term(b, env)).map(|(x, y)| x == y),
        Neq(a, b) => eval_term(a, env).zip(eval_term(b, env)).map(|(x, y)| x != y),
        In(x, s) => eval_term(x, env).map(|x| set(s, env).is_some_and(|s| s.contains(&x))),
        Nin(x, s) => eval_term(x, env).map(|x| !set(s, env).is_some_and(|s| s.contains(&x))),
        Un(a, b, c) => union(a, b, c),
        Nun(a, b, c) => union(a, b, c).map(|u| !u),
        Disj(a, b) => disjoint(a, b),
        Ndisj(a, b) => disjoint(a, b).map(|d| !d),
        Size(a, m) => set(a, env).zip(int(m, env)).map(|(s, m)| BigInt::from(s.len()) == m),
        Leq(a, b) => cmp(a, b).map(|o| o.is_le()),
        Lt(a, b) => cmp(a, b).map(|o| o.is_lt()),
        Gt(a, b) => cmp(a, b).map(|o| o.is_gt()),
        Geq(a, b) => cmp(a, b).map(|o| o.is_ge()),
        Inters(a, b, c) => (|| {
            let (a, b, c) = (set(a, env)?, set(b, env)?, set(c, env)?);
            Some(a.intersection(&b).cloned().collect::<BTreeSet<_>>() == c)
        })(),
        Subset(a, b) => (|| Some(set(a, env)?.is_subset(&set(b, env)?)))(),
        Diff(a, b, c) => (|| {
            let (a, b, c) = (set(a, env)?, set(b, env)?, set(c, env)?);
            Some(a.difference(&b).cloned().collect::<BTreeSet<_>>() == c)
        })(),
    };
    r.unwrap_or(false)
}

/// Truth of a formula under a valuation grounding all of its variables.
pub fn eval_ground(f: &Formula, env: &Valuation) -> bool {
    eval3(f, env) == Some(true)
}

/// Three-valued evaluation: `None` while some deciding atom still has an
/// unassigned variable.
fn eval3(f: &Formula, env: &Valuation) -> Option<bool> {
    match f {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::Atom(c) => {
            let mut vs = Vec::new();
            c.collect_vars(&mut vs);
            if vs.iter().all(|v| env.contains_key(&v.name)) {
                Some(eval_constraint(c, env))
            } else {
                None
            }
        }
        Formula::And(fs) => {
            let mut all = true;
            for g in fs {
                match eval3(g, env) {
                    Some(false) => return Some(false),
                    None => all = false,
                    Some(true) => {}
                }
            }
            all.then_some(true)
        }
        Formula::Or(fs) => {
            let mut none = true;
            for g in fs {
                match eval3(g, env) {
                    Some(true) => return Some(true),
                    None => none = false,
                    Some(false) => {}
                }
            }
            none.then_some(false)
        }
    }
}

/// Exhaustive search for a model of `f` within `scope`. Variables are
/// assigned integers first, then ur-elements, elements and sets; any
/// subformula decided false prunes the branch.
pub fn oracle_sat(f: &Formula, scope: &Scope) -> Result<OracleVerdict, ScopeTooLarge> {
    let mut vars = f.vars();
    vars.sort_by_key(|v| (sort_rank(v.sort), v.name.clone()));
    let mut by_sort: BTreeMap<Sort, Vec<Value>> = BTreeMap::new();
    for v in &vars {
        by_sort.entry(v.sort).or_insert_with(|| scope.domain(v.sort));
    }
    let domains: Vec<&[Value]> = vars.iter().map(|v| by_sort[&v.sort].as_slice()).collect();
    let mut env = Valuation::new();
    let mut nodes = 0u64;
    if search(f, &vars, &domains, 0, &mut env, &mut nodes, scope.budget)? {
        debug_assert!(eval_ground(f, &env));
        Ok(OracleVerdict::Sat(env))
    } else {
        Ok(OracleVerdict::UnsatWithinScope)
    }
}

fn sort_rank(s: Sort) -> u8 {
    match s {
        Sort::Int => 0,
        Sort::Ur => 1,
        Sort::Any => 2,
        Sort::Set => 3,
    }
}

fn search(
    f: &Formula,
    vars: &[Var],
    domains: &[&[Value]],
    k: usize,
    env: &mut Valuation,
    nodes: &mut u64,
    budget: u64,
) -> Result<bool, ScopeTooLarge> {
    *nodes += 1;
    if *nodes > budget {
        return Err(ScopeTooLarge(budget));
    }
    match eval3(f, env) {
        Some(b) => return Ok(b),
        None if k == vars.len() => return Ok(false),
        None => {}
    }
    for v in domains[k] {
        env.insert(vars[k].name.clone(), v.clone());
        if search(f, vars, domains, k + 1, env, nodes, budget)? {
            return Ok(true);
        }
    }
    env.remove(&vars[k].name);
    Ok(false)
}

/// Whether `env` can be extended to the `_`-prefixed variables of `f`
/// (such as macro locals) so that `f` holds.
pub fn holds_with_locals(f: &Formula, env: &Valuation, scope: &Scope) -> Result<bool, ScopeTooLarge> {
    let g = substitute(f, env);
    Ok(matches!(oracle_sat(&g, scope)?, OracleVerdict::Sat(_)))
}

fn substitute(f: &Formula, env: &Valuation) -> Formula {
    let subst = |t: &Term| {
        t.map_vars(&mut |v| match env.get(&v.name) {
            Some(x) => x.to_term(),
            None => Term::Var(v.clone()),
        })
    };
    f.map_constraints(&mut |c| Formula::Atom(c.map_terms(subst)))
}

/// Turns a solver answer into a concrete valuation of `inputs`: integer
/// constraints are solved exactly, the remaining residual variables are
/// searched within `scope` widened by a few fresh ur-elements. Returns
/// `None` when no grounding is found.
pub fn ground_answer(
    answer: &AnswerFormula,
    inputs: &[Var],
    scope: &Scope,
) -> Result<Option<Valuation>, ScopeTooLarge> {
    let residual = Formula::and(answer.residual.iter().cloned().map(Formula::Atom));
    let mut env = Valuation::new();
    if let Ok(Some(ints)) = int_witness(&answer.residual, &Deadline::none()) {
        for (k, n) in ints {
            env.insert(k, Value::Int(n));
        }
    }
    let mut scope = scope.clone();
    let mut open = residual.vars();
    for (_, t) in answer.bindings.iter() {
        t.collect_vars(&mut open);
    }
    let fresh = open.iter().filter(|v| matches!(v.sort, Sort::Any | Sort::Ur)).count().min(4);
    scope.ur_universe.extend((1..=fresh).map(|i| format!("u{i}")));
    // Unconstrained binding variables still need values, so search over
    // the binding terms as well as the residual.
    let mut parts = vec![substitute(&residual, &env)];
    for v in open.iter().filter(|v| !env.contains_key(&v.name)) {
        parts.push(Formula::Atom(Constraint::Eq(Term::Var(v.clone()), Term::Var(v.clone()))));
    }
    let goal = Formula::and(parts);
    let OracleVerdict::Sat(model) = oracle_sat(&goal, &scope)? else {
        return Ok(None);
    };
    env.extend(model);
    let mut out = Valuation::new();
    for v in inputs {
        let value = match answer.bindings.get(&v.name) {
            Some(t) => eval_term(t, &env),
            None => env.get(&v.name).cloned(),
        };
        let value = match value {
            Some(x) => x,
            None => match scope.domain(v.sort).into_iter().next() {
                Some(x) => x,
                None => return Ok(None),
            },
        };
        if !v.sort.admits(value.sort()) {
            return Ok(None);
        }
        out.insert(v.name.clone(), value);
    }
    Ok(Some(out))
}
