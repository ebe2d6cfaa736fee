//! Rewrite rules. Each function inspects one fully substituted constraint and
//! says what to do with it: drop it, fail, keep it as irreducible, bind a
//! variable, or replace it by a formula (whose disjunctions become branches).
//!
//! Within a constraint kind the first matching rule wins, in the order the
//! cases are written below.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::term::{fresh_name, normalize_int, sort_of, Constraint, Formula, Sort, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rewrite {
    True,
    False,
    /// Irreducible: move to the store.
    Store,
    Bind(Var, Term),
    Then(Formula),
}

/// Source of fresh variables.
pub struct Fresh<'a>(pub &'a mut u64);

impl Fresh<'_> {
    pub fn var(&mut self, sort: Sort) -> Term {
        Term::var(fresh_name(self.0), sort)
    }
    pub fn set(&mut self) -> Term {
        self.var(Sort::Set)
    }
    pub fn int(&mut self) -> Term {
        self.var(Sort::Int)
    }
    pub fn elem(&mut self) -> Term {
        self.var(Sort::Any)
    }
}

pub(crate) fn at(c: Constraint) -> Formula {
    Formula::Atom(c)
}
pub(crate) fn eq(a: Term, b: Term) -> Formula {
    at(Constraint::Eq(a, b))
}
pub(crate) fn neq(a: Term, b: Term) -> Formula {
    at(Constraint::Neq(a, b))
}
pub(crate) fn mem(a: Term, b: Term) -> Formula {
    at(Constraint::In(a, b))
}
pub(crate) fn nin(a: Term, b: Term) -> Formula {
    at(Constraint::Nin(a, b))
}
pub(crate) fn un(a: Term, b: Term, c: Term) -> Formula {
    at(Constraint::Un(a, b, c))
}
pub(crate) fn disj(a: Term, b: Term) -> Formula {
    at(Constraint::Disj(a, b))
}
pub(crate) fn size(a: Term, m: Term) -> Formula {
    at(Constraint::Size(a, m))
}
pub(crate) fn leq(a: Term, b: Term) -> Formula {
    at(Constraint::Leq(a, b))
}
fn and<const N: usize>(fs: [Formula; N]) -> Formula {
    Formula::and(fs)
}
fn or(fs: impl IntoIterator<Item = Formula>) -> Formula {
    Formula::or(fs)
}

fn sort(t: &Term) -> Sort {
    sort_of(t).unwrap_or(Sort::Any)
}

fn one_plus(n: Term) -> Term {
    Term::add(Term::int(1), n)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleConfig {
    /// Expand `size(A, c)` with a positive constant into `c` distinct fresh
    /// elements.
    pub const3: bool,
}

pub fn rewrite(c: &Constraint, fresh: &mut Fresh, cfg: RuleConfig) -> Rewrite {
    use Constraint::*;
    match c {
        Eq(l, r) => rewrite_eq(l, r, fresh),
        Neq(l, r) => rewrite_neq(l, r, fresh),
        In(x, s) => rewrite_in(x, s, fresh),
        Nin(x, s) => rewrite_nin(x, s),
        Un(a, b, c) => rewrite_un(a, b, c, fresh),
        Disj(a, b) => rewrite_disj(a, b),
        Size(a, m) => rewrite_size(a, m, fresh, cfg),
        Leq(..) | Lt(..) | Gt(..) | Geq(..) => rewrite_cmp(c),
        Inters(..) | Subset(..) | Diff(..) | Nun(..) | Ndisj(..) => {
            Rewrite::Then(expand_derived(c, fresh).expect("derived constraint"))
        }
    }
}

/// Definitions of the derived constraints in terms of the primitive ones.
pub fn expand_derived(c: &Constraint, fresh: &mut Fresh) -> Option<Formula> {
    use Constraint::*;
    Some(match c {
        Subset(a, b) => un(a.clone(), b.clone(), b.clone()),
        Inters(a, b, c) => {
            let (n1, n2) = (fresh.set(), fresh.set());
            and([
                un(c.clone(), n1.clone(), a.clone()),
                un(c.clone(), n2.clone(), b.clone()),
                disj(n1, n2),
            ])
        }
        Diff(a, b, c) => {
            let n = fresh.set();
            and([
                un(b.clone(), c.clone(), n.clone()),
                un(a.clone(), b.clone(), n),
                disj(c.clone(), b.clone()),
            ])
        }
        Nun(a, b, c) => {
            let n = fresh.elem();
            or([
                and([mem(n.clone(), c.clone()), nin(n.clone(), a.clone()), nin(n.clone(), b.clone())]),
                and([mem(n.clone(), a.clone()), nin(n.clone(), c.clone())]),
                and([mem(n.clone(), b.clone()), nin(n, c.clone())]),
            ])
        }
        Ndisj(a, b) => {
            let n = fresh.elem();
            and([mem(n.clone(), a.clone()), mem(n, b.clone())])
        }
        _ => return None,
    })
}

/// Which of two variables to bind: an `Any` variable before a sorted one,
/// then a solver variable before a user one, then the left one.
fn bind_left(x: &Var, y: &Var) -> bool {
    match (x.sort == Sort::Any, y.sort == Sort::Any) {
        (true, false) => return true,
        (false, true) => return false,
        _ => {}
    }
    match (x.is_fresh(), y.is_fresh()) {
        (false, true) => false,
        _ => true,
    }
}

fn rewrite_eq(l: &Term, r: &Term, fresh: &mut Fresh) -> Rewrite {
    if l == r {
        return Rewrite::True;
    }
    let (sl, sr) = (sort(l), sort(r));
    if !sl.admits(sr) {
        return Rewrite::False;
    }
    match (l, r) {
        (Term::Var(x), Term::Var(y)) => {
            return if bind_left(x, y) {
                Rewrite::Bind(x.clone(), r.clone())
            } else {
                Rewrite::Bind(y.clone(), l.clone())
            };
        }
        (Term::Var(x), t) | (t, Term::Var(x)) => return eq_var_term(x, t, fresh),
        _ => {}
    }
    if sl == Sort::Int || sr == Sort::Int {
        return int_eq(l, r);
    }
    match (l, r) {
        (Term::Ur(f, a), Term::Ur(g, b)) => {
            if f == g && a.len() == b.len() {
                Rewrite::Then(Formula::and(
                    a.iter().zip(b).map(|(x, y)| eq(x.clone(), y.clone())),
                ))
            } else {
                Rewrite::False
            }
        }
        (Term::Cons(..), Term::Cons(..)) => Rewrite::Then(set_unify(l, r, fresh)),
        _ => Rewrite::False,
    }
}

fn eq_var_term(x: &Var, t: &Term, fresh: &mut Fresh) -> Rewrite {
    if x.sort == Sort::Int && t.is_arith() && !matches!(t, Term::Int(_)) {
        return int_eq(&Term::Var(x.clone()), t);
    }
    if t.occurs(&x.name) {
        if let Term::Cons(..) = t {
            let (elems, tail) = t.set_spine();
            let tail_is_x = matches!(tail, Term::Var(v) if v.name == x.name);
            if tail_is_x && !elems.iter().any(|e| e.occurs(&x.name)) {
                let n = fresh.set();
                let elems: Vec<Term> = elems.into_iter().cloned().collect();
                return Rewrite::Then(eq(Term::Var(x.clone()), Term::set_with_tail(elems, n)));
            }
        }
        return Rewrite::False;
    }
    Rewrite::Bind(x.clone(), t.clone())
}

/// Integer equality not handled by plain binding.
fn int_eq(l: &Term, r: &Term) -> Rewrite {
    let (Ok(a), Ok(b)) = (normalize_int(l), normalize_int(r)) else {
        return Rewrite::False;
    };
    let lf = a.minus(&b);
    if lf.is_constant() {
        return if lf.constant.is_zero() { Rewrite::True } else { Rewrite::False };
    }
    if lf.coeffs.len() == 1 {
        let (name, c) = lf.coeffs.iter().next().unwrap();
        let (q, rem) = (-&lf.constant).div_rem(c);
        if !rem.is_zero() {
            return Rewrite::False;
        }
        let mut vars = Vec::new();
        l.collect_vars(&mut vars);
        r.collect_vars(&mut vars);
        let var = vars
            .into_iter()
            .find(|v| &v.name == name)
            .unwrap_or_else(|| Var::new(name.clone(), Sort::Int));
        return Rewrite::Bind(var, Term::Int(q));
    }
    Rewrite::Store
}

/// Set unification: CLP(SET) rule (1) and its same-tail variant.
fn set_unify(l: &Term, r: &Term, fresh: &mut Fresh) -> Formula {
    let (le, lt) = l.set_spine();
    let (re, rt) = r.set_spine();
    if let (Term::Var(x), Term::Var(y)) = (lt, rt) {
        if x == y {
            return same_tail(&le, &re, lt, fresh);
        }
    }
    let (Term::Cons(x, a), Term::Cons(y, b)) = (l, r) else {
        unreachable!("set_unify on non-extensional terms")
    };
    let (x, a, y, b) = (x.as_ref(), a.as_ref(), y.as_ref(), b.as_ref());
    let n = fresh.set();
    or([
        and([eq(x.clone(), y.clone()), eq(a.clone(), b.clone())]),
        and([eq(x.clone(), y.clone()), eq(l.clone(), b.clone())]),
        and([eq(x.clone(), y.clone()), eq(a.clone(), r.clone())]),
        and([
            eq(a.clone(), Term::cons(y.clone(), n.clone())),
            eq(Term::cons(x.clone(), n), b.clone()),
        ]),
    ])
}

/// `{t0..tm / X} = {t'0..t'n / X}`
fn same_tail(le: &[&Term], re: &[&Term], x: &Term, fresh: &mut Fresh) -> Formula {
    let build = |elems: &[&Term], tail: &Term| {
        Term::set_with_tail(elems.iter().map(|t| (*t).clone()), tail.clone())
    };
    let t0 = le[0].clone();
    let l = build(le, x);
    let l_rest = build(&le[1..], x);
    let r = build(re, x);
    let mut alts = Vec::new();
    for j in 0..re.len() {
        let without: Vec<&Term> = re.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, t)| *t).collect();
        let r_wo = build(&without, x);
        let head = eq(t0.clone(), re[j].clone());
        alts.push(and([head.clone(), eq(l_rest.clone(), r_wo.clone())]));
        alts.push(and([head.clone(), eq(l.clone(), r_wo)]));
        alts.push(and([head, eq(l_rest.clone(), r.clone())]));
    }
    let n = fresh.set();
    alts.push(and([
        eq(x.clone(), Term::cons(t0, n.clone())),
        eq(build(&le[1..], &n), build(re, &n)),
    ]));
    or(alts)
}

fn rewrite_in(x: &Term, s: &Term, fresh: &mut Fresh) -> Rewrite {
    match s {
        Term::Empty => Rewrite::False,
        Term::Cons(y, a) => Rewrite::Then(or([
            eq(x.clone(), y.as_ref().clone()),
            mem(x.clone(), a.as_ref().clone()),
        ])),
        Term::Var(_) => {
            let n = fresh.set();
            Rewrite::Then(eq(s.clone(), Term::cons(x.clone(), n)))
        }
        _ => Rewrite::False,
    }
}

fn rewrite_nin(x: &Term, s: &Term) -> Rewrite {
    match s {
        Term::Empty => Rewrite::True,
        Term::Cons(y, a) => Rewrite::Then(and([
            neq(x.clone(), y.as_ref().clone()),
            nin(x.clone(), a.as_ref().clone()),
        ])),
        // A set never belongs to itself, however deeply nested.
        Term::Var(v) if x.occurs(&v.name) => Rewrite::True,
        Term::Var(_) => Rewrite::Store,
        _ => Rewrite::True,
    }
}

fn rewrite_neq(l: &Term, r: &Term, fresh: &mut Fresh) -> Rewrite {
    let (sl, sr) = (sort(l), sort(r));
    if sl == Sort::Int && sr == Sort::Int {
        return Rewrite::Then(or([
            leq(l.clone(), Term::sub(r.clone(), Term::int(1))),
            leq(r.clone(), Term::sub(l.clone(), Term::int(1))),
        ]));
    }
    if l == r {
        return Rewrite::False;
    }
    if sl == Sort::Any || sr == Sort::Any {
        return match (l, r) {
            (Term::Var(_), _) | (_, Term::Var(_)) => Rewrite::Store,
            _ => neq_structural(l, r, fresh),
        };
    }
    if sl != sr {
        return Rewrite::True;
    }
    match (l, r) {
        (Term::Var(_), Term::Var(_)) => Rewrite::Store,
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if !t.occurs(&x.name) {
                return Rewrite::Store;
            }
            if let Term::Cons(..) = t {
                let (elems, tail) = t.set_spine();
                let tail_is_x = matches!(tail, Term::Var(v) if v.name == x.name);
                if tail_is_x && !elems.iter().any(|e| e.occurs(&x.name)) {
                    return Rewrite::Then(or(elems
                        .into_iter()
                        .map(|e| nin(e.clone(), Term::Var(x.clone())))));
                }
            }
            Rewrite::True
        }
        _ => neq_structural(l, r, fresh),
    }
}

fn neq_structural(l: &Term, r: &Term, fresh: &mut Fresh) -> Rewrite {
    match (l, r) {
        (Term::Ur(f, a), Term::Ur(g, b)) => {
            if f == g && a.len() == b.len() {
                Rewrite::Then(or(a.iter().zip(b).map(|(x, y)| neq(x.clone(), y.clone()))))
            } else {
                Rewrite::True
            }
        }
        (Term::Cons(..), Term::Cons(..)) => {
            let z = fresh.elem();
            Rewrite::Then(or([
                and([mem(z.clone(), l.clone()), nin(z.clone(), r.clone())]),
                and([mem(z.clone(), r.clone()), nin(z, l.clone())]),
            ]))
        }
        (Term::Int(a), Term::Int(b)) => {
            if a == b { Rewrite::False } else { Rewrite::True }
        }
        _ if sort(l) == sort(r) && sort(l) == Sort::Int => int_neq(l, r),
        _ => Rewrite::True,
    }
}

fn int_neq(l: &Term, r: &Term) -> Rewrite {
    Rewrite::Then(or([
        leq(l.clone(), Term::sub(r.clone(), Term::int(1))),
        leq(r.clone(), Term::sub(l.clone(), Term::int(1))),
    ]))
}

fn rewrite_un(a: &Term, b: &Term, c: &Term, fresh: &mut Fresh) -> Rewrite {
    if *c == Term::Empty {
        return Rewrite::Then(and([eq(a.clone(), Term::Empty), eq(b.clone(), Term::Empty)]));
    }
    if *a == Term::Empty {
        return Rewrite::Then(eq(b.clone(), c.clone()));
    }
    if *b == Term::Empty {
        return Rewrite::Then(eq(a.clone(), c.clone()));
    }
    if a == b {
        return Rewrite::Then(eq(a.clone(), c.clone()));
    }
    if let Term::Cons(x, a1) = a {
        return Rewrite::Then(un_ext(x, a1, b, c, fresh));
    }
    if let Term::Cons(x, b1) = b {
        return Rewrite::Then(un_ext(x, b1, a, c, fresh));
    }
    if let Term::Cons(x, c1) = c {
        let (x, c1) = (x.as_ref().clone(), c1.as_ref().clone());
        let (n, n1, n2) = (fresh.set(), fresh.set(), fresh.set());
        // C = {x} ⊎ N
        let split = or([
            and([nin(x.clone(), c1.clone()), eq(n.clone(), c1.clone())]),
            and([eq(c1, Term::cons(x.clone(), n.clone())), nin(x.clone(), n.clone())]),
        ]);
        let a_has = and([eq(a.clone(), Term::cons(x.clone(), n1.clone())), nin(x.clone(), n1.clone())]);
        let b_has = and([eq(b.clone(), Term::cons(x.clone(), n2.clone())), nin(x.clone(), n2.clone())]);
        let cases = or([
            and([a_has.clone(), nin(x.clone(), b.clone()), un(n1.clone(), b.clone(), n.clone())]),
            and([nin(x.clone(), a.clone()), b_has.clone(), un(a.clone(), n2.clone(), n.clone())]),
            and([a_has, b_has, un(n1, n2, n)]),
        ]);
        return Rewrite::Then(and([split, cases]));
    }
    Rewrite::Store
}

/// `un({x / A1}, B, C)`: C = {x} ⊎ N, A1 \ {x} = N1, and N is N1 ∪ (B \ {x}).
fn un_ext(x: &Term, a1: &Term, b: &Term, c: &Term, fresh: &mut Fresh) -> Formula {
    let (x, a1) = (x.clone(), a1.clone());
    let (n, n1, n2) = (fresh.set(), fresh.set(), fresh.set());
    and([
        eq(c.clone(), Term::cons(x.clone(), n.clone())),
        nin(x.clone(), n.clone()),
        or([
            and([nin(x.clone(), a1.clone()), eq(n1.clone(), a1.clone())]),
            and([eq(a1, Term::cons(x.clone(), n1.clone())), nin(x.clone(), n1.clone())]),
        ]),
        or([
            and([nin(x.clone(), b.clone()), un(n1.clone(), b.clone(), n.clone())]),
            and([
                eq(b.clone(), Term::cons(x.clone(), n2.clone())),
                nin(x, n2.clone()),
                un(n1, n2, n),
            ]),
        ]),
    ])
}

fn rewrite_disj(a: &Term, b: &Term) -> Rewrite {
    if *a == Term::Empty || *b == Term::Empty {
        return Rewrite::True;
    }
    if a == b && a.is_var() {
        return Rewrite::Then(eq(a.clone(), Term::Empty));
    }
    if let Term::Cons(x, a1) = a {
        return Rewrite::Then(and([
            nin(x.as_ref().clone(), b.clone()),
            disj(a1.as_ref().clone(), b.clone()),
        ]));
    }
    if let Term::Cons(x, b1) = b {
        return Rewrite::Then(and([
            nin(x.as_ref().clone(), a.clone()),
            disj(a.clone(), b1.as_ref().clone()),
        ]));
    }
    Rewrite::Store
}

fn rewrite_size(a: &Term, m: &Term, fresh: &mut Fresh, cfg: RuleConfig) -> Rewrite {
    if *a == Term::Empty {
        return Rewrite::Then(eq(m.clone(), Term::int(0)));
    }
    if let Term::Int(k) = m {
        if k.is_zero() {
            return Rewrite::Then(eq(a.clone(), Term::Empty));
        }
        if k.is_negative() {
            return Rewrite::False;
        }
    }
    if !matches!(m, Term::Var(_) | Term::Int(_)) {
        let n = fresh.int();
        return Rewrite::Then(and([
            size(a.clone(), n.clone()),
            eq(n.clone(), m.clone()),
            leq(Term::int(0), n),
        ]));
    }
    if let Term::Cons(x, a1) = a {
        let (x, a1) = (x.as_ref().clone(), a1.as_ref().clone());
        let n = fresh.int();
        let big_n = fresh.set();
        return Rewrite::Then(or([
            and([
                nin(x.clone(), a1.clone()),
                eq(m.clone(), one_plus(n.clone())),
                size(a1.clone(), n.clone()),
                leq(Term::int(0), n.clone()),
            ]),
            and([
                eq(a1, Term::cons(x.clone(), big_n.clone())),
                nin(x, big_n.clone()),
                size(big_n, n.clone()),
                eq(m.clone(), one_plus(n.clone())),
                leq(Term::int(0), n),
            ]),
        ]));
    }
    if let (true, Term::Var(_), Term::Int(k)) = (cfg.const3, a, m) {
        return Rewrite::Then(const3(a, k, fresh));
    }
    Rewrite::Store
}

/// `size(A, c)` with `c > 0` in minimal-solution mode:
/// `A = {n1,...,nc}` with all elements pairwise different.
pub fn const3(a: &Term, k: &BigInt, fresh: &mut Fresh) -> Formula {
    let mut elems = Vec::new();
    let mut i = BigInt::zero();
    while &i < k {
        elems.push(fresh.elem());
        i += BigInt::one();
    }
    let mut parts = vec![eq(a.clone(), Term::set_of(elems.clone()))];
    for i in 0..elems.len() {
        for j in i + 1..elems.len() {
            parts.push(neq(elems[i].clone(), elems[j].clone()));
        }
    }
    Formula::and(parts)
}

fn rewrite_cmp(c: &Constraint) -> Rewrite {
    let (a, b) = match c {
        Constraint::Leq(a, b) | Constraint::Lt(a, b) | Constraint::Gt(a, b) | Constraint::Geq(a, b) => (a, b),
        _ => unreachable!(),
    };
    let (Ok(x), Ok(y)) = (normalize_int(a), normalize_int(b)) else {
        return Rewrite::False;
    };
    let d = x.minus(&y);
    if !d.is_constant() {
        return Rewrite::Store;
    }
    let v = d.constant;
    let holds = match c {
        Constraint::Leq(..) => !v.is_positive(),
        Constraint::Lt(..) => v.is_negative(),
        Constraint::Gt(..) => v.is_positive(),
        _ => !v.is_negative(),
    };
    if holds { Rewrite::True } else { Rewrite::False }
}
