//! Sorted terms, constraints and formulas.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ModelError;

/// Prefix reserved for solver-generated variables.
pub const FRESH_PREFIX: &str = "_N";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    Set,
    Int,
    Ur,
    /// A variable only ever used as a set element or compared for equality
    /// with other such variables. It may denote a value of any sort.
    Any,
}

impl Sort {
    /// Whether a term of sort `other` may stand where `self` is expected.
    pub fn admits(self, other: Sort) -> bool {
        self == other || self == Sort::Any || other == Sort::Any
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sort::Set => "Set",
            Sort::Int => "Int",
            Sort::Ur => "Ur",
            Sort::Any => "Any",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Var { name: name.into(), sort }
    }

    pub fn is_fresh(&self) -> bool {
        self.name.starts_with('_')
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Empty,
    /// `{elem / rest}`
    Cons(Box<Term>, Box<Term>),
    Int(BigInt),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// `coeff * var`
    Scale(BigInt, Box<Term>),
    Ur(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term::Var(Var::new(name, sort))
    }

    pub fn set_var(name: impl Into<String>) -> Term {
        Term::var(name, Sort::Set)
    }

    pub fn int_var(name: impl Into<String>) -> Term {
        Term::var(name, Sort::Int)
    }

    pub fn int(n: impl Into<BigInt>) -> Term {
        Term::Int(n.into())
    }

    pub fn atom(name: impl Into<String>) -> Term {
        Term::Ur(name.into(), Vec::new())
    }

    pub fn cons(elem: Term, rest: Term) -> Term {
        Term::Cons(Box::new(elem), Box::new(rest))
    }

    /// `{e1, ..., en / tail}`
    pub fn set_with_tail(elems: impl IntoIterator<Item = Term>, tail: Term) -> Term {
        let elems: Vec<Term> = elems.into_iter().collect();
        elems
            .into_iter()
            .rev()
            .fold(tail, |acc, e| Term::cons(e, acc))
    }

    /// `{e1, ..., en}`
    pub fn set_of(elems: impl IntoIterator<Item = Term>) -> Term {
        Term::set_with_tail(elems, Term::Empty)
    }

    pub fn add(l: Term, r: Term) -> Term {
        Term::Add(Box::new(l), Box::new(r))
    }

    pub fn sub(l: Term, r: Term) -> Term {
        Term::Sub(Box::new(l), Box::new(r))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Whether this term is an integer expression (not just an integer variable).
    pub fn is_arith(&self) -> bool {
        matches!(
            self,
            Term::Int(_) | Term::Neg(_) | Term::Add(..) | Term::Sub(..) | Term::Scale(..)
        )
    }

    /// Splits an extensional set term into its elements and its tail.
    pub fn set_spine(&self) -> (Vec<&Term>, &Term) {
        let mut elems = Vec::new();
        let mut cur = self;
        while let Term::Cons(e, rest) = cur {
            elems.push(e.as_ref());
            cur = rest.as_ref();
        }
        (elems, cur)
    }

    /// Drops syntactically repeated elements from every set spine, keeping
    /// first occurrences. The result denotes the same value.
    pub fn dedup_elems(&self) -> Term {
        match self {
            Term::Cons(..) => {
                let (elems, tail) = self.set_spine();
                let mut kept: Vec<Term> = Vec::new();
                for e in elems {
                    let e = e.dedup_elems();
                    if !kept.contains(&e) {
                        kept.push(e);
                    }
                }
                Term::set_with_tail(kept, tail.dedup_elems())
            }
            Term::Ur(n, args) => Term::Ur(n.clone(), args.iter().map(Term::dedup_elems).collect()),
            t => t.clone(),
        }
    }

    pub fn occurs(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v.name == name,
            Term::Empty | Term::Int(_) => false,
            Term::Cons(a, b) | Term::Add(a, b) | Term::Sub(a, b) => {
                a.occurs(name) || b.occurs(name)
            }
            Term::Neg(a) | Term::Scale(_, a) => a.occurs(name),
            Term::Ur(_, args) => args.iter().any(|a| a.occurs(name)),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Empty | Term::Int(_) => {}
            Term::Cons(a, b) | Term::Add(a, b) | Term::Sub(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Term::Neg(a) | Term::Scale(_, a) => a.collect_vars(out),
            Term::Ur(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn is_ground(&self) -> bool {
        let mut vs = Vec::new();
        self.collect_vars(&mut vs);
        vs.is_empty()
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Empty => Term::Empty,
            Term::Int(n) => Term::Int(n.clone()),
            Term::Cons(a, b) => Term::cons(a.map_vars(f), b.map_vars(f)),
            Term::Add(a, b) => Term::add(a.map_vars(f), b.map_vars(f)),
            Term::Sub(a, b) => Term::sub(a.map_vars(f), b.map_vars(f)),
            Term::Neg(a) => Term::Neg(Box::new(a.map_vars(f))),
            Term::Scale(c, a) => Term::Scale(c.clone(), Box::new(a.map_vars(f))),
            Term::Ur(n, args) => Term::Ur(n.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }
}

/// The sort of a term, checking the constructor sort table on the way.
pub fn sort_of(t: &Term) -> Result<Sort, ModelError> {
    match t {
        Term::Var(v) => Ok(v.sort),
        Term::Empty => Ok(Sort::Set),
        Term::Cons(e, rest) => {
            sort_of(e)?;
            let rs = sort_of(rest)?;
            if Sort::Set.admits(rs) {
                Ok(Sort::Set)
            } else {
                Err(ModelError::IllSorted(format!(
                    "set part of {t} is of sort {rs}, expected Set"
                )))
            }
        }
        Term::Int(_) => Ok(Sort::Int),
        Term::Neg(a) => expect_int(a).map(|_| Sort::Int),
        Term::Add(a, b) | Term::Sub(a, b) => {
            expect_int(a)?;
            expect_int(b)?;
            Ok(Sort::Int)
        }
        Term::Scale(_, v) => match v.as_ref() {
            Term::Var(var) if Sort::Int.admits(var.sort) => Ok(Sort::Int),
            other => Err(ModelError::IllSorted(format!(
                "scaled term {other} must be an integer variable"
            ))),
        },
        Term::Ur(_, args) => {
            for a in args {
                sort_of(a)?;
            }
            Ok(Sort::Ur)
        }
    }
}

fn expect_int(t: &Term) -> Result<(), ModelError> {
    let s = sort_of(t)?;
    if Sort::Int.admits(s) {
        Ok(())
    } else {
        Err(ModelError::IllSorted(format!("{t} is of sort {s}, expected Int")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Eq(Term, Term),
    Neq(Term, Term),
    In(Term, Term),
    Nin(Term, Term),
    Un(Term, Term, Term),
    Disj(Term, Term),
    Size(Term, Term),
    Leq(Term, Term),
    Lt(Term, Term),
    Gt(Term, Term),
    Geq(Term, Term),
    Inters(Term, Term, Term),
    Subset(Term, Term),
    Diff(Term, Term, Term),
    Nun(Term, Term, Term),
    Ndisj(Term, Term),
}

impl Constraint {
    pub fn args(&self) -> Vec<&Term> {
        use Constraint::*;
        match self {
            Eq(a, b) | Neq(a, b) | In(a, b) | Nin(a, b) | Disj(a, b) | Size(a, b) | Leq(a, b)
            | Lt(a, b) | Gt(a, b) | Geq(a, b) | Subset(a, b) | Ndisj(a, b) => vec![a, b],
            Un(a, b, c) | Inters(a, b, c) | Diff(a, b, c) | Nun(a, b, c) => vec![a, b, c],
        }
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Constraint {
        use Constraint::*;
        match self {
            Eq(a, b) => Eq(f(a), f(b)),
            Neq(a, b) => Neq(f(a), f(b)),
            In(a, b) => In(f(a), f(b)),
            Nin(a, b) => Nin(f(a), f(b)),
            Un(a, b, c) => Un(f(a), f(b), f(c)),
            Disj(a, b) => Disj(f(a), f(b)),
            Size(a, b) => Size(f(a), f(b)),
            Leq(a, b) => Leq(f(a), f(b)),
            Lt(a, b) => Lt(f(a), f(b)),
            Gt(a, b) => Gt(f(a), f(b)),
            Geq(a, b) => Geq(f(a), f(b)),
            Inters(a, b, c) => Inters(f(a), f(b), f(c)),
            Subset(a, b) => Subset(f(a), f(b)),
            Diff(a, b, c) => Diff(f(a), f(b), f(c)),
            Nun(a, b, c) => Nun(f(a), f(b), f(c)),
            Ndisj(a, b) => Ndisj(f(a), f(b)),
        }
    }

    pub fn occurs(&self, name: &str) -> bool {
        self.args().iter().any(|t| t.occurs(name))
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        for t in self.args() {
            t.collect_vars(out);
        }
    }

    /// `≤`, `<`, `>`, `≥`: always integer constraints.
    pub fn is_comparison(&self) -> bool {
        matches!(
            self,
            Constraint::Leq(..) | Constraint::Lt(..) | Constraint::Gt(..) | Constraint::Geq(..)
        )
    }

    /// Whether this constraint relates integer terms only.
    pub fn is_integer(&self) -> bool {
        match self {
            Constraint::Eq(a, b) | Constraint::Neq(a, b) => is_int_pair(a, b),
            c => c.is_comparison(),
        }
    }

    pub fn name(&self) -> &'static str {
        use Constraint::*;
        match self {
            Eq(..) => "=",
            Neq(..) => "neq",
            In(..) => "in",
            Nin(..) => "nin",
            Un(..) => "un",
            Disj(..) => "disj",
            Size(..) => "size",
            Leq(..) => "=<",
            Lt(..) => "<",
            Gt(..) => ">",
            Geq(..) => ">=",
            Inters(..) => "inters",
            Subset(..) => "subset",
            Diff(..) => "diff",
            Nun(..) => "nun",
            Ndisj(..) => "ndisj",
        }
    }

    /// Checks the predicate sort table.
    pub fn check_sorts(&self) -> Result<(), ModelError> {
        use Constraint::*;
        let need = |t: &Term, s: Sort| -> Result<(), ModelError> {
            let ts = sort_of(t)?;
            if s.admits(ts) {
                Ok(())
            } else {
                Err(ModelError::IllSorted(format!(
                    "argument {t} of {} has sort {ts}, expected {s}",
                    self.name()
                )))
            }
        };
        match self {
            Eq(a, b) | Neq(a, b) => {
                sort_of(a)?;
                sort_of(b)?;
                Ok(())
            }
            In(x, s) | Nin(x, s) => {
                sort_of(x)?;
                need(s, Sort::Set)
            }
            Un(a, b, c) | Inters(a, b, c) | Diff(a, b, c) | Nun(a, b, c) => {
                need(a, Sort::Set)?;
                need(b, Sort::Set)?;
                need(c, Sort::Set)
            }
            Disj(a, b) | Subset(a, b) | Ndisj(a, b) => {
                need(a, Sort::Set)?;
                need(b, Sort::Set)
            }
            Size(s, n) => {
                need(s, Sort::Set)?;
                need(n, Sort::Int)
            }
            Leq(a, b) | Lt(a, b) | Gt(a, b) | Geq(a, b) => {
                need(a, Sort::Int)?;
                need(b, Sort::Int)
            }
        }
    }
}

fn is_int_pair(a: &Term, b: &Term) -> bool {
    let sa = sort_of(a).unwrap_or(Sort::Any);
    let sb = sort_of(b).unwrap_or(Sort::Any);
    sa == Sort::Int && sb == Sort::Int
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Constraint),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(c: Constraint) -> Formula {
        Formula::Atom(c)
    }

    /// Conjunction, flattening nested conjunctions.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::And(inner) => out.extend(inner),
                Formula::True => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction, flattening nested disjunctions.
    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::Or(inner) => out.extend(inner),
                Formula::False => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn atoms(&self) -> Vec<&Constraint> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |c| out.push(c));
        out
    }

    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Constraint)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(c) => f(c),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.visit_atoms(f)),
        }
    }

    pub fn map_constraints(&self, f: &mut impl FnMut(&Constraint) -> Formula) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(c) => f(c),
            Formula::And(fs) => Formula::and(fs.iter().map(|g| g.map_constraints(f))),
            Formula::Or(fs) => Formula::or(fs.iter().map(|g| g.map_constraints(f))),
        }
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |c| c.collect_vars(&mut out));
        out
    }

    pub fn check_sorts(&self) -> Result<(), ModelError> {
        let mut res = Ok(());
        self.visit_atoms(&mut |c| {
            if res.is_ok() {
                res = c.check_sorts();
            }
        });
        res
    }
}

/// Variable bindings. Kept idempotent: no bound variable occurs in any
/// right-hand side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, (Var, Term)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.bindings.get(name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.values().map(|(v, t)| (v, t))
    }

    /// Adds `var ↦ term`, rewriting existing right-hand sides so the
    /// substitution stays idempotent. `term` must not mention `var`.
    pub fn bind(&mut self, var: Var, term: Term) {
        debug_assert!(!term.occurs(&var.name));
        let single = Substitution::single(var.clone(), term.clone());
        for (_, rhs) in self.bindings.values_mut() {
            if rhs.occurs(&var.name) {
                *rhs = single.apply_term(rhs);
            }
        }
        let term = self.apply_term(&term);
        self.bindings.insert(var.name.clone(), (var, term));
    }

    pub fn single(var: Var, term: Term) -> Self {
        let mut bindings = BTreeMap::new();
        bindings.insert(var.name.clone(), (var, term));
        Substitution { bindings }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Self {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            s.bind(v, t);
        }
        s
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| match self.bindings.get(&v.name) {
            Some((_, rhs)) => rhs.clone(),
            None => Term::Var(v.clone()),
        })
    }

    pub fn apply_constraint(&self, c: &Constraint) -> Constraint {
        c.map_terms(|t| self.apply_term(t))
    }

    pub fn apply_formula(&self, f: &Formula) -> Formula {
        f.map_constraints(&mut |c| Formula::Atom(self.apply_constraint(c)))
    }

    /// Keeps only bindings for the given variable names.
    pub fn restrict(&self, names: &BTreeSet<String>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(k, _)| names.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Canonical linear form `constant + Σ coeff·var` with no zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinForm {
    pub constant: BigInt,
    pub coeffs: BTreeMap<String, BigInt>,
}

impl LinForm {
    pub fn constant(c: impl Into<BigInt>) -> Self {
        LinForm { constant: c.into(), coeffs: BTreeMap::new() }
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.into(), BigInt::one());
        LinForm { constant: BigInt::zero(), coeffs }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_scaled(&mut self, other: &LinForm, k: &BigInt) {
        self.constant += &other.constant * k;
        for (v, c) in &other.coeffs {
            let e = self.coeffs.entry(v.clone()).or_insert_with(BigInt::zero);
            *e += c * k;
            if e.is_zero() {
                self.coeffs.remove(v);
            }
        }
    }

    pub fn scaled(&self, k: &BigInt) -> LinForm {
        let mut out = LinForm::default();
        out.add_scaled(self, k);
        out
    }

    pub fn minus(&self, other: &LinForm) -> LinForm {
        let mut out = self.clone();
        out.add_scaled(other, &-BigInt::one());
        out
    }

    pub fn eval(&self, env: &impl Fn(&str) -> Option<BigInt>) -> Option<BigInt> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * env(v)?;
        }
        Some(acc)
    }

    /// Back to a term, in a stable readable order.
    pub fn to_term(&self) -> Term {
        let mut acc: Option<Term> = None;
        for (v, c) in &self.coeffs {
            let var = Term::int_var(v.clone());
            let (piece, negative) = if c.is_one() {
                (var, false)
            } else if *c == -BigInt::one() {
                (var, true)
            } else if c.is_negative() {
                (Term::Scale(-c, Box::new(var)), true)
            } else {
                (Term::Scale(c.clone(), Box::new(var)), false)
            };
            acc = Some(match (acc, negative) {
                (None, false) => piece,
                (None, true) => Term::Neg(Box::new(piece)),
                (Some(a), false) => Term::add(a, piece),
                (Some(a), true) => Term::sub(a, piece),
            });
        }
        match acc {
            None => Term::Int(self.constant.clone()),
            Some(a) if self.constant.is_zero() => a,
            Some(a) if self.constant.is_negative() => Term::sub(a, Term::Int(-&self.constant)),
            Some(a) => Term::add(a, Term::Int(self.constant.clone())),
        }
    }
}

/// Linear normal form of an integer term.
pub fn normalize_int(t: &Term) -> Result<LinForm, ModelError> {
    match t {
        Term::Int(n) => Ok(LinForm::constant(n.clone())),
        Term::Var(v) if Sort::Int.admits(v.sort) => Ok(LinForm::var(v.name.clone())),
        Term::Neg(a) => Ok(normalize_int(a)?.scaled(&-BigInt::one())),
        Term::Add(a, b) => {
            let mut l = normalize_int(a)?;
            l.add_scaled(&normalize_int(b)?, &BigInt::one());
            Ok(l)
        }
        Term::Sub(a, b) => Ok(normalize_int(a)?.minus(&normalize_int(b)?)),
        Term::Scale(c, v) => match v.as_ref() {
            Term::Var(_) | Term::Int(_) => Ok(normalize_int(v)?.scaled(c)),
            _ => Err(ModelError::NonLinear(t.to_string())),
        },
        other => Err(ModelError::IllSorted(format!("{other} is not an integer term"))),
    }
}

/// Builds `l * r` for integer terms, rejecting products of two non-constants.
pub fn int_product(l: Term, r: Term) -> Result<Term, ModelError> {
    let ll = normalize_int(&l)?;
    let rl = normalize_int(&r)?;
    let (k, other) = match (ll.is_constant(), rl.is_constant()) {
        (true, _) => (ll.constant, r),
        (_, true) => (rl.constant, l),
        _ => return Err(ModelError::NonLinear(format!("{l} * {r}"))),
    };
    Ok(match other {
        Term::Var(_) => Term::Scale(k, Box::new(other)),
        Term::Int(n) => Term::Int(k * n),
        _ => normalize_int(&other)?.scaled(&k).to_term(),
    })
}

pub(crate) fn fresh_name(counter: &mut u64) -> String {
    *counter += 1;
    format!("{FRESH_PREFIX}{counter}")
}
