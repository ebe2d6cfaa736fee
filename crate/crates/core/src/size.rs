//! Cardinality phase: Venn-region arrangements plus integer programming.
//!
//! The irreducible store is mapped to unions, disjointness pairs, size pairs
//! and linear integer rows. Region patterns come from all-solutions SAT over
//! the union/disjointness clauses; each candidate arrangement is a subset of
//! those patterns whose region sizes must satisfy the integer rows.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

use crate::deadline::Deadline;
use crate::error::{ModelError, Timeout};
use crate::ilp::{bb_inf, lp_feasible, IlpResult, LinConstraint, LpResult, Rel};
use crate::sat::{self, Cnf};
use crate::term::{normalize_int, Constraint, LinForm, Term};
use crate::{LinProblem, Rational};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ZaProblem {
    pub unions: Vec<[String; 3]>,
    pub disjoints: Vec<[String; 2]>,
    /// Set variable and its cardinality (an integer variable or constant).
    pub sizes: Vec<(String, LinForm)>,
    pub int_constraints: Vec<LinConstraint<Rational>>,
}

impl ZaProblem {
    pub fn set_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for u in &self.unions {
            out.extend(u.iter().cloned());
        }
        for d in &self.disjoints {
            out.extend(d.iter().cloned());
        }
        out.extend(self.sizes.iter().map(|(s, _)| s.clone()));
        out
    }
}

/// A region pattern: which set variables contain the region.
pub type BoolAssignment = BTreeMap<String, bool>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeVerdict {
    Unsat,
    /// Minimizing values of the size variables.
    Sat(BTreeMap<String, BigInt>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeOptions {
    /// Run size inference and the linear pre-check.
    pub infer: bool,
    /// Arrangements tried one by one, smallest first, before answering from
    /// the relaxed program. The relaxed optimum is already a minimal
    /// arrangement solution, so the default skips the enumeration.
    pub subset_budget: usize,
}

impl Default for SizeOptions {
    fn default() -> Self {
        SizeOptions { infer: true, subset_budget: 0 }
    }
}

fn set_name(t: &Term) -> Result<String, ModelError> {
    match t {
        Term::Var(v) => Ok(v.name.clone()),
        other => Err(ModelError::Internal(format!(
            "non-variable set term {other} reached the cardinality phase"
        ))),
    }
}

/// `lf rel 0` as a solver row.
pub fn lin_row(lf: &LinForm, rel: Rel) -> LinConstraint<Rational> {
    LinConstraint::new(
        lf.coeffs
            .iter()
            .map(|(v, c)| (v.clone(), Rational::from_integer(c.clone()))),
        rel,
        Rational::from_integer(-lf.constant.clone()),
    )
}

/// Lowers an integer comparison to one row.
pub fn int_row(c: &Constraint) -> Result<Option<LinConstraint<Rational>>, ModelError> {
    let diff = |a: &Term, b: &Term| -> Result<LinForm, ModelError> {
        Ok(normalize_int(a)?.minus(&normalize_int(b)?))
    };
    Ok(Some(match c {
        Constraint::Eq(a, b) if c.is_integer() => lin_row(&diff(a, b)?, Rel::Eq),
        Constraint::Leq(a, b) => lin_row(&diff(a, b)?, Rel::Le),
        Constraint::Lt(a, b) => lin_row(&diff(a, b)?, Rel::Lt),
        Constraint::Gt(a, b) => lin_row(&diff(b, a)?, Rel::Lt),
        Constraint::Geq(a, b) => lin_row(&diff(b, a)?, Rel::Le),
        _ => return Ok(None),
    }))
}

/// Maps the cardinality-relevant part of an irreducible store. Inequalities,
/// non-membership and other residue are dropped.
pub fn translate(phi1: &[Constraint]) -> Result<ZaProblem, ModelError> {
    let mut z = ZaProblem::default();
    for c in phi1 {
        match c {
            Constraint::Un(a, b, c) => z.unions.push([set_name(a)?, set_name(b)?, set_name(c)?]),
            Constraint::Disj(a, b) => z.disjoints.push([set_name(a)?, set_name(b)?]),
            Constraint::Size(a, m) => z.sizes.push((set_name(a)?, normalize_int(m)?)),
            other => {
                if let Some(row) = int_row(other)? {
                    z.int_constraints.push(row);
                }
            }
        }
    }
    Ok(z)
}

/// Propagates cardinalities through unions to a fixpoint: every argument of
/// a union with a sized argument gets a size, related by
/// `|C| ≤ |A| + |B|`, `|A| ≤ |C|`, `|B| ≤ |C|`. Two sizes of one set are
/// equated.
pub fn infer_size(z: &ZaProblem) -> ZaProblem {
    let mut out = z.clone();
    let mut size_of: BTreeMap<String, LinForm> = BTreeMap::new();
    let mut sizes = Vec::new();
    for (s, m) in &z.sizes {
        match size_of.get(s) {
            Some(prev) => out.int_constraints.push(lin_row(&prev.minus(m), Rel::Eq)),
            None => {
                size_of.insert(s.clone(), m.clone());
                sizes.push((s.clone(), m.clone()));
            }
        }
    }
    let mut counter = 0usize;
    let mut done = vec![false; z.unions.len()];
    loop {
        let mut changed = false;
        for (i, u) in z.unions.iter().enumerate() {
            if done[i] || !u.iter().any(|s| size_of.contains_key(s)) {
                continue;
            }
            done[i] = true;
            changed = true;
            for s in u {
                if !size_of.contains_key(s) {
                    counter += 1;
                    let m = LinForm::var(format!("#m{counter}"));
                    out.int_constraints.push(lin_row(&m.scaled(&-BigInt::one()), Rel::Le));
                    size_of.insert(s.clone(), m.clone());
                    sizes.push((s.clone(), m));
                }
            }
            let [ma, mb, mc] = [&size_of[&u[0]], &size_of[&u[1]], &size_of[&u[2]]];
            let mut sum = ma.clone();
            sum.add_scaled(mb, &BigInt::one());
            out.int_constraints.push(lin_row(&mc.minus(&sum), Rel::Le));
            out.int_constraints.push(lin_row(&ma.minus(mc), Rel::Le));
            out.int_constraints.push(lin_row(&mb.minus(mc), Rel::Le));
        }
        if !changed {
            break;
        }
    }
    out.sizes = sizes;
    out
}

/// Clauses over `vars` (in that order): per union `(A,B,C)`:
/// `(¬C∨A∨B) ∧ (¬A∨C) ∧ (¬B∨C)`; per disjoint pair `(¬A∨¬B)`.
pub fn encode_boolean(z: &ZaProblem, vars: &[String]) -> Cnf {
    let idx: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut cnf = Cnf::new(vars.len());
    for [a, b, c] in &z.unions {
        let (Some(&a), Some(&b), Some(&c)) = (idx.get(a.as_str()), idx.get(b.as_str()), idx.get(c.as_str()))
        else {
            continue;
        };
        cnf.add([sat::neg(c), sat::pos(a), sat::pos(b)]);
        cnf.add([sat::neg(a), sat::pos(c)]);
        cnf.add([sat::neg(b), sat::pos(c)]);
    }
    for [a, b] in &z.disjoints {
        let (Some(&a), Some(&b)) = (idx.get(a.as_str()), idx.get(b.as_str())) else {
            continue;
        };
        cnf.add([sat::neg(a), sat::neg(b)]);
    }
    cnf
}

/// All non-false satisfying region patterns.
pub fn sat_enumerate(cnf: &Cnf, vars: &[String], deadline: &Deadline) -> Result<Vec<BoolAssignment>, Timeout> {
    Ok(sat::enumerate(cnf, true, deadline)?
        .into_iter()
        .map(|m| vars.iter().cloned().zip(m).collect())
        .collect())
}

fn region_var(i: usize) -> String {
    format!("#v{i}")
}

/// Linear residue of an arrangement: `0 < v_π` for every chosen region and
/// `m = Σ_{π(x)=1} v_π` for every size pair `(x, m)`. Regions are identified
/// by their index into the full pattern list.
pub fn build_res_z(
    regions: &[(usize, &BoolAssignment)],
    sizes: &[(String, LinForm)],
) -> Vec<LinConstraint<Rational>> {
    let mut rows = Vec::new();
    for (i, _) in regions {
        rows.push(LinConstraint::new(
            [(region_var(*i), -Rational::one())],
            Rel::Lt,
            Rational::zero(),
        ));
    }
    rows.extend(size_rows(regions, sizes));
    rows
}

fn size_rows(regions: &[(usize, &BoolAssignment)], sizes: &[(String, LinForm)]) -> Vec<LinConstraint<Rational>> {
    sizes
        .iter()
        .map(|(x, m)| {
            let mut lf = m.clone();
            for (i, pi) in regions {
                if pi.get(x).copied().unwrap_or(false) {
                    lf.add_scaled(&LinForm::var(region_var(*i)), &-BigInt::one());
                }
            }
            lin_row(&lf, Rel::Eq)
        })
        .collect()
}

/// Keeps the union/disjointness structure connected to some sized set.
fn sized_part(z: &ZaProblem) -> ZaProblem {
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    fn find(p: &mut BTreeMap<String, String>, x: &str) -> String {
        let up = p.get(x).cloned().unwrap_or_else(|| x.to_string());
        if up == x {
            return up;
        }
        let r = find(p, &up);
        p.insert(x.to_string(), r.clone());
        r
    }
    let join = |p: &mut BTreeMap<String, String>, a: &str, b: &str| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p.insert(ra, rb);
        }
    };
    for [a, b, c] in &z.unions {
        join(&mut parent, a, b);
        join(&mut parent, b, c);
    }
    for [a, b] in &z.disjoints {
        join(&mut parent, a, b);
    }
    let sized: BTreeSet<String> = z.sizes.iter().map(|(s, _)| find(&mut parent, s)).collect();
    let mut out = z.clone();
    out.unions.retain(|u| sized.contains(&find(&mut parent, &u[0])));
    out.disjoints.retain(|d| sized.contains(&find(&mut parent, &d[0])));
    out
}

fn objective_vars(phi1: &[Constraint]) -> BTreeSet<String> {
    phi1.iter()
        .filter_map(|c| match c {
            Constraint::Size(_, Term::Var(v)) => Some(v.name.clone()),
            _ => None,
        })
        .collect()
}

/// Solves one arrangement's integer program, minimizing the size variables.
fn arrangement_ilp(
    base: &[LinConstraint<Rational>],
    res_z: Vec<LinConstraint<Rational>>,
    objective: &BTreeSet<String>,
    deadline: &Deadline,
) -> Result<Option<BTreeMap<String, BigInt>>, Timeout> {
    let mut p = LinProblem::new();
    p.constraints.extend(base.iter().cloned());
    p.constraints.extend(res_z);
    p.objective = objective.iter().map(|v| (v.clone(), Rational::one())).collect();
    let p = p.all_integer();
    let vertex = match bb_inf(&p, deadline)? {
        IlpResult::Infeasible => return Ok(None),
        IlpResult::Min { vertex, .. } => vertex,
        IlpResult::Unbounded => {
            let mut q = p.clone();
            q.objective.clear();
            match bb_inf(&q, deadline)? {
                IlpResult::Min { vertex, .. } => vertex,
                _ => return Ok(None),
            }
        }
    };
    Ok(Some(
        vertex
            .into_iter()
            .filter(|(k, _)| objective.contains(k))
            .collect(),
    ))
}

/// Decides the cardinality part of an irreducible store.
pub fn solve_size(phi1: &[Constraint], opts: &SizeOptions, deadline: &Deadline) -> Result<SizeVerdict, SizeError> {
    let z = translate(phi1)?;
    let objective = objective_vars(phi1);
    let z = if opts.infer {
        let z = infer_size(&z);
        let mut p = LinProblem::new();
        p.constraints = z.int_constraints.clone();
        for (_, m) in &z.sizes {
            p.push(lin_row(&m.scaled(&-BigInt::one()), Rel::Le));
        }
        let p = p.all_integer();
        if let LpResult::Infeasible(_) = lp_feasible(&p, deadline)? {
            return Ok(SizeVerdict::Unsat);
        }
        z
    } else {
        z
    };
    let z = sized_part(&z);
    let base = z.int_constraints.clone();

    // The empty arrangement: every set empty.
    if let Some(v) = arrangement_ilp(&base, size_rows(&[], &z.sizes), &objective, deadline)? {
        return Ok(SizeVerdict::Sat(v));
    }
    if z.sizes.is_empty() {
        return Ok(SizeVerdict::Unsat);
    }

    let vars: Vec<String> = z.set_vars().into_iter().collect();
    let cnf = encode_boolean(&z, &vars);
    let s = sat_enumerate(&cnf, &vars, deadline)?;
    if s.is_empty() {
        return Ok(SizeVerdict::Unsat);
    }
    let all: Vec<(usize, &BoolAssignment)> = s.iter().enumerate().collect();

    // Relaxed program over every pattern with v_π ≥ 0. Any arrangement's
    // solution extends to it by zeros, and the support of any of its
    // solutions is a feasible arrangement.
    let mut relaxed = base.clone();
    relaxed.extend(all.iter().map(|(i, _)| LinConstraint::lower(&region_var(*i), Rational::zero())));
    relaxed.extend(size_rows(&all, &z.sizes));
    let fallback = match arrangement_ilp(&relaxed, Vec::new(), &objective, deadline)? {
        None => return Ok(SizeVerdict::Unsat),
        Some(v) => v,
    };

    let mut budget = opts.subset_budget;
    for k in 1..=s.len() {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if budget == 0 {
                return Ok(SizeVerdict::Sat(fallback));
            }
            budget -= 1;
            deadline.check()?;
            let chosen: Vec<(usize, &BoolAssignment)> = idx.iter().map(|&i| (i, &s[i])).collect();
            if let Some(v) = arrangement_ilp(&base, build_res_z(&chosen, &z.sizes), &objective, deadline)? {
                return Ok(SizeVerdict::Sat(v));
            }
            if !next_combination(&mut idx, s.len()) {
                break;
            }
        }
    }
    // Unreachable in exact arithmetic: the relaxed program was feasible.
    Ok(SizeVerdict::Sat(fallback))
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
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

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SizeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Timeout(#[from] Timeout),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_in_order() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }
}
