//! Exact linear feasibility and integer minimization.
//!
//! A dense two-phase tableau simplex with Bland's rule, and a depth-first
//! branch and bound on top of it. Every variable is free unless bounded by a
//! constraint; internally each one is split into a difference of two
//! non-negative columns.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

use crate::deadline::Deadline;
use crate::error::Timeout;
use crate::scalar::ExactField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Le,
    Lt,
}

/// `Σ coeffs·x  rel  rhs`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinConstraint<F> {
    pub coeffs: BTreeMap<String, F>,
    pub rel: Rel,
    pub rhs: F,
}

impl<F: ExactField> LinConstraint<F> {
    pub fn new(coeffs: impl IntoIterator<Item = (String, F)>, rel: Rel, rhs: F) -> Self {
        let mut map: BTreeMap<String, F> = BTreeMap::new();
        for (v, c) in coeffs {
            let e = map.entry(v).or_insert_with(F::zero);
            *e = e.clone() + c;
        }
        map.retain(|_, c| !c.is_zero());
        LinConstraint { coeffs: map, rel, rhs }
    }

    /// `lo ≤ x`
    pub fn lower(var: &str, lo: F) -> Self {
        Self::new([(var.to_string(), -F::one())], Rel::Le, -lo)
    }

    /// `x ≤ hi`
    pub fn upper(var: &str, hi: F) -> Self {
        Self::new([(var.to_string(), F::one())], Rel::Le, hi)
    }

    pub fn lhs_at(&self, point: &BTreeMap<String, F>) -> F {
        self.coeffs.iter().fold(F::zero(), |acc, (v, c)| {
            acc + c.clone() * point.get(v).cloned().unwrap_or_else(F::zero)
        })
    }

    pub fn holds_at(&self, point: &BTreeMap<String, F>) -> bool {
        let l = self.lhs_at(point);
        match self.rel {
            Rel::Eq => l == self.rhs,
            Rel::Le => l <= self.rhs,
            Rel::Lt => l < self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinProblem<F> {
    pub constraints: Vec<LinConstraint<F>>,
    /// Variables required to take integer values.
    pub integers: BTreeSet<String>,
    /// Minimized; empty means pure feasibility.
    pub objective: BTreeMap<String, F>,
}

impl<F: ExactField> Default for LinProblem<F> {
    fn default() -> Self {
        LinProblem {
            constraints: Vec::new(),
            integers: BTreeSet::new(),
            objective: BTreeMap::new(),
        }
    }
}

impl<F: ExactField> LinProblem<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: LinConstraint<F>) {
        self.constraints.push(c);
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.integers.clone();
        for c in &self.constraints {
            out.extend(c.coeffs.keys().cloned());
        }
        out.extend(self.objective.keys().cloned());
        out
    }

    /// Declares every variable integral.
    pub fn all_integer(mut self) -> Self {
        self.integers = self.vars();
        self
    }

    pub fn objective_at(&self, point: &BTreeMap<String, F>) -> F {
        self.objective.iter().fold(F::zero(), |acc, (v, c)| {
            acc + c.clone() * point.get(v).cloned().unwrap_or_else(F::zero)
        })
    }

    /// Rewrites strict inequalities over integer variables as `≤ rhs - 1`
    /// after scaling to integer coefficients. Strict rows that mention a
    /// non-integer variable are kept.
    pub fn normalized(&self) -> Vec<LinConstraint<F>> {
        self.constraints
            .iter()
            .map(|c| self.tighten(c, false).unwrap_or_else(|| c.clone()))
            .collect()
    }

    /// Integer-normalizes one row. With `cut` set, `≤` rows are also divided by
    /// the coefficient gcd and rounded down. Returns `None` when the row has a
    /// non-integer variable.
    fn tighten(&self, c: &LinConstraint<F>, cut: bool) -> Option<LinConstraint<F>> {
        if c.rel != Rel::Lt && !cut {
            return Some(c.clone());
        }
        if !c.coeffs.keys().all(|v| self.integers.contains(v)) {
            return None;
        }
        let (coeffs, rhs) = integer_row(c)?;
        let rel = c.rel;
        let g = coeffs
            .values()
            .fold(BigInt::zero(), |g, a| g.gcd(a));
        let (coeffs, rhs, rel) = match rel {
            Rel::Lt => (coeffs, rhs - BigInt::one(), Rel::Le),
            r => (coeffs, rhs, r),
        };
        let (coeffs, rhs) = if cut && rel == Rel::Le && !g.is_zero() && !g.is_one() {
            let rhs = rhs.div_floor(&g);
            (coeffs.into_iter().map(|(v, a)| (v, a / &g)).collect(), rhs)
        } else {
            (coeffs, rhs)
        };
        Some(LinConstraint {
            coeffs: coeffs
                .into_iter()
                .map(|(v, a)| (v, F::from_bigint(&a)))
                .collect(),
            rel,
            rhs: F::from_bigint(&rhs),
        })
    }
}

/// Scales a row by the lcm of its denominators.
fn integer_row<F: ExactField>(c: &LinConstraint<F>) -> Option<(BTreeMap<String, BigInt>, BigInt)> {
    let mut scale = F::one();
    for _ in 0..64 {
        let all = c
            .coeffs
            .values()
            .chain(std::iter::once(&c.rhs))
            .map(|x| (x.clone() * scale.clone()).to_bigint())
            .collect::<Option<Vec<_>>>();
        if let Some(ints) = all {
            let mut it = ints.into_iter();
            let coeffs = c.coeffs.keys().cloned().zip(it.by_ref()).collect();
            return Some((coeffs, it.next().unwrap()));
        }
        // Multiply by the first denominator found and retry.
        let bad = c
            .coeffs
            .values()
            .chain(std::iter::once(&c.rhs))
            .map(|x| x.clone() * scale.clone())
            .find(|x| !x.is_integral())?;
        let mut k = F::one();
        while !(bad.clone() * k.clone()).is_integral() {
            k = k + F::one();
        }
        scale = scale * k;
    }
    None
}

/// Dual multipliers proving infeasibility: `λᵢ ≥ 0` on inequality rows and
/// `Σ λᵢ·aᵢ = 0` while `Σ λᵢ·bᵢ < 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Farkas<F> {
    pub multipliers: Vec<F>,
}

impl<F: ExactField> Farkas<F> {
    /// Re-checks the certificate against rows in exact arithmetic.
    pub fn verify(&self, rows: &[LinConstraint<F>]) -> bool {
        if self.multipliers.len() != rows.len() {
            return false;
        }
        let mut combo: BTreeMap<&str, F> = BTreeMap::new();
        let mut rhs = F::zero();
        for (l, r) in self.multipliers.iter().zip(rows) {
            match r.rel {
                Rel::Eq => {}
                Rel::Le | Rel::Lt => {
                    if l.is_negative() {
                        return false;
                    }
                }
            }
            for (v, a) in &r.coeffs {
                let e = combo.entry(v.as_str()).or_insert_with(F::zero);
                *e = e.clone() + l.clone() * a.clone();
            }
            rhs = rhs + l.clone() * r.rhs.clone();
        }
        let strict_used = self
            .multipliers
            .iter()
            .zip(rows)
            .any(|(l, r)| r.rel == Rel::Lt && l.is_positive());
        combo.values().all(Zero::is_zero) && (rhs.is_negative() || (strict_used && rhs.is_zero()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpResult<F> {
    /// The certificate refers to [`LinProblem::normalized`] rows. It is absent
    /// only when a strict row over non-integer variables is involved.
    Infeasible(Option<Farkas<F>>),
    Feasible(BTreeMap<String, F>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IlpResult<F> {
    Infeasible,
    /// Integer points exist but the objective has no lower bound.
    Unbounded,
    Min { value: F, vertex: BTreeMap<String, BigInt> },
}

impl<F> IlpResult<F> {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, IlpResult::Infeasible)
    }
}

/// Rational feasibility.
pub fn lp_feasible<F: ExactField>(p: &LinProblem<F>, deadline: &Deadline) -> Result<LpResult<F>, Timeout> {
    let rows = p.normalized();
    let vars: Vec<String> = p.vars().into_iter().collect();
    if rows.iter().any(|r| r.rel == Rel::Lt) {
        return strict_feasible(&rows, &vars, deadline);
    }
    let tab = Tableau::build(&rows, &vars);
    match tab.solve(&BTreeMap::new(), deadline)? {
        LpOutcome::Infeasible(l) => Ok(LpResult::Infeasible(Some(Farkas { multipliers: l }))),
        LpOutcome::Optimal(x, _) | LpOutcome::Unbounded(x) => Ok(LpResult::Feasible(x)),
    }
}

/// Strict rows over rationals: maximize a shared slack `t ≤ 1` in every
/// strict row and report feasibility iff it can be positive.
fn strict_feasible<F: ExactField>(
    rows: &[LinConstraint<F>],
    vars: &[String],
    deadline: &Deadline,
) -> Result<LpResult<F>, Timeout> {
    let t = "\u{0}t".to_string();
    let mut lifted: Vec<LinConstraint<F>> = rows
        .iter()
        .map(|r| {
            if r.rel == Rel::Lt {
                let mut c = r.clone();
                c.coeffs.insert(t.clone(), F::one());
                c.rel = Rel::Le;
                c
            } else {
                r.clone()
            }
        })
        .collect();
    lifted.push(LinConstraint::upper(&t, F::one()));
    let mut all = vars.to_vec();
    all.push(t.clone());
    let tab = Tableau::build(&lifted, &all);
    let obj: BTreeMap<String, F> = [(t.clone(), -F::one())].into_iter().collect();
    match tab.solve(&obj, deadline)? {
        LpOutcome::Infeasible(_) => Ok(LpResult::Infeasible(None)),
        LpOutcome::Optimal(mut x, _) | LpOutcome::Unbounded(mut x) => {
            let tv = x.remove(&t).unwrap_or_else(F::zero);
            if tv.is_positive() {
                Ok(LpResult::Feasible(x))
            } else {
                Ok(LpResult::Infeasible(None))
            }
        }
    }
}

/// Rational minimum of the objective, ignoring integrality.
pub fn lp_minimize<F: ExactField>(
    p: &LinProblem<F>,
    deadline: &Deadline,
) -> Result<Option<(F, BTreeMap<String, F>)>, Timeout> {
    let rows = p.normalized();
    let vars: Vec<String> = p.vars().into_iter().collect();
    match Tableau::build(&rows, &vars).solve(&p.objective, deadline)? {
        LpOutcome::Optimal(x, v) => Ok(Some((v, x))),
        _ => Ok(None),
    }
}

/// Integer minimization by branch and bound over the LP relaxation.
/// All variables are treated as integral.
pub fn bb_inf<F: ExactField>(p: &LinProblem<F>, deadline: &Deadline) -> Result<IlpResult<F>, Timeout> {
    let mut p = p.clone();
    p.integers = p.vars();
    let vars: Vec<String> = p.integers.iter().cloned().collect();
    let mut rows = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let r = p.tighten(c, true).expect("all variables are integral");
        if r.rel == Rel::Eq && !gcd_divides(&r) {
            return Ok(IlpResult::Infeasible);
        }
        if r.coeffs.is_empty() {
            let ok = match r.rel {
                Rel::Eq => r.rhs.is_zero(),
                Rel::Le => !r.rhs.is_negative(),
                Rel::Lt => r.rhs.is_positive(),
            };
            if !ok {
                return Ok(IlpResult::Infeasible);
            }
            continue;
        }
        if !rows.contains(&r) {
            rows.push(r);
        }
    }
    let integral_obj = p.objective.values().all(|c| c.is_integral());
    let mut bb = BranchAndBound {
        vars: &vars,
        objective: p.objective.clone(),
        integral_obj,
        best: None,
        deadline,
        unbounded: false,
    };
    bb.node(&mut rows)?;
    if bb.unbounded {
        // Meyer: over a rational polyhedron an unbounded relaxation means the
        // integer program is unbounded as soon as it has one integer point.
        let mut feas = BranchAndBound {
            vars: &vars,
            objective: BTreeMap::new(),
            integral_obj: true,
            best: None,
            deadline,
            unbounded: false,
        };
        feas.node(&mut rows)?;
        return Ok(match feas.best {
            Some(_) => IlpResult::Unbounded,
            None => IlpResult::Infeasible,
        });
    }
    Ok(match bb.best {
        None => IlpResult::Infeasible,
        Some((value, x)) => IlpResult::Min {
            value,
            vertex: vars
                .iter()
                .map(|v| {
                    let q = x.get(v).cloned().unwrap_or_else(F::zero);
                    (v.clone(), q.to_bigint().expect("integral vertex"))
                })
                .collect(),
        },
    })
}

fn gcd_divides<F: ExactField>(r: &LinConstraint<F>) -> bool {
    let g = r
        .coeffs
        .values()
        .filter_map(|c| c.to_bigint())
        .fold(BigInt::zero(), |g, a| g.gcd(&a));
    match r.rhs.to_bigint() {
        Some(b) if !g.is_zero() => (b % g).is_zero(),
        _ => true,
    }
}

struct BranchAndBound<'a, F> {
    vars: &'a [String],
    objective: BTreeMap<String, F>,
    integral_obj: bool,
    best: Option<(F, BTreeMap<String, F>)>,
    deadline: &'a Deadline,
    unbounded: bool,
}

impl<F: ExactField> BranchAndBound<'_, F> {
    fn node(&mut self, rows: &mut Vec<LinConstraint<F>>) -> Result<(), Timeout> {
        self.deadline.check()?;
        let (x, value) = match Tableau::build(rows, self.vars).solve(&self.objective, self.deadline)? {
            LpOutcome::Infeasible(_) => return Ok(()),
            LpOutcome::Unbounded(_) => {
                self.unbounded = true;
                return Ok(());
            }
            LpOutcome::Optimal(x, v) => (x, v),
        };
        if let Some((best, _)) = &self.best {
            let bound = if self.integral_obj { value.ceil_value() } else { value.clone() };
            if bound >= *best {
                return Ok(());
            }
        }
        let branch = self
            .vars
            .iter()
            .filter_map(|v| {
                let q = x.get(v).cloned().unwrap_or_else(F::zero);
                (!q.is_integral()).then(|| (q.fractionality(), v, q))
            })
            // Most fractional; ties go to the first variable.
            .fold(None::<(F, &String, F)>, |acc, cand| match acc {
                Some(a) if a.0 >= cand.0 => Some(a),
                _ => Some(cand),
            });
        match branch {
            None => {
                self.best = Some((value, x));
                Ok(())
            }
            Some((_, v, q)) => {
                rows.push(LinConstraint::upper(v, q.floor_value()));
                let r = self.node(rows);
                rows.pop();
                r?;
                if self.unbounded {
                    return Ok(());
                }
                rows.push(LinConstraint::lower(v, q.ceil_value()));
                let r = self.node(rows);
                rows.pop();
                r
            }
        }
    }
}

enum LpOutcome<F> {
    /// Farkas multipliers, one per input row.
    Infeasible(Vec<F>),
    Optimal(BTreeMap<String, F>, F),
    Unbounded(BTreeMap<String, F>),
}

/// Columns: `x⁺` for every variable, then `x⁻`, then one slack per `≤` row,
/// then one artificial per row.
struct Tableau<'a, F> {
    vars: &'a [String],
    t: Vec<Vec<F>>,
    basis: Vec<usize>,
    /// Row sign applied to make the right-hand side non-negative.
    signs: Vec<bool>,
    n: usize,
    art0: usize,
    cols: usize,
}

impl<'a, F: ExactField> Tableau<'a, F> {
    fn build(rows: &[LinConstraint<F>], vars: &'a [String]) -> Self {
        let n = vars.len();
        let index: BTreeMap<&str, usize> =
            vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let slacks = rows.iter().filter(|r| r.rel != Rel::Eq).count();
        let art0 = 2 * n + slacks;
        let m = rows.len();
        let cols = art0 + m;
        let mut t = Vec::with_capacity(m);
        let mut signs = Vec::with_capacity(m);
        let mut slack = 2 * n;
        for (i, r) in rows.iter().enumerate() {
            let mut row = vec![F::zero(); cols + 1];
            for (v, a) in &r.coeffs {
                let j = index[v.as_str()];
                row[j] = a.clone();
                row[n + j] = -a.clone();
            }
            if r.rel != Rel::Eq {
                row[slack] = F::one();
                slack += 1;
            }
            row[cols] = r.rhs.clone();
            let neg = r.rhs.is_negative();
            if neg {
                for x in row.iter_mut() {
                    *x = -x.clone();
                }
            }
            row[art0 + i] = F::one();
            signs.push(neg);
            t.push(row);
        }
        Tableau { vars, t, basis: (art0..art0 + m).collect(), signs, n, art0, cols }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [F]) {
        let p = self.t[r][c].clone();
        if !p.is_one() {
            for x in self.t[r].iter_mut() {
                *x = x.clone() / p.clone();
            }
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_zero() {
                continue;
            }
            for (x, y) in row.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
        let f = obj[c].clone();
        if !f.is_zero() {
            for (x, y) in obj.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule simplex on `obj` (reduced costs, last entry `-z`).
    /// Columns `>= limit` never enter. Returns false when unbounded.
    fn optimize(&mut self, obj: &mut [F], limit: usize, deadline: &Deadline) -> Result<bool, Timeout> {
        loop {
            deadline.check()?;
            let Some(c) = (0..limit).find(|&j| obj[j].is_negative()) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, F)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = row[self.cols].clone() / row[c].clone();
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best || (ratio == best && self.basis[i] < self.basis[k]) {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c, obj),
            }
        }
    }

    fn solve(mut self, objective: &BTreeMap<String, F>, deadline: &Deadline) -> Result<LpOutcome<F>, Timeout> {
        let m = self.t.len();
        let cols = self.cols;
        // Phase 1: minimize the sum of artificials.
        let mut obj = vec![F::zero(); cols + 1];
        for row in &self.t {
            for j in 0..self.art0 {
                obj[j] = obj[j].clone() - row[j].clone();
            }
            obj[cols] = obj[cols].clone() - row[cols].clone();
        }
        self.optimize(&mut obj, self.art0, deadline)?;
        if obj[cols].is_negative() {
            // y_i = 1 - d(art_i); multiplier for the original row is -y_i·sign_i.
            let lambda = (0..m)
                .map(|i| {
                    let y = F::one() - obj[self.art0 + i].clone();
                    if self.signs[i] { y } else { -y }
                })
                .collect();
            return Ok(LpOutcome::Infeasible(lambda));
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if self.basis[r] >= self.art0 {
                if let Some(c) = (0..self.art0).find(|&j| !self.t[r][j].is_zero()) {
                    self.pivot(r, c, &mut obj);
                }
            }
        }
        // Phase 2.
        let n = self.n;
        let mut cost = vec![F::zero(); cols];
        for (j, v) in self.vars.iter().enumerate() {
            if let Some(c) = objective.get(v) {
                cost[j] = c.clone();
                cost[n + j] = -c.clone();
            }
        }
        let mut obj = vec![F::zero(); cols + 1];
        obj[..cols].clone_from_slice(&cost);
        for (r, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[r]].clone();
            if cb.is_zero() {
                continue;
            }
            for (x, y) in obj.iter_mut().zip(row) {
                *x = x.clone() - cb.clone() * y.clone();
            }
        }
        let bounded = self.optimize(&mut obj, self.art0, deadline)?;
        let x = self.point();
        if bounded {
            Ok(LpOutcome::Optimal(x, -obj[cols].clone()))
        } else {
            Ok(LpOutcome::Unbounded(x))
        }
    }

    fn point(&self) -> BTreeMap<String, F> {
        let mut vals = vec![F::zero(); 2 * self.n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < 2 * self.n {
                vals[b] = self.t[r][self.cols].clone();
            }
        }
        self.vars
            .iter()
            .enumerate()
            .map(|(j, v)| (v.clone(), vals[j].clone() - vals[self.n + j].clone()))
            .collect()
    }
}
