//! The main solving loop: rewrite to an irreducible store, eliminate
//! inequalities on sized sets, then hand the cardinality part to the size
//! solver. Nondeterministic rules are explored depth first, alternatives in
//! the order the rule lists them.

use num_bigint::BigInt;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::deadline::Deadline;
use crate::error::{ModelError, Timeout};
use crate::ilp::{bb_inf, lp_feasible, IlpResult, LpResult};
use crate::rules::{self, eq, leq, mem, neq, nin, Fresh, Rewrite, RuleConfig};
use crate::size::{int_row, solve_size, SizeError, SizeOptions, SizeVerdict};
use crate::term::{normalize_int, sort_of, Constraint, Formula, Sort, Substitution, Term, Var};
use crate::LinProblem;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub deadline: Deadline,
    /// Instantiate size-constrained sets with minimal concrete values.
    pub fix_size: bool,
    /// `None` collects every answer; `Some(0)` behaves like `Some(1)`.
    pub max_solutions: Option<usize>,
    pub size: SizeOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            deadline: Deadline::none(),
            fix_size: false,
            max_solutions: None,
            size: SizeOptions::default(),
        }
    }
}

/// One solution family: bindings for the input variables plus the
/// irreducible constraints left over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerFormula {
    pub bindings: Substitution,
    pub residual: Vec<Constraint>,
    /// Minimizing values of the size variables, when the cardinality phase ran.
    pub vertex: Option<Vec<(String, BigInt)>>,
}

impl AnswerFormula {
    /// The answer as a formula over the input variables.
    pub fn to_formula(&self) -> Formula {
        Formula::and(
            self.bindings
                .iter()
                .map(|(v, t)| eq(Term::Var(v.clone()), t.clone()))
                .chain(self.residual.iter().cloned().map(Formula::Atom)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Unsat,
    Sat(Vec<AnswerFormula>),
    Timeout,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }
    pub fn answers(&self) -> &[AnswerFormula] {
        match self {
            SolveResult::Sat(a) => a,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone)]
pub struct GoalState {
    pub pending: VecDeque<Formula>,
    /// Disjunctions postponed until no deterministic work is left.
    pub choices: VecDeque<Vec<Formula>>,
    /// Irreducible constraints, fully substituted.
    pub store: Vec<Constraint>,
    pub bindings: Substitution,
    pub fresh: u64,
}

impl GoalState {
    pub fn new(f: Formula, fresh: u64) -> Self {
        GoalState {
            pending: VecDeque::from([f]),
            choices: VecDeque::new(),
            store: Vec::new(),
            bindings: Substitution::new(),
            fresh,
        }
    }

    fn bind(&mut self, v: Var, t: Term) {
        self.bindings.bind(v.clone(), t);
        let (hit, keep): (Vec<_>, Vec<_>) = std::mem::take(&mut self.store)
            .into_iter()
            .partition(|c| c.occurs(&v.name));
        self.store = keep;
        // Woken constraints go first so contradictions surface before the
        // search commits to further choices.
        for c in hit.into_iter().rev() {
            self.pending.push_front(Formula::Atom(c));
        }
    }

    fn keep(&mut self, c: Constraint) {
        if !self.store.contains(&c) {
            self.store.push(c);
        }
    }

    /// Integer rows of the store.
    fn int_problem(&self) -> Result<LinProblem, ModelError> {
        let mut p = LinProblem::new();
        for c in &self.store {
            if let Some(row) = int_row(c)? {
                p.push(row);
            }
        }
        Ok(p.all_integer())
    }
}

/// Conjoins `0 ≤ m` for every distinct size argument `m`.
pub fn gen_size_leq(f: &Formula) -> Formula {
    let mut seen = BTreeSet::new();
    let mut extra = Vec::new();
    for c in f.atoms() {
        if let Constraint::Size(_, m) = c {
            let key = normalize_int(m).ok();
            if seen.insert(key) {
                extra.push(leq(Term::int(0), m.clone()));
            }
        }
    }
    if extra.is_empty() {
        return f.clone();
    }
    Formula::and(std::iter::once(f.clone()).chain(extra))
}

/// Direct set-variable arguments of `un` and `size` in the store.
fn sized_vars(store: &[Constraint]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for c in store {
        let args: Vec<&Term> = match c {
            Constraint::Un(a, b, c) => vec![a, b, c],
            Constraint::Size(a, _) => vec![a],
            _ => continue,
        };
        for t in args {
            if let Term::Var(v) = t {
                out.insert(v.name.clone());
            }
        }
    }
    out
}

fn is_set_var(t: &Term, names: &BTreeSet<String>) -> bool {
    matches!(t, Term::Var(v) if v.sort == Sort::Set && names.contains(&v.name))
}

/// Replaces the first inequality `A ≠ t` whose set variable `A` is an
/// argument of a `un` or `size` constraint by three alternatives:
/// an element of `A` not in `t`, an element of `t` not in `A`, or
/// `A = ∅ ∧ t ≠ ∅` (only generated when `t` need not be a set).
pub fn remove_neq(state: &mut GoalState) -> Option<Vec<Formula>> {
    let names = sized_vars(&state.store);
    let i = state.store.iter().position(|c| match c {
        Constraint::Neq(l, r) => !c.is_integer() && (is_set_var(l, &names) || is_set_var(r, &names)),
        _ => false,
    })?;
    let Constraint::Neq(l, r) = state.store.remove(i) else { unreachable!() };
    let (a, t) = if is_set_var(&l, &names) { (l, r) } else { (r, l) };
    let n = Fresh(&mut state.fresh).elem();
    let mut alts = vec![
        Formula::and([mem(n.clone(), a.clone()), nin(n.clone(), t.clone())]),
        Formula::and([mem(n.clone(), t.clone()), nin(n, a.clone())]),
    ];
    if sort_of(&t).ok() != Some(Sort::Set) {
        alts.push(Formula::and([eq(a, Term::Empty), neq(t, Term::Empty)]));
    }
    Some(alts)
}

/// Whether no rule applies to `c` in `state`.
pub fn is_irreducible(c: &Constraint, state: &GoalState) -> bool {
    let mut counter = state.fresh;
    if rules::rewrite(c, &mut Fresh(&mut counter), RuleConfig::default()) != Rewrite::Store {
        return false;
    }
    let names = sized_vars(&state.store);
    match c {
        Constraint::Neq(l, r) if !c.is_integer() => !(is_set_var(l, &names) || is_set_var(r, &names)),
        _ => true,
    }
}

enum Leaf {
    Fail,
    Done,
    Branch(Vec<Formula>),
}

struct Search<'a> {
    opts: &'a SolveOptions,
    cfg: RuleConfig,
}

impl Search<'_> {
    /// Deterministic rewriting until a fixpoint, a failure or a choice.
    fn run(&self, st: &mut GoalState) -> Result<Leaf, Timeout> {
        loop {
            let Some(goal) = st.pending.pop_front() else {
                return Ok(match st.choices.pop_front() {
                    Some(alts) => Leaf::Branch(alts),
                    None => Leaf::Done,
                });
            };
            match goal {
                Formula::True => {}
                Formula::False => return Ok(Leaf::Fail),
                Formula::And(fs) => {
                    for f in fs.into_iter().rev() {
                        st.pending.push_front(f);
                    }
                }
                Formula::Or(fs) => st.choices.push_back(fs),
                Formula::Atom(c) => {
                    self.opts.deadline.check()?;
                    let c = st.bindings.apply_constraint(&c);
                    match rules::rewrite(&c, &mut Fresh(&mut st.fresh), self.cfg) {
                        Rewrite::True => {}
                        Rewrite::False => return Ok(Leaf::Fail),
                        Rewrite::Store => st.keep(c),
                        Rewrite::Bind(v, t) => st.bind(v, t),
                        Rewrite::Then(f) => st.pending.push_front(f),
                    }
                }
            }
        }
    }

    /// Depth-first search; `on_leaf` sees every fully rewritten state and
    /// returns whether to stop.
    fn explore(
        &self,
        start: GoalState,
        mut on_leaf: impl FnMut(GoalState) -> Result<bool, SolveFail>,
    ) -> Result<(), SolveFail> {
        let mut stack = vec![start];
        while let Some(mut st) = stack.pop() {
            match self.run(&mut st)? {
                Leaf::Fail => {}
                Leaf::Branch(alts) => push_alternatives(&mut stack, st, alts),
                Leaf::Done => {
                    if !int_feasible(&st, &self.opts.deadline)? {
                        continue;
                    }
                    if let Some(alts) = remove_neq(&mut st) {
                        push_alternatives(&mut stack, st, alts);
                        continue;
                    }
                    if on_leaf(st)? {
                        return Ok(());
                    }
                }
            }
        }
        Ok(())
    }
}

fn push_alternatives(stack: &mut Vec<GoalState>, st: GoalState, alts: Vec<Formula>) {
    for alt in alts.into_iter().rev() {
        let mut s = st.clone();
        s.pending.push_front(alt);
        stack.push(s);
    }
}

/// Rational feasibility of the integer store; prunes hopeless branches early.
fn int_feasible(st: &GoalState, deadline: &Deadline) -> Result<bool, SolveFail> {
    let p = st.int_problem()?;
    if p.constraints.is_empty() {
        return Ok(true);
    }
    Ok(matches!(lp_feasible(&p, deadline)?, LpResult::Feasible(_)))
}

enum SolveFail {
    Timeout,
    Model(ModelError),
}

impl From<Timeout> for SolveFail {
    fn from(_: Timeout) -> Self {
        SolveFail::Timeout
    }
}

impl From<ModelError> for SolveFail {
    fn from(e: ModelError) -> Self {
        SolveFail::Model(e)
    }
}

impl From<SizeError> for SolveFail {
    fn from(e: SizeError) -> Self {
        match e {
            SizeError::Model(m) => SolveFail::Model(m),
            SizeError::Timeout(_) => SolveFail::Timeout,
        }
    }
}

/// Highest `k` among input variables named like fresh ones, so generated
/// names never clash with them.
fn fresh_start(vars: &[Var]) -> u64 {
    vars.iter()
        .filter_map(|v| v.name.strip_prefix(crate::term::FRESH_PREFIX)?.parse::<u64>().ok())
        .max()
        .unwrap_or(0)
}

/// Decides `f`, returning answers in search order.
pub fn sat_card(f: &Formula, opts: &SolveOptions) -> Result<SolveResult, ModelError> {
    f.check_sorts()?;
    let vars = f.vars();
    let inputs: BTreeSet<String> = vars.iter().filter(|v| !v.is_fresh()).map(|v| v.name.clone()).collect();
    let start = GoalState::new(gen_size_leq(f), fresh_start(&vars));
    let limit = match opts.max_solutions {
        None => usize::MAX,
        Some(n) => n.max(1),
    };
    let search = Search { opts, cfg: RuleConfig::default() };
    let mut answers: Vec<AnswerFormula> = Vec::new();
    let mut keys = BTreeSet::new();
    let outcome = search.explore(start, |st| {
        let phi1: Vec<Constraint> = st
            .store
            .iter()
            .filter(|c| {
                c.is_integer() || matches!(c, Constraint::Un(..) | Constraint::Disj(..) | Constraint::Size(..))
            })
            .cloned()
            .collect();
        let vertex = match solve_size(&phi1, &opts.size, &opts.deadline)? {
            SizeVerdict::Unsat => return Ok(false),
            SizeVerdict::Sat(v) => v,
        };
        let answer = if opts.fix_size {
            match fix_size(st, &vertex, opts)? {
                Some(s) => make_answer(&s, &inputs, Some(&vertex)),
                None => return Ok(false),
            }
        } else {
            make_answer(&st, &inputs, Some(&vertex))
        };
        if keys.insert(answer_key(&answer)) {
            answers.push(answer);
        }
        Ok(answers.len() >= limit)
    });
    match outcome {
        Ok(()) => Ok(if answers.is_empty() { SolveResult::Unsat } else { SolveResult::Sat(answers) }),
        Err(SolveFail::Timeout) if !answers.is_empty() => Ok(SolveResult::Sat(answers)),
        Err(SolveFail::Timeout) => Ok(SolveResult::Timeout),
        Err(SolveFail::Model(e)) => Err(e),
    }
}

/// Re-runs the rewriting on `Φ' ∧ ⋀ mᵢ = Vᵢ` with positive constant sizes
/// expanded into distinct fresh elements. Returns the first resulting state
/// whose integer store has an integer solution.
fn fix_size(
    st: GoalState,
    vertex: &BTreeMap<String, BigInt>,
    opts: &SolveOptions,
) -> Result<Option<GoalState>, SolveFail> {
    let mut start = st;
    // Stored sizes are irreducible without const3; give them another pass.
    let (sizes, rest): (Vec<_>, Vec<_>) =
        std::mem::take(&mut start.store).into_iter().partition(|c| matches!(c, Constraint::Size(..)));
    start.store = rest;
    start.pending.extend(sizes.into_iter().map(Formula::Atom));
    for (m, v) in vertex {
        start
            .pending
            .push_back(eq(Term::int_var(m.clone()), Term::Int(v.clone())));
    }
    let search = Search { opts, cfg: RuleConfig { const3: true } };
    let mut found = None;
    search.explore(start, |leaf| {
        let p = leaf.int_problem()?;
        if !p.constraints.is_empty() && !bb_inf(&p, &opts.deadline)?.is_feasible() {
            return Ok(false);
        }
        found = Some(leaf);
        Ok(true)
    })?;
    Ok(found)
}

fn make_answer(st: &GoalState, inputs: &BTreeSet<String>, vertex: Option<&BTreeMap<String, BigInt>>) -> AnswerFormula {
    let bindings = Substitution::from_pairs(
        st.bindings.restrict(inputs).iter().map(|(v, t)| (v.clone(), t.dedup_elems())),
    );
    let mut residual: Vec<Constraint> = Vec::new();
    for c in &st.store {
        let c = orient(c.map_terms(Term::dedup_elems));
        if !residual.contains(&c) {
            residual.push(c);
        }
    }
    canonicalize(AnswerFormula {
        bindings,
        residual,
        vertex: vertex.map(|v| v.iter().map(|(k, x)| (k.clone(), x.clone())).collect()),
    })
}

/// Puts inequalities in a canonical orientation: variable first, then by
/// term order.
fn orient(c: Constraint) -> Constraint {
    match c {
        Constraint::Neq(l, r) => {
            let swap = match (&l, &r) {
                (Term::Var(_), Term::Var(_)) => l > r,
                (Term::Var(_), _) => false,
                (_, Term::Var(_)) => true,
                _ => l > r,
            };
            if swap { Constraint::Neq(r, l) } else { Constraint::Neq(l, r) }
        }
        c => c,
    }
}

/// Renames solver variables to `_N1, _N2, ...` in order of first appearance.
fn canonicalize(a: AnswerFormula) -> AnswerFormula {
    let mut order: Vec<Var> = Vec::new();
    for (_, t) in a.bindings.iter() {
        t.collect_vars(&mut order);
    }
    for c in &a.residual {
        c.collect_vars(&mut order);
    }
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for v in order.iter().filter(|v| v.is_fresh()) {
        let k = map.len() + 1;
        map.entry(v.name.clone())
            .or_insert_with(|| format!("{}{k}", crate::term::FRESH_PREFIX));
    }
    let rename = |t: &Term| {
        t.map_vars(&mut |v| match map.get(&v.name) {
            Some(n) => Term::var(n.clone(), v.sort),
            None => Term::Var(v.clone()),
        })
    };
    AnswerFormula {
        bindings: Substitution::from_pairs(a.bindings.iter().map(|(v, t)| (v.clone(), rename(t)))),
        residual: a.residual.iter().map(|c| orient(c.map_terms(&rename))).collect(),
        // Size variables that no longer occur in the answer are dropped.
        vertex: a.vertex.map(|vx| {
            vx.into_iter()
                .filter_map(|(k, x)| match map.get(&k) {
                    Some(n) => Some((n.clone(), x)),
                    None if !k.starts_with('_') => Some((k, x)),
                    None => None,
                })
                .collect()
        }),
    }
}

fn answer_key(a: &AnswerFormula) -> (Vec<(String, Term)>, Vec<Constraint>) {
    let b = a.bindings.iter().map(|(v, t)| (v.name.clone(), t.clone())).collect();
    let mut r = a.residual.clone();
    r.sort();
    (b, r)
}

/// Whether `f` has an integer-feasible answer, ignoring answer contents.
pub fn is_satisfiable(f: &Formula, deadline: Deadline) -> Result<Option<bool>, ModelError> {
    let opts = SolveOptions { deadline, max_solutions: Some(1), ..SolveOptions::default() };
    Ok(match sat_card(f, &opts)? {
        SolveResult::Sat(_) => Some(true),
        SolveResult::Unsat => Some(false),
        SolveResult::Timeout => None,
    })
}

/// Integer values for the residual integer constraints of an answer, if any.
pub fn int_witness(residual: &[Constraint], deadline: &Deadline) -> Result<Option<BTreeMap<String, BigInt>>, ModelError> {
    let mut p = LinProblem::new();
    for c in residual {
        if let Some(row) = int_row(c)? {
            p.push(row);
        }
    }
    let p = p.all_integer();
    Ok(match bb_inf(&p, deadline) {
        Ok(IlpResult::Min { vertex, .. }) => Some(vertex),
        Ok(IlpResult::Unbounded) => {
            let mut q = p.clone();
            q.objective.clear();
            match bb_inf(&q, deadline) {
                Ok(IlpResult::Min { vertex, .. }) => Some(vertex),
                _ => None,
            }
        }
        _ => None,
    })
}
