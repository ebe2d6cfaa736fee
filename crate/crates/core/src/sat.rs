//! DPLL with unit propagation, and all-solutions enumeration by blocking
//! clauses.

use crate::deadline::Deadline;
use crate::error::Timeout;

/// Literal over variable `v`: `v + 1` positive, `-(v + 1)` negated.
pub type Lit = i32;

pub fn pos(v: usize) -> Lit {
    v as Lit + 1
}

pub fn neg(v: usize) -> Lit {
    -(v as Lit + 1)
}

fn var_of(l: Lit) -> usize {
    (l.unsigned_abs() - 1) as usize
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Self {
        Cnf { num_vars, clauses: Vec::new() }
    }

    pub fn add(&mut self, clause: impl IntoIterator<Item = Lit>) {
        self.clauses.push(clause.into_iter().collect());
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| assignment[var_of(l)] == (l > 0)))
    }
}

/// One satisfying total assignment, unassigned variables set to false.
pub fn solve(cnf: &Cnf) -> Option<Vec<bool>> {
    let mut asg = vec![None; cnf.num_vars];
    dpll(&cnf.clauses, &mut asg).then(|| asg.into_iter().map(|x| x.unwrap_or(false)).collect())
}

/// Every satisfying total assignment, in lexicographic order (false < true).
/// With `nonzero` the all-false assignment is excluded.
pub fn enumerate(cnf: &Cnf, nonzero: bool, deadline: &Deadline) -> Result<Vec<Vec<bool>>, Timeout> {
    let mut clauses = cnf.clauses.clone();
    if nonzero {
        if cnf.num_vars == 0 {
            return Ok(Vec::new());
        }
        clauses.push((0..cnf.num_vars).map(pos).collect());
    }
    let mut out = Vec::new();
    loop {
        deadline.check()?;
        let mut asg = vec![None; cnf.num_vars];
        if !dpll(&clauses, &mut asg) {
            break;
        }
        let model: Vec<bool> = asg.into_iter().map(|x| x.unwrap_or(false)).collect();
        clauses.push(
            model
                .iter()
                .enumerate()
                .map(|(v, &b)| if b { neg(v) } else { pos(v) })
                .collect(),
        );
        out.push(model);
    }
    out.sort();
    Ok(out)
}

fn dpll(clauses: &[Vec<Lit>], asg: &mut Vec<Option<bool>>) -> bool {
    let mut trail = Vec::new();
    if !propagate(clauses, asg, &mut trail) {
        undo(asg, &trail);
        return false;
    }
    let Some(v) = asg.iter().position(Option::is_none) else {
        return true;
    };
    for value in [false, true] {
        asg[v] = Some(value);
        if dpll(clauses, asg) {
            return true;
        }
        asg[v] = None;
    }
    undo(asg, &trail);
    false
}

fn undo(asg: &mut [Option<bool>], trail: &[usize]) {
    for &v in trail {
        asg[v] = None;
    }
}

/// Unit propagation to a fixpoint. Returns false on a conflict.
fn propagate(clauses: &[Vec<Lit>], asg: &mut [Option<bool>], trail: &mut Vec<usize>) -> bool {
    loop {
        let mut changed = false;
        for c in clauses {
            let mut unassigned = None;
            let mut count = 0;
            let mut sat = false;
            for &l in c {
                match asg[var_of(l)] {
                    Some(b) if b == (l > 0) => {
                        sat = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        count += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            match count {
                0 => return false,
                1 => {
                    let l = unassigned.unwrap();
                    asg[var_of(l)] = Some(l > 0);
                    trail.push(var_of(l));
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contradiction_has_no_models() {
        let mut cnf = Cnf::new(1);
        cnf.add([pos(0)]);
        cnf.add([neg(0)]);
        assert!(enumerate(&cnf, true, &Deadline::none()).unwrap().is_empty());
        assert!(solve(&cnf).is_none());
    }

    #[test]
    fn empty_cnf_single_var() {
        let cnf = Cnf::new(1);
        assert_eq!(enumerate(&cnf, true, &Deadline::none()).unwrap(), vec![vec![true]]);
    }
}
