#![allow(dead_code)]

use cardset::oracle::Scope;
use cardset::{parse_formula, sat_card, Formula, SolveOptions, SolveResult};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn formula(src: &str) -> Formula {
    parse_formula(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn solve(src: &str) -> SolveResult {
    solve_with(src, SolveOptions::default())
}

pub fn solve_with(src: &str, opts: SolveOptions) -> SolveResult {
    sat_card(&formula(src), &opts).unwrap_or_else(|e| panic!("{src}: {e}"))
}

/// Answer formulas rendered as text, one per answer.
pub fn answers(src: &str) -> Vec<String> {
    solve(src).answers().iter().map(|a| a.to_formula().to_string()).collect()
}

const SET_VARS: [&str; 4] = ["A", "B", "C", "D"];
const INT_VARS: [&str; 3] = ["N", "M", "K"];

/// Small random formulas over sets of `0..=2`, one nesting level deep.
pub struct FormulaGen<'r, R: Rng> {
    pub rng: &'r mut R,
}

impl<R: Rng> FormulaGen<'_, R> {
    fn set_var(&mut self) -> String {
        SET_VARS.choose(self.rng).unwrap().to_string()
    }

    fn int_var(&mut self) -> String {
        INT_VARS.choose(self.rng).unwrap().to_string()
    }

    fn elem(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=4 => self.rng.gen_range(0..=2).to_string(),
            5..=6 => self.int_var(),
            7..=8 => format!("{{{}}}", self.rng.gen_range(0..=2)),
            _ => self.set_var(),
        }
    }

    fn set_term(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0..=5 => self.set_var(),
            6 => "{}".into(),
            7 => format!("{{{}}}", self.elem()),
            8 => format!("{{{},{}}}", self.elem(), self.elem()),
            _ => format!("{{{} / {}}}", self.elem(), self.set_var()),
        }
    }

    fn int_term(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..=3).to_string(),
            1 => format!("{} + {}", self.int_var(), self.rng.gen_range(1..=2)),
            _ => self.int_var(),
        }
    }

    fn atom(&mut self) -> String {
        match self.rng.gen_range(0..10) {
            0 => format!("{} = {}", self.set_var(), self.set_term()),
            1 => format!("{} neq {}", self.set_term(), self.set_term()),
            2 => format!("{} in {}", self.elem(), self.set_term()),
            3 => format!("{} nin {}", self.elem(), self.set_term()),
            4 => format!("un({},{},{})", self.set_term(), self.set_term(), self.set_term()),
            5 => format!("disj({},{})", self.set_term(), self.set_term()),
            6 => format!("inters({},{},{})", self.set_term(), self.set_term(), self.set_term()),
            7 => format!("subset({},{})", self.set_term(), self.set_term()),
            8 => {
                let m = if self.rng.gen_bool(0.7) { self.int_var() } else { self.rng.gen_range(0..=3).to_string() };
                format!("size({},{})", self.set_term(), m)
            }
            _ => format!("{} =< {}", self.int_term(), self.int_term()),
        }
    }

    /// Concrete syntax for a conjunction of 1 to 6 atoms. Candidates that
    /// fail sort checking are redrawn.
    pub fn formula(&mut self) -> (String, Formula) {
        loop {
            let n = self.rng.gen_range(1..=6);
            let atoms: Vec<String> = (0..n).map(|_| self.atom()).collect();
            let src = format!("{}.", atoms.join(" & "));
            if let Ok(f) = parse_formula(&src) {
                return (src, f);
            }
        }
    }
}

/// Search scope matching the generator: elements `0..=2`, one nesting level.
pub fn random_suite_scope() -> Scope {
    Scope {
        ur_universe: Vec::new(),
        int_box: (-1, 3),
        elem_ints: vec![0, 1, 2],
        max_nest: 1,
        max_width: 3,
        budget: 400_000,
    }
}

/// Scope used to ground solver answers.
pub fn grounding_scope() -> Scope {
    Scope {
        ur_universe: Vec::new(),
        int_box: (-1, 6),
        elem_ints: vec![0, 1, 2],
        max_nest: 1,
        max_width: 3,
        budget: 400_000,
    }
}
