//! Command implementations behind the `cardset` binary.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use cardset::bench::{run_bench, BenchOptions, BenchReport};
use cardset::parser::expand_macros;
use cardset::{parse, sat_card, AnswerFormula, Deadline, SolveOptions, SolveResult};

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerReport {
    pub bindings: BTreeMap<String, String>,
    pub residual: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<BTreeMap<String, String>>,
}

impl AnswerReport {
    fn from_answer(a: &AnswerFormula) -> Self {
        AnswerReport {
            bindings: a.bindings.iter().map(|(v, t)| (v.name.clone(), t.to_string())).collect(),
            residual: a.residual.iter().map(|c| c.to_string()).collect(),
            vertex: a
                .vertex
                .as_ref()
                .map(|vx| vx.iter().map(|(k, n)| (k.clone(), n.to_string())).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub verdict: Verdict,
    pub answers: Vec<AnswerReport>,
    pub millis: u64,
}

impl SolveReport {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Sat => EXIT_SAT,
            Verdict::Unsat => EXIT_UNSAT,
            Verdict::Timeout => EXIT_TIMEOUT,
        }
    }

    /// Bindings one per line, then the residual after `Constraint:`;
    /// answers separated by blank lines.
    pub fn to_plain(&self) -> String {
        let mut out = String::new();
        match self.verdict {
            Verdict::Unsat => out.push_str("no\n"),
            Verdict::Timeout => out.push_str("timeout\n"),
            Verdict::Sat => {
                for (i, a) in self.answers.iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    let binds: Vec<String> = a.bindings.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                    if binds.is_empty() && a.residual.is_empty() {
                        out.push_str("yes\n");
                        continue;
                    }
                    if !binds.is_empty() {
                        let _ = writeln!(out, "{}", binds.join(", "));
                    }
                    if !a.residual.is_empty() {
                        let _ = writeln!(out, "Constraint: {}", a.residual.join(", "));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub timeout_millis: Option<u64>,
    pub fix_size: bool,
    /// `None` for every answer, `Some(0)` for the first only.
    pub max_solutions: Option<usize>,
}

/// Errors that keep a script from being solved at all.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn solve_text(text: &str, opts: &RunOptions) -> Result<SolveReport, InputError> {
    let start = Instant::now();
    let script = parse(text).map_err(|e| InputError(e.to_string()))?;
    let f = expand_macros(&script).map_err(|e| InputError(e.to_string()))?;
    let so = SolveOptions {
        deadline: Deadline::from_millis(opts.timeout_millis),
        fix_size: opts.fix_size,
        max_solutions: opts.max_solutions,
        ..SolveOptions::default()
    };
    let result = sat_card(&f, &so).map_err(|e| InputError(e.to_string()))?;
    let (verdict, answers) = match &result {
        SolveResult::Sat(a) => (Verdict::Sat, a.iter().map(AnswerReport::from_answer).collect()),
        SolveResult::Unsat => (Verdict::Unsat, Vec::new()),
        SolveResult::Timeout => (Verdict::Timeout, Vec::new()),
    };
    Ok(SolveReport { verdict, answers, millis: start.elapsed().as_millis() as u64 })
}

pub fn solve_file(path: &Path, opts: &RunOptions) -> Result<SolveReport, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    solve_text(&text, opts)
}

/// Exit code for a verification condition: 0 exactly when it is proved.
pub fn check_unsat_code(report: &SolveReport) -> i32 {
    match report.verdict {
        Verdict::Unsat => 0,
        Verdict::Sat => 1,
        Verdict::Timeout => EXIT_TIMEOUT,
    }
}

pub fn bench_dir(dir: &Path, opts: &BenchOptions) -> Result<BenchReport, InputError> {
    run_bench(dir, opts).map_err(|e| InputError(format!("{}: {e}", dir.display())))
}

pub fn bench_plain(r: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>6} {:>6} {:>9} {:>10} {:>10}", "collection", "sat", "unsat", "unsolved", "mismatch", "millis");
    for c in &r.collections {
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>6} {:>9} {:>10} {:>10}",
            c.name, c.sat_solved, c.unsat_solved, c.unsolved, c.mismatches, c.total_millis
        );
    }
    for f in r.files.iter().filter(|f| f.is_mismatch()) {
        let _ = writeln!(out, "mismatch: {} expected {:?} got {:?}", f.path, f.expected, f.verdict);
    }
    out
}
